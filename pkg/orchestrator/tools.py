# orchestrator/tools.py
"""Steps of the simplify pipeline. Each takes the pipeline state and returns the keys it adds."""
import logging
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict

import numpy as np

import config
from core.binarizer import collect_statements
from core.em import em_sweep
from core.errors import ConfigError, TaskMismatchError
from core.fab import FabConfig, fit_with_restarts
from core.rules import rules_from_model
from data.loader import binarize_dataset
from models.ensemble import count_empirical_regions, predict_batch
from models.simplified import model_error

logger = logging.getLogger(__name__)

METHODS = ("fab", "em")
TARGETS = ("ensemble", "label")


@dataclass(frozen=True)
class SimplifyOptions:
    method: str = "fab"
    target: str = "ensemble"       # fit to the ensemble's predictions or to the labels
    k_max: int = config.FAB_K_MAX
    k: int = 4                     # number of regions for method="em"
    restarts: int = config.FAB_RESTARTS
    delta: float = config.FAB_DELTA
    tau: float = config.RULE_TAU
    dedup: bool = True
    count_simplex: bool = False
    seed: int = config.DEFAULT_SEED
    n_jobs: int = config.N_JOBS

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r} (expected one of {METHODS})")
        if self.target not in TARGETS:
            raise ConfigError(f"unknown target {self.target!r} (expected one of {TARGETS})")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not 0.0 < self.tau <= 0.5:
            raise ConfigError("tau must lie in (0, 0.5]")
        self.fab_config()

    def fab_config(self) -> FabConfig:
        return FabConfig(
            k_max=self.k_max,
            delta=self.delta,
            restarts=self.restarts,
            seed=self.seed,
            n_jobs=self.n_jobs,
            count_simplex=self.count_simplex,
        )


def mimic_targets(ensemble, dataset):
    """The dataset with y replaced by the ensemble's predictions on its inputs."""
    y = predict_batch(ensemble, dataset.X)
    if dataset.task == "classification":
        return replace(dataset, y=y, n_classes=ensemble.n_classes)
    return dataset.with_targets(y)


def check_compatible(ensemble, dataset) -> None:
    if ensemble.task != dataset.task:
        raise TaskMismatchError(f"ensemble task {ensemble.task!r} does not match data task {dataset.task!r}")
    if ensemble.n_features != dataset.D:
        raise TaskMismatchError(f"ensemble expects D={ensemble.n_features} features, data has {dataset.D}")


# --- Steps ---
def collect_statements_step(state: Dict[str, Any]) -> Dict[str, Any]:
    ensemble, dataset, options = state["ensemble"], state["dataset"], state["options"]
    check_compatible(ensemble, dataset)
    n_raw = sum(len(tree.internal_nodes) for tree in ensemble.trees)
    table = collect_statements(ensemble, dedup=options.dedup)
    logger.info(f"Statement table: {len(table)} statements ({n_raw} internal nodes)")
    return {"table": table, "n_raw_statements": n_raw}


def build_targets(state: Dict[str, Any]) -> Dict[str, Any]:
    options, dataset = state["options"], state["dataset"]
    if options.target == "label":
        return {"fit_data": dataset}
    fit_data = mimic_targets(state["ensemble"], dataset)
    if dataset.task == "classification":
        agreement = float(np.mean(fit_data.y == dataset.y))
        logger.info(f"Fitting to ensemble predictions (agree with labels on {agreement:.1%} of rows)")
    return {"fit_data": fit_data}


def binarize_step(state: Dict[str, Any]) -> Dict[str, Any]:
    binarized = binarize_dataset(state["fit_data"], state["table"])
    regions = count_empirical_regions(binarized)
    logger.info(f"Binarized N={binarized.N} rows into L={binarized.L} bits; {regions} distinct patterns")
    return {"binarized": binarized, "empirical_regions": regions}


def fit_fab(state: Dict[str, Any]) -> Dict[str, Any]:
    options = state["options"]
    model, reports = fit_with_restarts(state["binarized"], options.fab_config())
    return {"model": model, "restarts": [report.to_dict() for report in reports]}


def fit_em(state: Dict[str, Any]) -> Dict[str, Any]:
    options = state["options"]
    sweep = em_sweep(state["binarized"], [options.k], restarts=options.restarts, seed=options.seed,
                     n_jobs=options.n_jobs)
    entry = sweep.entries[0]
    restarts = [{"K": entry.K, "train_error": entry.train_error, "n_iter": entry.trace.n_iter,
                 "converged": entry.trace.converged, "seconds": entry.seconds, "restarts": entry.restarts}]
    return {"model": entry.model, "restarts": restarts}


def extract_rules(state: Dict[str, Any]) -> Dict[str, Any]:
    options = state["options"]
    ruleset = rules_from_model(state["model"], options.tau, state["dataset"].feature_names)
    logger.info(f"Extracted {len(ruleset)} rules, mean length {ruleset.mean_length:.2f}")
    return {"ruleset": ruleset}


def summarize(state: Dict[str, Any]) -> Dict[str, Any]:
    options, model, binarized = state["options"], state["model"], state["binarized"]
    dataset, ruleset = state["dataset"], state["ruleset"]
    _, y_hat = model.predict_batch(binarized.S)
    if model.task == "regression":
        label_error = float(np.mean((y_hat - dataset.y) ** 2))
    else:
        label_error = float(np.mean(y_hat != dataset.y))
    report = {
        "method": options.method,
        "target": options.target,
        "seed": options.seed,
        "K": model.K,
        "L": model.L,
        "n_raw_statements": state["n_raw_statements"],
        "n_statements": len(state["table"]),
        "empirical_regions": state["empirical_regions"],
        "train_error": model_error(binarized, model, normalize=True),
        "train_error_label": label_error,
        "n_rules": len(ruleset),
        "mean_rule_length": ruleset.mean_length,
        "options": asdict(options),
        "restarts": state["restarts"],
    }
    logger.info(f"Simplified to K={model.K} regions, train error {report['train_error']:.4f}")
    return {"report": report}
