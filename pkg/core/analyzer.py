# core/analyzer.py
"""Reports on fitted models: test metrics against data and an ensemble, and the FAB vs EM comparison."""
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

import config
from core.em import em_sweep
from core.errors import TaskMismatchError
from core.fab import FabConfig, fit_with_restarts
from core.rules import coverage_counts, overlap_metric, rules_from_model
from models.ensemble import TreeEnsemble, predict_batch
from models.forest import ForestParams, train_forest
from models.simplified import SimplifiedModel, model_error

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ["method", "K", "train_error", "test_error", "wall_seconds", "restarts", "seed"]
DTREE2_PARAMS = ForestParams(n_trees=1, max_depth=2, min_leaf=1, bootstrap=False)


def prediction_gap(task: str, a, b) -> float:
    """Disagreement rate (classification) or mean squared difference (regression)."""
    a, b = np.asarray(a), np.asarray(b)
    if task == "regression":
        return float(np.mean((a.astype(float) - b.astype(float)) ** 2))
    return float(np.mean(a != b))


@dataclass
class EvaluationReport:
    n: int
    error: float
    overlap: float
    per_rule_coverage: list[int]
    n_rules: int
    mean_rule_length: float
    fidelity: float | None = None
    ensemble_error: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_model(model: SimplifiedModel, binarized, X, tau: float = config.RULE_TAU,
                   ensemble: TreeEnsemble | None = None, labels=None) -> EvaluationReport:
    """
    Mean error of the two-step MAP predictor on `binarized`, the overlap and
    coverage of the rounded rules on the raw inputs X, and, given the ensemble,
    how closely the model tracks it (fidelity) and the ensemble's own error
    against `labels` (default: the targets of `binarized`).
    """
    if binarized.table != model.table:
        raise TaskMismatchError("the data was binarized with a different statement table than the model's")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ruleset = rules_from_model(model, tau)
    report = EvaluationReport(
        n=binarized.N,
        error=model_error(binarized, model, normalize=True),
        overlap=overlap_metric(ruleset, X),
        per_rule_coverage=coverage_counts(ruleset, X),
        n_rules=len(ruleset),
        mean_rule_length=ruleset.mean_length,
    )
    if ensemble is not None:
        if ensemble.task != model.task:
            raise TaskMismatchError(f"ensemble task {ensemble.task!r} does not match model task {model.task!r}")
        ensemble_y = predict_batch(ensemble, X)
        _, model_y = model.predict_batch(binarized.S)
        report.fidelity = prediction_gap(model.task, model_y, ensemble_y)
        report.ensemble_error = prediction_gap(model.task, ensemble_y, binarized.y if labels is None else labels)
    return report


# --- FAB vs EM ---
@dataclass
class ComparisonRow:
    method: str
    K: int
    train_error: float
    test_error: float | None
    wall_seconds: float
    restarts: int
    seed: int


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow] = field(default_factory=list)

    def seconds(self, method: str) -> float:
        return float(sum(row.wall_seconds for row in self.rows if row.method == method))

    def best(self, method: str) -> ComparisonRow:
        candidates = [row for row in self.rows if row.method == method]
        return min(candidates, key=lambda row: (row.test_error, row.K))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows], columns=COMPARISON_COLUMNS)

    def to_csv(self, path: Path | str | None = None) -> str:
        text = self.to_frame().to_csv(index=False)
        if path is not None:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            logger.info(f"Comparison report written to {path}")
        return text


def _dtree2_row(train_raw, test_raw, seed: int) -> ComparisonRow:
    start = time.perf_counter()
    tree = train_forest(train_raw, DTREE2_PARAMS, seed=seed, n_jobs=1)
    seconds = time.perf_counter() - start
    task = train_raw.task
    return ComparisonRow(
        method="dtree2",
        K=len(tree.trees[0].leaves),
        train_error=prediction_gap(task, predict_batch(tree, train_raw.X), train_raw.y),
        test_error=prediction_gap(task, predict_batch(tree, test_raw.X), test_raw.y) if test_raw is not None else None,
        wall_seconds=seconds,
        restarts=1,
        seed=seed,
    )


def compare_fab_em(train, test=None, cfg: FabConfig | None = None, k_range=config.EM_K_RANGE,
                   baseline: tuple | None = None) -> ComparisonReport:
    """
    One FAB row (fit_with_restarts) and one EM row per K in k_range, with the
    same number of restarts. `baseline` = (train, test) raw datasets carrying
    the same targets adds a depth-2 tree row.
    """
    cfg = cfg or FabConfig()
    report = ComparisonReport()

    start = time.perf_counter()
    model, _ = fit_with_restarts(train, cfg)
    fab_seconds = time.perf_counter() - start
    report.rows.append(ComparisonRow(
        method="fab",
        K=model.K,
        train_error=model_error(train, model, normalize=True),
        test_error=model_error(test, model, normalize=True) if test is not None else None,
        wall_seconds=fab_seconds,
        restarts=cfg.restarts,
        seed=cfg.seed,
    ))

    sweep = em_sweep(train, k_range, restarts=cfg.restarts, seed=cfg.seed, test=test, n_jobs=cfg.n_jobs)
    for entry in sweep.entries:
        report.rows.append(ComparisonRow("em", entry.K, entry.train_error, entry.test_error,
                                         entry.seconds, entry.restarts, cfg.seed))

    if baseline is not None:
        report.rows.append(_dtree2_row(baseline[0], baseline[1], cfg.seed))

    logger.info(f"FAB: {fab_seconds:.2f}s (K={model.K}); EM sweep: {report.seconds('em'):.2f}s "
                f"over {len(sweep.entries)} values of K")
    return report
