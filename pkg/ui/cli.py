# ui/cli.py
"""
Command-line surface: synth, train-forest, simplify, predict, evaluate, compare, plot2d.

Every randomized command takes --seed (default DEFRAG_SEED or 0). simplify, evaluate
and compare fit/score against the ensemble's own predictions by default
(--target ensemble); --target label uses the labels in the file instead.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import pandas as pd

import config
from core.analyzer import compare_fab_em, evaluate_model
from core.binarizer import collect_statements
from core.errors import ConfigError, DefragError
from core.fab import FabConfig
from core.rules import format_rules, save_rules
from data.loader import binarize_dataset, load_csv, save_csv, train_test_split, write_label_dictionary
from data.synthetic import GENERATORS, generate
from models.ensemble import load_ensemble, save_ensemble
from models.forest import ForestParams, train_forest
from models.simplified import load_model, save_model
from orchestrator.agent import get_simplifier
from orchestrator.tools import SimplifyOptions, check_compatible, mimic_targets
from ui.plot import plot2d
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)


# --- Helpers ---
def _write_json(doc: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
    logger.info(f"Wrote {path}")


def _load_data(args, task: str):
    return load_csv(args.data, task=task, target_column=args.target_column, has_header=not args.no_header)


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else config.OUTPUT_DIR
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- Commands ---
def cmd_synth(args) -> int:
    out = _out_dir(args)
    for part, key in (("train", 0), ("test", 1)):
        dataset = generate(args.name, args.n, args.noise, seed=derive_seed(args.seed, key))
        save_csv(dataset, out / f"{args.name}_{part}.csv")
    print(f"{args.name}: wrote {args.n} train and {args.n} test rows to {out}")
    return 0


def cmd_train_forest(args) -> int:
    dataset = _load_data(args, args.task)
    params = ForestParams(n_trees=args.n_trees, max_depth=args.max_depth, min_leaf=args.min_leaf,
                          feature_subsample=args.feature_subsample, bootstrap=not args.no_bootstrap)
    ensemble = train_forest(dataset, params, seed=args.seed, n_jobs=args.jobs)
    out = Path(args.out) if args.out else config.OUTPUT_DIR / "ensemble.json"
    save_ensemble(ensemble, out)
    print(f"Saved {ensemble.n_trees}-tree ensemble to {out}")
    return 0


def cmd_simplify(args) -> int:
    ensemble = load_ensemble(args.ensemble)
    dataset = _load_data(args, ensemble.task)
    options = SimplifyOptions(
        method=args.method,
        target=args.target,
        k_max=args.kmax,
        k=args.k,
        restarts=args.restarts,
        delta=args.delta,
        tau=args.tau,
        dedup=not args.no_dedup,
        count_simplex=args.count_simplex,
        seed=args.seed,
        n_jobs=args.jobs,
    )
    result = get_simplifier().run(ensemble, dataset, options)
    out = _out_dir(args)
    save_model(result.model, out / "model.json")
    save_rules(result.ruleset, out / "rules.txt", style="text")
    save_rules(result.ruleset, out / "rules.json", style="structured")
    if dataset.task == "classification":
        write_label_dictionary(dataset, out / "labels.json")
    _write_json(result.report, out / "report.json")
    print(format_rules(result.ruleset, "text"))
    print(f"K={result.report['K']}, train error {result.report['train_error']:.4f} -> {out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    dataset = _load_data(args, model.task)
    binarized = binarize_dataset(dataset, model.table)
    k_hat, y_hat = model.predict_batch(binarized.S)
    out = Path(args.out) if args.out else config.OUTPUT_DIR / "predictions.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"k_hat": k_hat, "y_hat": y_hat}).to_csv(out, index=False)
    print(f"Wrote {dataset.N} predictions to {out}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    dataset = _load_data(args, model.task)
    ensemble = load_ensemble(args.ensemble) if args.ensemble else None
    if ensemble is not None:
        check_compatible(ensemble, dataset)
    target = args.target or ("ensemble" if ensemble is not None else "label")
    if args.target is None and ensemble is None:
        logger.info("No --ensemble given: scoring against the data labels")
    if target == "ensemble":
        if ensemble is None:
            raise ConfigError("--target ensemble needs --ensemble (or use --target label)")
        scored = mimic_targets(ensemble, dataset)
    else:
        scored = dataset
    binarized = binarize_dataset(scored, model.table)
    report = evaluate_model(model, binarized, dataset.X, tau=args.tau, ensemble=ensemble, labels=dataset.y)
    doc = report.to_dict()
    doc["target"] = target
    print(json.dumps(doc, indent=2))
    if args.out:
        _write_json(doc, Path(args.out))
    return 0


def cmd_compare(args) -> int:
    ensemble = load_ensemble(args.ensemble) if args.ensemble else None
    task = ensemble.task if ensemble is not None else args.task
    dataset = _load_data(args, task)
    if args.test:
        train = dataset
        test = load_csv(args.test, task=task, target_column=args.target_column, has_header=not args.no_header)
    else:
        train, test = train_test_split(dataset, 0.5, seed=args.seed)
    if ensemble is None:
        ensemble = train_forest(train, ForestParams(n_trees=args.n_trees), seed=args.seed, n_jobs=args.jobs)
    check_compatible(ensemble, train)
    if args.target == "ensemble":
        train, test = mimic_targets(ensemble, train), mimic_targets(ensemble, test)
    table = collect_statements(ensemble, dedup=not args.no_dedup)
    cfg = FabConfig(k_max=args.kmax, delta=args.delta, restarts=args.restarts, seed=args.seed,
                    n_jobs=args.jobs, count_simplex=args.count_simplex)
    report = compare_fab_em(
        binarize_dataset(train, table),
        binarize_dataset(test, table),
        cfg,
        k_range=range(1, args.kmax + 1),
        baseline=(train, test) if args.baseline else None,
    )
    out = Path(args.out) if args.out else config.OUTPUT_DIR / "compare.csv"
    print(report.to_csv(out), end="")
    return 0


def cmd_plot2d(args) -> int:
    if bool(args.model) == bool(args.ensemble):
        raise ConfigError("plot2d needs exactly one of --model or --ensemble")
    model = load_model(args.model) if args.model else None
    ensemble = load_ensemble(args.ensemble) if args.ensemble else None
    task = model.task if model is not None else ensemble.task
    dataset = _load_data(args, task)
    out = Path(args.out) if args.out else config.OUTPUT_DIR / "regions.svg"
    boxes = plot2d(dataset, out, model=model, ensemble=ensemble, tau=args.tau, max_trees=args.max_trees)
    print(f"Wrote {len(boxes)} rectangles to {out}")
    return 0


# --- Parser ---
def _add_data_args(parser):
    parser.add_argument("data", help="CSV file with feature columns and one target column")
    parser.add_argument("--target-column", default=config.CSV_TARGET_COLUMN,
                        help="target column index or name (default: last)")
    parser.add_argument("--no-header", action="store_true", help="the CSV has no header row")


def _add_fit_args(parser):
    parser.add_argument("--kmax", type=int, default=config.FAB_K_MAX, help="K_max for FAB inference")
    parser.add_argument("--restarts", type=int, default=config.FAB_RESTARTS)
    parser.add_argument("--delta", type=float, default=config.FAB_DELTA, help="truncation threshold")
    parser.add_argument("--target", choices=("ensemble", "label"), default="ensemble",
                        help="fit to the ensemble's predictions (default) or to the labels")
    parser.add_argument("--no-dedup", action="store_true", help="keep duplicate statements")
    parser.add_argument("--count-simplex", action="store_true",
                        help="count C-1 output parameters per region for classification")


def _add_common_args(parser):
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    parser.add_argument("--jobs", type=int, default=config.N_JOBS, help="parallel workers")
    parser.add_argument("--out", default=None, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treedefrag", description="Simplify tree ensembles into a few rules.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic train/test pair")
    p.add_argument("name", choices=GENERATORS)
    p.add_argument("--n", type=int, default=config.SYNTH_N)
    p.add_argument("--noise", type=float, default=config.SYNTH_NOISE_RATE)
    _add_common_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-forest", help="train a bagged CART ensemble")
    _add_data_args(p)
    p.add_argument("--task", choices=("classification", "regression"), default="classification")
    p.add_argument("--n-trees", type=int, default=config.FOREST_N_TREES)
    p.add_argument("--max-depth", type=int, default=config.FOREST_MAX_DEPTH)
    p.add_argument("--min-leaf", type=int, default=config.FOREST_MIN_LEAF)
    p.add_argument("--feature-subsample", type=float, default=config.FOREST_FEATURE_SUBSAMPLE)
    p.add_argument("--no-bootstrap", action="store_true")
    _add_common_args(p)
    p.set_defaults(func=cmd_train_forest)

    p = sub.add_parser("simplify", help="fit a simplified model and extract rules")
    p.add_argument("ensemble", help="ensemble JSON file")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--method", choices=("fab", "em"), default="fab")
    p.add_argument("--k", type=int, default=4, help="number of regions for --method em")
    p.add_argument("--tau", type=float, default=config.RULE_TAU, help="rule rounding threshold")
    _add_common_args(p)
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("predict", help="write k_hat,y_hat for every row")
    p.add_argument("model", help="model JSON file")
    _add_data_args(p)
    _add_common_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="error, overlap and coverage of a model")
    p.add_argument("model", help="model JSON file")
    _add_data_args(p)
    p.add_argument("--ensemble", default=None, help="ensemble JSON file (fidelity, mimic targets)")
    p.add_argument("--target", choices=("ensemble", "label"), default=None,
                   help="score against ensemble predictions or the data labels; defaults to ensemble "
                        "when --ensemble is given and to label otherwise, so without --ensemble the error "
                        "differs from the mimic train_error that simplify reports")
    p.add_argument("--tau", type=float, default=config.RULE_TAU)
    _add_common_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="FAB inference against an EM sweep over K")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--test", default=None, help="test CSV (default: half of the data)")
    p.add_argument("--ensemble", default=None, help="ensemble JSON file (default: train a forest)")
    p.add_argument("--task", choices=("classification", "regression"), default="classification")
    p.add_argument("--n-trees", type=int, default=config.FOREST_N_TREES)
    p.add_argument("--baseline", action="store_true", help="add a depth-2 tree row")
    _add_common_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot2d", help="SVG of rule rectangles or ensemble cells")
    _add_data_args(p)
    p.add_argument("--model", default=None)
    p.add_argument("--ensemble", default=None)
    p.add_argument("--tau", type=float, default=config.RULE_TAU)
    p.add_argument("--max-trees", type=int, default=config.PLOT_MAX_TREES)
    _add_common_args(p)
    p.set_defaults(func=cmd_plot2d)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DefragError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
