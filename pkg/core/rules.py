# core/rules.py
"""
Interval rules read off the fitted eta rows, coverage/overlap statistics and
the text / CSV / structured renderings of a rule set.
"""
import io
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

import config
from core.binarizer import StatementTable
from core.errors import ConfigError, ModelFormatError
from models.simplified import SimplifiedModel

logger = logging.getLogger(__name__)

RULE_STYLES = ("text", "csv", "structured")


@dataclass(frozen=True)
class Rule:
    """
    Conjunction of per-feature intervals lower < x[d] <= upper (infinite bounds
    mean one-sided), with the region's predictive value y.
    """
    intervals: dict[int, tuple[float, float]]
    y: float | int
    k: int
    alpha: float
    inconsistent: bool = False

    @property
    def length(self) -> int:
        """Number of constrained features."""
        return len(self.intervals)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    task: str
    table: StatementTable | None = None
    feature_names: tuple[str, ...] | None = None

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    @property
    def mean_length(self) -> float:
        return float(np.mean([rule.length for rule in self.rules])) if self.rules else 0.0


def eta_to_rule(model: SimplifiedModel, k: int, tau: float = config.RULE_TAU) -> Rule:
    """
    Rounds eta_k with threshold tau: ">" when eta >= 1 - tau, "<=" when eta <= tau,
    unconstrained otherwise (eta == tau == 0.5 included). Statements on one feature
    collapse to the tightest interval.
    """
    if not 0.0 < tau <= 0.5:
        raise ConfigError(f"tau must lie in (0, 0.5], got {tau}")
    if not 0 <= k < model.K:
        raise ConfigError(f"region {k} does not exist (K={model.K})")
    bounds: dict[int, list[float]] = {}
    for (feature, threshold), eta in zip(model.table.statements, model.eta[k]):
        is_above = eta >= 1.0 - tau and eta > tau
        is_below = eta <= tau and eta < 1.0 - tau
        if not (is_above or is_below):
            continue
        lower, upper = bounds.setdefault(feature, [-math.inf, math.inf])
        if is_above:
            bounds[feature][0] = max(lower, threshold)
        else:
            bounds[feature][1] = min(upper, threshold)

    intervals, inconsistent = {}, False
    for feature in sorted(bounds):
        lower, upper = bounds[feature]
        if lower >= upper:
            inconsistent = True
            logger.warning(f"Rule {k}: contradictory statements on feature {feature} "
                           f"({lower} < x <= {upper}); dropping that feature")
            continue
        intervals[feature] = (float(lower), float(upper))

    if model.task == "regression":
        y = float(model.mu[k])
    else:
        y = int(np.argmax(model.gamma[k]))
    return Rule(intervals, y, k, float(model.alpha[k]), inconsistent)


def rules_from_model(model: SimplifiedModel, tau: float = config.RULE_TAU,
                     feature_names=None) -> RuleSet:
    rules = tuple(eta_to_rule(model, k, tau) for k in range(model.K))
    names = tuple(feature_names) if feature_names is not None else None
    return RuleSet(rules, model.task, model.table, names)


# --- Coverage ---
def rule_covers(rule: Rule, x) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    return all(lower < x[d] <= upper for d, (lower, upper) in rule.intervals.items())


def cover_matrix(ruleset: RuleSet, X) -> np.ndarray:
    """N x K boolean matrix: does rule k cover row n."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    covered = np.ones((X.shape[0], len(ruleset)), dtype=bool)
    for k, rule in enumerate(ruleset.rules):
        for d, (lower, upper) in rule.intervals.items():
            covered[:, k] &= (X[:, d] > lower) & (X[:, d] <= upper)
    return covered


def overlap_metric(ruleset: RuleSet, X) -> float:
    """Mean number of rules covering each input; 1.0 for a clean partition."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise ConfigError("overlap needs at least one input")
    return float(cover_matrix(ruleset, X).sum(axis=1).mean())


def coverage_counts(ruleset: RuleSet, X) -> list[int]:
    return [int(c) for c in cover_matrix(ruleset, X).sum(axis=0)]


# --- Rendering ---
def _feature_name(ruleset: RuleSet, d: int) -> str:
    if ruleset.feature_names is not None and d < len(ruleset.feature_names):
        return ruleset.feature_names[d]
    return f"x{d + 1}"


def _format_value(value) -> str:
    return str(value) if isinstance(value, (int, np.integer)) else f"{value:.6g}"


def format_rule(rule: Rule, ruleset: RuleSet) -> str:
    conjuncts = []
    for d, (lower, upper) in sorted(rule.intervals.items()):
        name = _feature_name(ruleset, d)
        if math.isfinite(lower):
            conjuncts.append(f"{name} > {lower:.6g}")
        if math.isfinite(upper):
            conjuncts.append(f"{name} ≤ {upper:.6g}")
    body = ", ".join(conjuncts) if conjuncts else "(always)"
    return f"y = {_format_value(rule.y)} ⇐ {body}"


def _bound(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


def rules_to_dict(ruleset: RuleSet) -> dict:
    doc = {
        "task": ruleset.task,
        "rules": [
            {
                "k": rule.k,
                "y": rule.y,
                "alpha": rule.alpha,
                "inconsistent": rule.inconsistent,
                "intervals": [
                    {"feature": d, "lower": _bound(lower), "upper": _bound(upper)}
                    for d, (lower, upper) in sorted(rule.intervals.items())
                ],
            }
            for rule in ruleset.rules
        ],
    }
    if ruleset.feature_names is not None:
        doc["feature_names"] = list(ruleset.feature_names)
    if ruleset.table is not None:
        doc["statements"] = ruleset.table.to_list()
    return doc


def rules_from_dict(doc: dict) -> RuleSet:
    if not isinstance(doc, dict):
        raise ModelFormatError("malformed rule file: top level must be an object")
    try:
        task = doc["task"]
        rules = []
        for k, raw in enumerate(doc["rules"]):
            intervals = {}
            for item in raw["intervals"]:
                lower = -math.inf if item["lower"] is None else float(item["lower"])
                upper = math.inf if item["upper"] is None else float(item["upper"])
                intervals[int(item["feature"])] = (lower, upper)
            y = float(raw["y"]) if task == "regression" else int(raw["y"])
            rules.append(Rule(intervals, y, int(raw.get("k", k)), float(raw["alpha"]),
                              bool(raw.get("inconsistent", False))))
        table = StatementTable.from_list(doc["statements"]) if "statements" in doc else None
        names = tuple(str(n) for n in doc["feature_names"]) if "feature_names" in doc else None
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed rule file: {e}") from e
    return RuleSet(tuple(rules), task, table, names)


def _interval_token(d: int, lower: float, upper: float) -> str:
    return f"{d}:{lower!r}<..<={upper!r}"


def _rules_frame(ruleset: RuleSet) -> pd.DataFrame:
    rows = [
        {
            "k": rule.k,
            "y": rule.y,
            "alpha": rule.alpha,
            "intervals": " ".join(_interval_token(d, lo, hi) for d, (lo, hi) in sorted(rule.intervals.items())),
        }
        for rule in ruleset.rules
    ]
    return pd.DataFrame(rows, columns=["k", "y", "alpha", "intervals"])


def format_rules(ruleset: RuleSet, style: str = "text") -> str:
    """One line per rule (text), one CSV row per rule, or the JSON rule document."""
    if style == "text":
        return "\n".join(format_rule(rule, ruleset) for rule in ruleset.rules)
    if style == "csv":
        buffer = io.StringIO()
        _rules_frame(ruleset).to_csv(buffer, index=False)
        return buffer.getvalue()
    if style == "structured":
        return json.dumps(rules_to_dict(ruleset), indent=2)
    raise ConfigError(f"unknown rule style {style!r} (expected one of {RULE_STYLES})")


def save_rules(ruleset: RuleSet, path: Path | str, style: str = "structured") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_rules(ruleset, style))
        if style == "text":
            f.write("\n")
    logger.info(f"Saved {len(ruleset)} rules ({style}) to {path}")


def load_rules(path: Path | str) -> RuleSet:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"malformed rule file: {e}") from e
    return rules_from_dict(doc)
