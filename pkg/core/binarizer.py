# core/binarizer.py
"""Global statement table of an ensemble and the binary feature map s(x)."""
import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from core.errors import InconsistentRegionError, ModelFormatError
from models.ensemble import Statement, TreeEnsemble

logger = logging.getLogger(__name__)

UNCONSTRAINED = -1  # the "*" position of a region vector


@dataclass(frozen=True, eq=False)
class StatementTable:
    """Ordered statements x[feature] > threshold; position l is the l-th bit of s(x)."""
    features: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        features = np.array(self.features, dtype=np.intp).reshape(-1)
        thresholds = np.array(self.thresholds, dtype=float).reshape(-1)
        if features.shape != thresholds.shape:
            raise ValueError("features and thresholds must have the same length")
        features.flags.writeable = False
        thresholds.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "thresholds", thresholds)

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, StatementTable):
            return NotImplemented
        return np.array_equal(self.features, other.features) and np.array_equal(self.thresholds, other.thresholds)

    def __hash__(self):
        return hash((self.features.tobytes(), self.thresholds.tobytes()))

    @property
    def statements(self) -> list[tuple[int, float]]:
        return [(int(d), float(b)) for d, b in zip(self.features, self.thresholds)]

    def to_list(self) -> list[dict]:
        return [{"feature": d, "threshold": b} for d, b in self.statements]

    @classmethod
    def from_list(cls, items: Iterable[dict]) -> "StatementTable":
        try:
            items = list(items)
            features = [int(item["feature"]) for item in items]
            thresholds = [float(item["threshold"]) for item in items]
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"malformed statement list: {e}") from e
        return cls(np.asarray(features, dtype=np.intp), np.asarray(thresholds, dtype=float))


def collect_statements(ensemble: TreeEnsemble, dedup: bool = True) -> StatementTable:
    """
    Every internal node's (feature, threshold), sorted by (feature, threshold).
    With dedup=False duplicated statements keep one position each.
    """
    features, thresholds = [], []
    for tree in ensemble.trees:
        for i in tree.internal_nodes:
            node = tree.nodes[i]
            features.append(node.feature)
            thresholds.append(node.threshold)
    features = np.asarray(features, dtype=np.intp)
    thresholds = np.asarray(thresholds, dtype=float)
    if features.size == 0:
        logger.warning("Ensemble has no internal nodes: the statement table is empty.")
        return StatementTable(features, thresholds)

    order = np.lexsort((thresholds, features))
    features, thresholds = features[order], thresholds[order]
    raw = features.size
    if dedup:
        keep = np.ones(raw, dtype=bool)
        keep[1:] = (features[1:] != features[:-1]) | (thresholds[1:] != thresholds[:-1])
        features, thresholds = features[keep], thresholds[keep]
        if features.size < raw:
            logger.warning(
                f"Collapsed {raw} internal-node statements into {features.size} unique ones "
                f"(pass --no-dedup to keep one position per internal node)."
            )
    logger.info(f"Statement table: L={features.size} (raw internal nodes: {raw})")
    return StatementTable(features, thresholds)


def binarize_matrix(X, table: StatementTable) -> np.ndarray:
    """Row-wise s(x): bit l is 1 iff x[d_l] > b_l."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return (X[:, table.features] > table.thresholds).astype(np.uint8)


def binarize(x, table: StatementTable) -> np.ndarray:
    return binarize_matrix(np.asarray(x, dtype=float).reshape(1, -1), table)[0]


def region_intervals(statements: Iterable[Statement]) -> dict[int, tuple[float, float]]:
    """Per-feature (lower, upper] extent of a conjunction of statements."""
    intervals: dict[int, tuple[float, float]] = {}
    for feature, threshold, side in statements:
        lower, upper = intervals.get(feature, (-np.inf, np.inf))
        if side == ">":
            lower = max(lower, threshold)
        elif side == "<=":
            upper = min(upper, threshold)
        else:
            raise ValueError(f"unknown statement side {side!r}")
        intervals[feature] = (lower, upper)
    return intervals


def region_to_eta(statements: Iterable[Statement], table: StatementTable) -> np.ndarray:
    """
    Region vector over the table: 1 where the region forces x[d] > b, 0 where it
    forces x[d] <= b, UNCONSTRAINED where the boundary cuts through the region.
    """
    intervals = region_intervals(statements)
    for feature, (lower, upper) in intervals.items():
        if lower >= upper:
            raise InconsistentRegionError(f"statements on feature {feature} describe an empty interval ({lower}, {upper}]")
    eta = np.full(len(table), UNCONSTRAINED, dtype=np.int8)
    for pos, (feature, threshold) in enumerate(table.statements):
        lower, upper = intervals.get(feature, (-np.inf, np.inf))
        if threshold <= lower:
            eta[pos] = 1
        elif threshold >= upper:
            eta[pos] = 0
    return eta
