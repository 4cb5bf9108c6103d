# models/ensemble.py
"""
Axis-aligned decision-tree ensembles: the object being simplified.

Routing convention: a sample goes to the right child iff x[feature] > threshold,
otherwise to the left child. Every statement of the library uses the same strict ">".
"""
import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple, Sequence

import numpy as np

from core.errors import EnsembleFormatError

if TYPE_CHECKING:
    from data.loader import BinarizedDataset

logger = logging.getLogger(__name__)

TASKS = ("regression", "classification")
PROBA_SUM_TOL = 1e-9


class Statement(NamedTuple):
    feature: int
    threshold: float
    side: str  # ">" or "<="


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature, threshold, left, right) or leaf (value)."""
    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    value: float | tuple[float, ...] | None = None

    @classmethod
    def split(cls, feature: int, threshold: float, left: int, right: int) -> "TreeNode":
        return cls(feature=int(feature), threshold=float(threshold), left=int(left), right=int(right))

    @classmethod
    def leaf(cls, value) -> "TreeNode":
        if np.ndim(value) == 0:
            return cls(value=float(value))
        return cls(value=tuple(float(v) for v in value))

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(frozen=True)
class DecisionTree:
    nodes: tuple[TreeNode, ...]
    root: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        self._check_structure()

    def _check_structure(self):
        n = len(self.nodes)
        if n == 0:
            raise EnsembleFormatError("tree has no nodes")
        if not 0 <= self.root < n:
            raise EnsembleFormatError(f"dangling node reference: root {self.root}")
        seen = np.zeros(n, dtype=bool)
        seen[self.root] = True
        for i, node in enumerate(self.nodes):
            if node.is_leaf:
                if node.value is None:
                    raise EnsembleFormatError("leaf without value", node=i)
                continue
            if node.right is None or node.feature is None or node.threshold is None:
                raise EnsembleFormatError("internal node needs feature, threshold, left and right", node=i)
            if not math.isfinite(node.threshold):
                raise EnsembleFormatError("threshold is not finite", node=i)
            for child in (node.left, node.right):
                if not 0 <= child < n:
                    raise EnsembleFormatError(f"dangling node reference: child {child}", node=i)
                if seen[child]:
                    raise EnsembleFormatError(f"node {child} is referenced twice or is the root", node=i)
                seen[child] = True
        if not seen.all():
            orphan = int(np.flatnonzero(~seen)[0])
            raise EnsembleFormatError("node is unreachable from the root", node=orphan)
        # Each non-root node has exactly one parent, so a cycle would need an unreachable component.
        reached = 0
        stack = [self.root]
        while stack:
            i = stack.pop()
            reached += 1
            node = self.nodes[i]
            if not node.is_leaf:
                stack.extend((node.left, node.right))
        if reached != n:
            raise EnsembleFormatError("node graph is not a rooted tree")

    # --- Compiled arrays for vectorized routing ---
    @cached_property
    def _arrays(self):
        n = len(self.nodes)
        feature = np.zeros(n, dtype=np.intp)
        threshold = np.zeros(n)
        left = np.full(n, -1, dtype=np.intp)
        right = np.full(n, -1, dtype=np.intp)
        for i, node in enumerate(self.nodes):
            if not node.is_leaf:
                feature[i], threshold[i] = node.feature, node.threshold
                left[i], right[i] = node.left, node.right
        return feature, threshold, left, right

    @cached_property
    def _parents(self) -> dict[int, tuple[int, str]]:
        parents = {}
        for i, node in enumerate(self.nodes):
            if not node.is_leaf:
                parents[node.left] = (i, "<=")
                parents[node.right] = (i, ">")
        return parents

    @cached_property
    def leaf_values(self) -> np.ndarray:
        """(n_nodes,) for regression or (n_nodes, C) for classification; internal rows are 0."""
        width = max((len(n.value) for n in self.nodes if n.is_leaf and isinstance(n.value, tuple)), default=0)
        values = np.zeros((len(self.nodes), width)) if width else np.zeros(len(self.nodes))
        for i, node in enumerate(self.nodes):
            if node.is_leaf:
                values[i] = node.value
        return values

    @property
    def leaves(self) -> list[int]:
        return [i for i, node in enumerate(self.nodes) if node.is_leaf]

    @property
    def internal_nodes(self) -> list[int]:
        return [i for i, node in enumerate(self.nodes) if not node.is_leaf]

    def apply(self, X) -> np.ndarray:
        """Leaf id reached by every row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        feature, threshold, left, right = self._arrays
        idx = np.full(X.shape[0], self.root, dtype=np.intp)
        active = left[idx] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nodes = idx[rows]
            go_right = X[rows, feature[nodes]] > threshold[nodes]
            idx[rows] = np.where(go_right, right[nodes], left[nodes])
            active[rows] = left[idx[rows]] >= 0
        return idx


@dataclass(frozen=True)
class TreeEnsemble:
    task: str
    n_features: int
    trees: tuple[DecisionTree, ...]
    weights: tuple[float, ...]
    n_classes: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.task not in TASKS:
            raise EnsembleFormatError(f"unknown task {self.task!r}")
        if len(self.trees) < 1:
            raise EnsembleFormatError("ensemble needs at least one tree")
        if len(self.weights) != len(self.trees):
            raise EnsembleFormatError("one weight per tree is required")
        if self.n_features < 1:
            raise EnsembleFormatError("n_features must be positive")
        if self.task == "classification" and (self.n_classes is None or self.n_classes < 2):
            raise EnsembleFormatError("classification ensembles need n_classes >= 2")
        for t, (weight, tree) in enumerate(zip(self.weights, self.trees)):
            if not math.isfinite(weight):
                raise EnsembleFormatError("weight is not finite", tree=t)
            for i, node in enumerate(tree.nodes):
                self._check_node(node, t, i)

    def _check_node(self, node: TreeNode, t: int, i: int):
        if not node.is_leaf:
            if not 0 <= node.feature < self.n_features:
                raise EnsembleFormatError(f"feature_index {node.feature} >= D={self.n_features}", tree=t, node=i)
            return
        if self.task == "regression":
            if isinstance(node.value, tuple) or not math.isfinite(node.value):
                raise EnsembleFormatError("regression leaf needs one finite value", tree=t, node=i)
            return
        if not isinstance(node.value, tuple) or len(node.value) != self.n_classes:
            raise EnsembleFormatError(f"wrong leaf-vector length (expected {self.n_classes})", tree=t, node=i)
        probs = np.asarray(node.value)
        if not np.all(np.isfinite(probs)) or np.any(probs < 0) or abs(probs.sum() - 1.0) > PROBA_SUM_TOL:
            raise EnsembleFormatError("leaf probabilities must be nonnegative and sum to 1", tree=t, node=i)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def head(self, n_trees: int) -> "TreeEnsemble":
        """The first n_trees trees, weights renormalized to the same total."""
        n_trees = max(1, min(n_trees, self.n_trees))
        weights = np.asarray(self.weights[:n_trees])
        total = sum(self.weights)
        if weights.sum() != 0:
            weights = weights * (total / weights.sum())
        return TreeEnsemble(self.task, self.n_features, self.trees[:n_trees], tuple(weights), self.n_classes)


# --- Evaluation ---
def tree_apply(tree: DecisionTree, x):
    """Value of the leaf whose region contains x."""
    leaf = int(tree.apply(x)[0])
    return tree.nodes[leaf].value


def predict_batch(ensemble: TreeEnsemble, X) -> np.ndarray:
    """Weighted average (regression) or weighted hard vote (classification) for every row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if ensemble.task == "regression":
        out = np.zeros(X.shape[0])
        for weight, tree in zip(ensemble.weights, ensemble.trees):
            out += weight * tree.leaf_values[tree.apply(X)]
        return out
    votes = np.zeros((X.shape[0], ensemble.n_classes))
    rows = np.arange(X.shape[0])
    for weight, tree in zip(ensemble.weights, ensemble.trees):
        labels = np.argmax(tree.leaf_values[tree.apply(X)], axis=1)
        votes[rows, labels] += weight
    # argmax returns the first maximum: ties go to the lowest class index
    return np.argmax(votes, axis=1)


def ensemble_predict(ensemble: TreeEnsemble, x):
    """Prediction for a single input vector."""
    y = predict_batch(ensemble, np.asarray(x, dtype=float).reshape(1, -1))[0]
    return int(y) if ensemble.task == "classification" else float(y)


def leaf_region(tree: DecisionTree, leaf_id: int) -> list[Statement]:
    """Statements along the root-to-leaf path, in path order."""
    if not 0 <= leaf_id < len(tree.nodes):
        raise ValueError(f"node {leaf_id} does not exist")
    if not tree.nodes[leaf_id].is_leaf:
        raise ValueError(f"node {leaf_id} is an internal node, not a leaf")
    path = []
    node_id = leaf_id
    while node_id != tree.root:
        parent, side = tree._parents[node_id]
        node = tree.nodes[parent]
        path.append(Statement(node.feature, node.threshold, side))
        node_id = parent
    path.reverse()
    return path


def count_empirical_regions(binarized: "BinarizedDataset") -> int:
    """Number of distinct binary feature vectors observed in the data."""
    return int(np.unique(np.asarray(binarized.S), axis=0).shape[0])


# --- Interchange file ---
def ensemble_to_dict(ensemble: TreeEnsemble) -> dict:
    doc = {"task": ensemble.task, "n_features": ensemble.n_features}
    if ensemble.task == "classification":
        doc["n_classes"] = ensemble.n_classes
    trees = []
    for weight, tree in zip(ensemble.weights, ensemble.trees):
        nodes = []
        for node in tree.nodes:
            if node.is_leaf:
                value = list(node.value) if isinstance(node.value, tuple) else node.value
                nodes.append({"value": value})
            else:
                nodes.append({"feature": node.feature, "threshold": node.threshold,
                              "left": node.left, "right": node.right})
        trees.append({"weight": weight, "root": tree.root, "nodes": nodes})
    doc["trees"] = trees
    return doc


def _parse_node(raw, t: int, i: int) -> TreeNode:
    if not isinstance(raw, dict):
        raise EnsembleFormatError("node must be an object", tree=t, node=i)
    try:
        if "value" in raw:
            value = raw["value"]
            if isinstance(value, list):
                return TreeNode(value=tuple(float(v) for v in value))
            return TreeNode(value=float(value))
        for key in ("feature", "left", "right"):
            if not isinstance(raw.get(key), int) or isinstance(raw.get(key), bool):
                raise EnsembleFormatError(f"field {key!r} must be an integer", tree=t, node=i)
        return TreeNode.split(raw["feature"], float(raw["threshold"]), raw["left"], raw["right"])
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, EnsembleFormatError):
            raise
        raise EnsembleFormatError(f"malformed node ({e})", tree=t, node=i) from e


def ensemble_from_dict(doc: dict) -> TreeEnsemble:
    if not isinstance(doc, dict):
        raise EnsembleFormatError("malformed document: top level must be an object")
    for key in ("task", "n_features", "trees"):
        if key not in doc:
            raise EnsembleFormatError(f"malformed document: missing {key!r}")
    if not isinstance(doc["trees"], list):
        raise EnsembleFormatError("malformed document: 'trees' must be a list")
    trees, weights = [], []
    for t, raw_tree in enumerate(doc["trees"]):
        if not isinstance(raw_tree, dict) or not isinstance(raw_tree.get("nodes"), list):
            raise EnsembleFormatError("tree needs a 'nodes' list", tree=t)
        nodes = [_parse_node(raw, t, i) for i, raw in enumerate(raw_tree["nodes"])]
        try:
            trees.append(DecisionTree(nodes, int(raw_tree.get("root", 0))))
            weights.append(float(raw_tree.get("weight", 1.0)))
        except EnsembleFormatError as e:
            raise EnsembleFormatError(e.reason, tree=t, node=e.node) from e
        except (TypeError, ValueError) as e:
            raise EnsembleFormatError(f"malformed tree ({e})", tree=t) from e
    return TreeEnsemble(
        task=doc["task"],
        n_features=_header_int(doc, "n_features"),
        trees=tuple(trees),
        weights=tuple(weights),
        n_classes=_header_int(doc, "n_classes") if doc.get("n_classes") is not None else None,
    )


def _header_int(doc: dict, key: str) -> int:
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise EnsembleFormatError(f"malformed document: {key!r} must be an integer, got {value!r}")
    return value


def load_ensemble(path: Path | str) -> TreeEnsemble:
    path = Path(path)
    logger.info(f"Loading ensemble from {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise EnsembleFormatError(f"malformed document: {e}") from e
    ensemble = ensemble_from_dict(doc)
    logger.info(f"Loaded {ensemble.task} ensemble with {ensemble.n_trees} trees (D={ensemble.n_features})")
    return ensemble


def save_ensemble(ensemble: TreeEnsemble, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(ensemble_to_dict(ensemble), f)
    logger.info(f"Saved ensemble ({ensemble.n_trees} trees) to {path}")


def random_tree(rng: np.random.Generator, n_features: int, depth: int, n_classes: int | None = None) -> DecisionTree:
    """A random full tree of the given depth; used to build test fixtures and round-trip checks."""
    nodes: list[TreeNode | None] = []

    def grow(level: int) -> int:
        node_id = len(nodes)
        nodes.append(None)
        if level == depth:
            if n_classes:
                nodes[node_id] = TreeNode.leaf(rng.dirichlet(np.ones(n_classes)))
            else:
                nodes[node_id] = TreeNode.leaf(rng.normal())
            return node_id
        left = grow(level + 1)
        right = grow(level + 1)
        nodes[node_id] = TreeNode.split(rng.integers(n_features), rng.uniform(), left, right)
        return node_id

    grow(0)
    return DecisionTree(tuple(nodes), 0)
