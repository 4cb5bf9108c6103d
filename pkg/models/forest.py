# models/forest.py
"""
Minimal bagged-CART trainer so the repository can produce its own ensembles.
Greedy splits: variance reduction (regression) or Gini decrease (classification).
"""
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

import config
from core.errors import ConfigError
from models.ensemble import DecisionTree, TreeEnsemble, TreeNode
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)

MIN_GAIN = 1e-12


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = config.FOREST_N_TREES
    max_depth: int | None = config.FOREST_MAX_DEPTH
    min_leaf: int = config.FOREST_MIN_LEAF
    feature_subsample: float = config.FOREST_FEATURE_SUBSAMPLE
    bootstrap: bool = config.FOREST_BOOTSTRAP

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0 (or None for unlimited)")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be at least 1")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ConfigError("feature_subsample must lie in (0, 1]")


class CartBuilder:
    """Grows one tree on (X, y). For classification y holds class indices."""

    def __init__(self, task: str, n_classes: int | None, max_depth: int | None, min_leaf: int,
                 feature_subsample: float = 1.0):
        self.task = task
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subsample = feature_subsample

    def _leaf_value(self, y: np.ndarray):
        if self.task == "regression":
            return float(np.mean(y))
        counts = np.bincount(y, minlength=self.n_classes).astype(float)
        return counts / counts.sum()

    def _impurity_terms(self, ys: np.ndarray):
        """Per cut position i (left = first i+1 sorted rows): score to maximize, and the parent score."""
        n = ys.shape[0]
        n_left = np.arange(1, n, dtype=float)
        n_right = n - n_left
        if self.task == "regression":
            csum = np.cumsum(ys)
            left, total = csum[:-1], csum[-1]
            right = total - left
            return left ** 2 / n_left + right ** 2 / n_right, total ** 2 / n
        onehot = np.zeros((n, self.n_classes))
        onehot[np.arange(n), ys] = 1.0
        ccount = np.cumsum(onehot, axis=0)
        left, total = ccount[:-1], ccount[-1]
        right = total - left
        # Maximizing sum_c cL^2/nL + sum_c cR^2/nR minimizes the weighted Gini impurity.
        score = (left ** 2).sum(axis=1) / n_left + (right ** 2).sum(axis=1) / n_right
        return score, float((total ** 2).sum()) / n

    def _best_split(self, X: np.ndarray, y: np.ndarray, features: np.ndarray):
        n = X.shape[0]
        best = None  # (gain, feature, threshold)
        for d in features:
            order = np.argsort(X[:, d], kind="stable")
            xs, ys = X[order, d], y[order]
            score, parent = self._impurity_terms(ys)
            cut = np.arange(n - 1)
            valid = (xs[:-1] < xs[1:]) & (cut + 1 >= self.min_leaf) & (n - cut - 1 >= self.min_leaf)
            if not valid.any():
                continue
            score = np.where(valid, score, -np.inf)
            i = int(np.argmax(score))
            gain = score[i] - parent
            if gain <= MIN_GAIN * max(1.0, abs(parent)):
                continue
            if best is None or gain > best[0]:
                threshold = 0.5 * (xs[i] + xs[i + 1])
                if not xs[i] <= threshold < xs[i + 1]:
                    threshold = xs[i]
                best = (gain, int(d), float(threshold))
        return best

    def build(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> DecisionTree:
        D = X.shape[1]
        n_sub = max(1, int(round(self.feature_subsample * D)))
        nodes: list[TreeNode | None] = [None]
        stack = [(0, np.arange(X.shape[0]), 0)]
        while stack:
            node_id, rows, depth = stack.pop()
            Xn, yn = X[rows], y[rows]
            can_split = (
                (self.max_depth is None or depth < self.max_depth)
                and rows.size >= 2 * self.min_leaf
                and np.unique(yn).size > 1
            )
            split = None
            if can_split:
                features = np.arange(D) if n_sub == D else np.sort(rng.choice(D, size=n_sub, replace=False))
                split = self._best_split(Xn, yn, features)
            if split is None:
                nodes[node_id] = TreeNode.leaf(self._leaf_value(yn))
                continue
            _, feature, threshold = split
            go_right = Xn[:, feature] > threshold
            left_id, right_id = len(nodes), len(nodes) + 1
            nodes.extend([None, None])
            nodes[node_id] = TreeNode.split(feature, threshold, left_id, right_id)
            stack.append((right_id, rows[go_right], depth + 1))
            stack.append((left_id, rows[~go_right], depth + 1))
        return DecisionTree(tuple(nodes), 0)


def _grow_tree(X, y, builder: CartBuilder, bootstrap: bool, seed: int) -> DecisionTree:
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, X.shape[0], size=X.shape[0]) if bootstrap else np.arange(X.shape[0])
    return builder.build(X[rows], y[rows], rng)


def train_forest(dataset, params: ForestParams | None = None, seed: int = config.DEFAULT_SEED,
                 n_jobs: int = config.N_JOBS) -> TreeEnsemble:
    """
    Bagged CART trees with weights 1/T. Tree t draws its bootstrap sample and
    feature subsets from derive_seed(seed, t), so the forest does not depend on n_jobs.
    """
    params = params or ForestParams()
    if dataset.N < 1:
        raise ConfigError("cannot train a forest on an empty dataset")
    builder = CartBuilder(dataset.task, dataset.n_classes, params.max_depth, params.min_leaf,
                          params.feature_subsample)
    logger.info(f"Training {params.n_trees} {dataset.task} trees on N={dataset.N}, D={dataset.D}")
    X, y = dataset.X, dataset.y
    trees = Parallel(n_jobs=n_jobs)(
        delayed(_grow_tree)(X, y, builder, params.bootstrap, derive_seed(seed, t))
        for t in range(params.n_trees)
    )
    n_internal = sum(len(tree.internal_nodes) for tree in trees)
    logger.info(f"Forest trained: {len(trees)} trees, {n_internal} internal nodes in total")
    weight = 1.0 / params.n_trees
    return TreeEnsemble(
        task=dataset.task,
        n_features=dataset.D,
        trees=tuple(trees),
        weights=tuple([weight] * params.n_trees),
        n_classes=dataset.n_classes if dataset.task == "classification" else None,
    )
