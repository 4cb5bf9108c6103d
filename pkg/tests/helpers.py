# tests/helpers.py
"""Small fixtures shared by the test modules."""
import numpy as np

from core.binarizer import StatementTable
from data.loader import BinarizedDataset
from models.simplified import SimplifiedModel


def random_table(rng, L: int, D: int = 3) -> StatementTable:
    features = np.sort(rng.integers(0, D, size=L))
    thresholds = rng.uniform(size=L)
    order = np.lexsort((thresholds, features))
    return StatementTable(features[order], thresholds[order])


def random_binarized(rng, N: int, L: int, task: str = "classification", n_classes: int = 2) -> BinarizedDataset:
    table = random_table(rng, L)
    S = (rng.uniform(size=(N, L)) < rng.uniform(0.2, 0.8, size=L)).astype(np.uint8)
    if task == "classification":
        y = rng.integers(0, n_classes, size=N)
        return BinarizedDataset(S, y, task, table, n_classes)
    return BinarizedDataset(S, rng.normal(size=N), task, table)


def random_model(rng, K: int, L: int, task: str = "classification", n_classes: int = 3) -> SimplifiedModel:
    table = random_table(rng, L)
    alpha = rng.dirichlet(np.ones(K))
    eta = rng.uniform(size=(K, L))
    if task == "classification":
        return SimplifiedModel(task, table, alpha, eta, gamma=rng.dirichlet(np.ones(n_classes), size=K))
    return SimplifiedModel(task, table, alpha, eta, mu=rng.normal(size=K), lam=rng.uniform(0.5, 2.0, size=K))
