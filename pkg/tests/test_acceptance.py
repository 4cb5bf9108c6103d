# tests/test_acceptance.py
"""End-to-end runs on Synthetic1 at desk scale. Run with `pytest -m slow`."""
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from core.analyzer import compare_fab_em, evaluate_model
from core.binarizer import collect_statements
from core.fab import FabConfig
from data.loader import binarize_dataset
from data.synthetic import gen_synthetic1
from models.ensemble import count_empirical_regions, predict_batch
from models.forest import ForestParams, train_forest
from orchestrator.agent import Simplifier
from orchestrator.tools import SimplifyOptions, mimic_targets
from utils.seeding import derive_seed

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def synthetic1():
    train = gen_synthetic1(1000, seed=derive_seed(0, 0))
    test = gen_synthetic1(1000, seed=derive_seed(0, 1))
    ensemble = train_forest(train, ForestParams(n_trees=100), seed=0)
    return train, test, ensemble


def test_forest_accuracy(synthetic1):
    _, test, ensemble = synthetic1
    assert np.mean(predict_batch(ensemble, test.X) == test.y) >= 0.85


def test_first_five_trees_cut_space_into_many_regions(synthetic1):
    train, _, ensemble = synthetic1
    head = ensemble.head(5)
    regions = count_empirical_regions(binarize_dataset(train, collect_statements(head)))
    assert regions >= 50


def test_simplify_recovers_a_few_rules(synthetic1):
    train, test, ensemble = synthetic1
    result = Simplifier().run(ensemble, train, SimplifyOptions())
    assert 3 <= result.model.K <= 8

    report = evaluate_model(result.model, binarize_dataset(test, result.model.table), test.X)
    assert report.error <= 0.15
    assert 0.8 <= report.overlap <= 1.5


def test_fab_is_faster_than_the_em_sweep_and_as_good(synthetic1):
    train, test, ensemble = synthetic1
    table = collect_statements(ensemble)
    report = compare_fab_em(
        binarize_dataset(mimic_targets(ensemble, train), table),
        binarize_dataset(mimic_targets(ensemble, test), table),
        FabConfig(),
        k_range=range(1, 11),
    )
    assert report.seconds("fab") < report.seconds("em")
    assert report.best("fab").test_error <= report.best("em").test_error + 0.02
