# tests/test_workflow.py
"""The simplify pipeline and the evaluation / comparison reports."""
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from unittest.mock import patch

import numpy as np
import pytest

from core.analyzer import COMPARISON_COLUMNS, compare_fab_em, evaluate_model
from core.binarizer import collect_statements
from core.errors import ConfigError, TaskMismatchError
from core.fab import FabConfig
from data.loader import Dataset, binarize_dataset, train_test_split
from data.synthetic import gen_synthetic1
from models.forest import ForestParams, train_forest
from orchestrator.agent import Simplifier
from orchestrator.tools import SimplifyOptions, mimic_targets
from orchestrator.workflow import route_by_method


@pytest.fixture(scope="module")
def problem():
    data = gen_synthetic1(300, seed=0)
    ensemble = train_forest(data, ForestParams(n_trees=5, max_depth=3), seed=0)
    return ensemble, data


def test_options_validation():
    with pytest.raises(ConfigError):
        SimplifyOptions(method="gibbs")
    with pytest.raises(ConfigError):
        SimplifyOptions(delta=2.0)


def test_routing():
    assert route_by_method({"options": SimplifyOptions(method="em")}) == "fit_em"
    assert route_by_method({"options": SimplifyOptions()}) == "fit_fab"


def test_fab_pipeline_report(problem):
    ensemble, data = problem
    result = Simplifier().run(ensemble, data, SimplifyOptions(restarts=3, k_max=6))
    report = result.report
    assert report["K"] == result.model.K == report["n_rules"] == len(result.ruleset)
    assert report["K"] <= 6
    assert report["n_statements"] <= report["n_raw_statements"]
    assert len(report["restarts"]) == 3
    assert sum(r["selected"] for r in report["restarts"]) == 1
    assert 0.0 <= report["train_error"] <= 1.0


def test_em_pipeline_uses_requested_k(problem):
    ensemble, data = problem
    result = Simplifier().run(ensemble, data, SimplifyOptions(method="em", k=4, restarts=2))
    assert result.model.K == 4
    assert result.report["method"] == "em"


def test_pipeline_is_deterministic(problem):
    ensemble, data = problem
    options = SimplifyOptions(restarts=2, k_max=4, seed=3)
    a = Simplifier().run(ensemble, data, options)
    b = Simplifier().run(ensemble, data, options)
    np.testing.assert_array_equal(a.model.eta, b.model.eta)
    assert a.report["train_error"] == b.report["train_error"]


def test_pipeline_rejects_task_mismatch(problem):
    ensemble, data = problem
    regression = Dataset(data.X, data.X[:, 0], "regression")
    with pytest.raises(TaskMismatchError):
        Simplifier().run(ensemble, regression, SimplifyOptions(restarts=1))


def test_label_target_skips_the_ensemble(problem):
    ensemble, data = problem
    with patch("orchestrator.tools.mimic_targets") as mimic:
        Simplifier().run(ensemble, data, SimplifyOptions(target="label", restarts=1, k_max=3))
    mimic.assert_not_called()


def test_evaluate_matches_training_report(problem):
    ensemble, data = problem
    result = Simplifier().run(ensemble, data, SimplifyOptions(restarts=2, k_max=5))
    binarized = binarize_dataset(mimic_targets(ensemble, data), result.model.table)
    report = evaluate_model(result.model, binarized, data.X, ensemble=ensemble, labels=data.y)
    assert report.error == result.report["train_error"]
    assert report.n == data.N
    assert len(report.per_rule_coverage) == result.model.K
    assert report.fidelity == pytest.approx(report.error)
    assert 0.0 <= report.ensemble_error <= 1.0


def test_comparison_report_shape():
    data = gen_synthetic1(300, seed=2)
    train, test = train_test_split(data, 0.5, seed=0)
    ensemble = train_forest(train, ForestParams(n_trees=5, max_depth=3), seed=0)
    train, test = mimic_targets(ensemble, train), mimic_targets(ensemble, test)
    table = collect_statements(ensemble)
    report = compare_fab_em(binarize_dataset(train, table), binarize_dataset(test, table),
                            FabConfig(k_max=4, restarts=2), k_range=range(1, 5), baseline=(train, test))
    frame = report.to_frame()
    assert list(frame.columns) == COMPARISON_COLUMNS
    assert frame["method"].tolist() == ["fab", "em", "em", "em", "em", "dtree2"]
    assert (frame["wall_seconds"] > 0).all()
    assert frame.loc[frame["method"] == "dtree2", "K"].item() <= 4
