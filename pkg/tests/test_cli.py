# tests/test_cli.py
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json
import math
import xml.etree.ElementTree as ET

import pandas as pd
import pytest

from core.errors import DatasetFormatError
from core.rules import load_rules
from data.loader import load_csv
from models.ensemble import load_ensemble
from models.simplified import load_model
from ui.cli import main
from ui.plot import ensemble_boxes, plot_bounds, rule_boxes


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synth -> train-forest -> simplify, shared by the tests below."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "synthetic1", "--n", "200", "--seed", "0", "--out", str(root)]) == 0
    train = root / "synthetic1_train.csv"
    ensemble = root / "ensemble.json"
    assert main(["train-forest", str(train), "--n-trees", "5", "--max-depth", "3", "--out", str(ensemble)]) == 0
    out = root / "simplified"
    assert main(["simplify", str(ensemble), str(train), "--restarts", "2", "--kmax", "5", "--out", str(out)]) == 0
    return root, train, ensemble, out


def test_synth_writes_train_and_test(workspace):
    root, train, _, _ = workspace
    test = root / "synthetic1_test.csv"
    assert load_csv(train).N == 200
    assert load_csv(test).N == 200
    assert not load_csv(train).X.tolist() == load_csv(test).X.tolist()


def test_synth_is_deterministic(tmp_path, workspace):
    root, train, _, _ = workspace
    assert main(["synth", "synthetic1", "--n", "200", "--seed", "0", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "synthetic1_train.csv").read_bytes() == train.read_bytes()


def test_simplify_outputs_are_consistent(workspace):
    _, _, _, out = workspace
    report = json.loads((out / "report.json").read_text())
    model = load_model(out / "model.json")
    rules = load_rules(out / "rules.json")
    text_rules = (out / "rules.txt").read_text().strip().splitlines()
    assert report["K"] == model.K == len(rules) == len(text_rules)
    assert report["options"]["k_max"] == 5


def test_evaluate_reproduces_training_error(workspace, capsys):
    root, train, ensemble, out = workspace
    capsys.readouterr()
    target = root / "eval.json"
    assert main(["evaluate", str(out / "model.json"), str(train), "--ensemble", str(ensemble),
                 "--out", str(target)]) == 0
    report = json.loads(target.read_text())
    simplify = json.loads((out / "report.json").read_text())
    assert report["error"] == simplify["train_error"]
    assert set(report) >= {"n", "error", "overlap", "per_rule_coverage"}


def test_predict_writes_region_and_value(workspace, tmp_path):
    _, train, _, out = workspace
    target = tmp_path / "pred.csv"
    assert main(["predict", str(out / "model.json"), str(train), "--out", str(target)]) == 0
    frame = pd.read_csv(target)
    assert list(frame.columns) == ["k_hat", "y_hat"]
    assert len(frame) == 200


def test_plot2d_draws_one_rectangle_per_rule(workspace, tmp_path):
    _, train, _, out = workspace
    svg = tmp_path / "rules.svg"
    assert main(["plot2d", str(train), "--model", str(out / "model.json"), "--out", str(svg)]) == 0
    tree = ET.parse(svg)
    ids = [el.get("id") for el in tree.iter() if (el.get("id") or "").startswith("rule-")]
    model = load_model(out / "model.json")
    assert len(ids) <= model.K
    assert len(ids) >= 1


def test_plot2d_requires_two_features(tmp_path):
    path = tmp_path / "three.csv"
    path.write_text("a,b,c,y\n0.1,0.2,0.3,1\n0.4,0.5,0.6,0\n")
    ensemble = tmp_path / "e.json"
    assert main(["train-forest", str(path), "--n-trees", "1", "--out", str(ensemble)]) == 0
    assert main(["plot2d", str(path), "--ensemble", str(ensemble), "--out", str(tmp_path / "x.svg")]) == 1


def test_errors_are_one_line_with_status_one(tmp_path, capsys):
    code = main(["simplify", str(tmp_path / "missing.json"), str(tmp_path / "missing.csv")])
    err = capsys.readouterr().err
    assert code == 1
    assert "error: " in err
    assert "Traceback" not in err


def test_task_mismatch_is_reported(workspace, tmp_path, capsys):
    _, train, _, _ = workspace
    path = tmp_path / "r.csv"
    path.write_text("a,b,y\n0.1,0.2,1.5\n0.4,0.5,2.5\n0.6,0.1,0.5\n")
    ensemble = tmp_path / "reg.json"
    assert main(["train-forest", str(path), "--task", "regression", "--n-trees", "1", "--out", str(ensemble)]) == 0
    capsys.readouterr()
    assert main(["evaluate", str(workspace[3] / "model.json"), str(train), "--ensemble", str(ensemble)]) == 1
    assert "error:" in capsys.readouterr().err


def svg_ids(path, prefix):
    return sorted(el.get("id") for el in ET.parse(path).iter() if (el.get("id") or "").startswith(prefix))


def test_evaluate_without_ensemble_scores_labels(workspace, tmp_path):
    _, train, _, out = workspace
    target = tmp_path / "eval.json"
    assert main(["evaluate", str(out / "model.json"), str(train), "--out", str(target)]) == 0
    assert json.loads(target.read_text())["target"] == "label"


def test_compare_writes_one_row_per_method_and_k(workspace, tmp_path, capsys):
    root, train, ensemble, _ = workspace
    target = tmp_path / "compare.csv"
    capsys.readouterr()
    assert main(["compare", str(train), "--test", str(root / "synthetic1_test.csv"), "--ensemble", str(ensemble),
                 "--kmax", "3", "--restarts", "2", "--baseline", "--out", str(target)]) == 0
    frame = pd.read_csv(target)
    assert frame["method"].tolist() == ["fab", "em", "em", "em", "dtree2"]
    assert frame.loc[frame["method"] == "em", "K"].tolist() == [1, 2, 3]
    assert (frame["wall_seconds"] > 0).all()
    assert capsys.readouterr().out.startswith("method,K,")


def test_plot2d_rectangles_match_the_rule_file(workspace, tmp_path):
    _, train, _, out = workspace
    svg = tmp_path / "rules.svg"
    assert main(["plot2d", str(train), "--model", str(out / "model.json"), "--out", str(svg)]) == 0
    bounds = plot_bounds(load_csv(train).X)
    assert bounds == ((0.0, 1.0), (0.0, 1.0))
    boxes = rule_boxes(load_model(out / "model.json"), bounds)
    assert svg_ids(svg, "rule-") == sorted(box.gid for box in boxes)
    rules = {rule.k: rule for rule in load_rules(out / "rules.json").rules}
    for box in boxes:
        intervals = rules[int(box.gid.split("-")[1])].intervals
        x_lower, x_upper = intervals.get(0, (-math.inf, math.inf))
        y_lower, y_upper = intervals.get(1, (-math.inf, math.inf))
        assert (box.x0, box.x1) == (max(x_lower, 0.0), min(x_upper, 1.0))
        assert (box.y0, box.y1) == (max(y_lower, 0.0), min(y_upper, 1.0))


def test_plot2d_draws_ensemble_cells(workspace, tmp_path, capsys):
    _, train, ensemble, _ = workspace
    svg = tmp_path / "cells.svg"
    capsys.readouterr()
    assert main(["plot2d", str(train), "--ensemble", str(ensemble), "--max-trees", "2", "--out", str(svg)]) == 0
    boxes = ensemble_boxes(load_ensemble(ensemble), plot_bounds(load_csv(train).X), max_trees=2)
    assert svg_ids(svg, "cell-") == sorted(box.gid for box in boxes)
    assert {box.gid.split("-")[1] for box in boxes} == {"0", "1"}
    assert f"Wrote {len(boxes)} rectangles" in capsys.readouterr().out


def test_undecodable_inputs_exit_with_status_one(workspace, tmp_path, capsys):
    _, train, ensemble, out = workspace
    garbage = tmp_path / "garbage.bin"
    garbage.write_bytes(b"a,b,y\n\xff\xfe,0.2,1\n")
    with pytest.raises(DatasetFormatError):
        load_csv(garbage)
    capsys.readouterr()
    assert main(["evaluate", str(out / "model.json"), str(garbage)]) == 1
    assert main(["simplify", str(garbage), str(train)]) == 1
    assert main(["evaluate", str(garbage), str(train)]) == 1
    err = capsys.readouterr().err
    assert err.count("error: ") >= 3
    assert "Traceback" not in err


def test_non_integer_ensemble_header_exits_with_status_one(workspace, tmp_path, capsys):
    _, train, ensemble, _ = workspace
    doc = json.loads(ensemble.read_text())
    doc["n_features"] = "two"
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["simplify", str(broken), str(train)]) == 1
    assert "error: " in capsys.readouterr().err
