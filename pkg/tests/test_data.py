# tests/test_data.py
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from core.binarizer import StatementTable, binarize
from core.errors import ConfigError, DatasetFormatError
from data.loader import Dataset, binarize_dataset, load_csv, save_csv, train_test_split
from data.synthetic import clean_labels, gen_synthetic1, gen_synthetic2, generate, synthetic2_boundary


# --- Generators ---
def test_synthetic1_xor_labels():
    assert clean_labels("synthetic1", [[0.7, 0.2]]).tolist() == [1]
    assert clean_labels("synthetic1", [[0.7, 0.7]]).tolist() == [0]


def test_synthetic2_boundary():
    assert synthetic2_boundary(0.5) == pytest.approx(0.45, abs=1e-15)
    assert clean_labels("synthetic2", [[0.5, 0.6]]).tolist() == [1]
    r = synthetic2_boundary(np.linspace(0.0, 1.0, 10_000))
    assert r.min() >= 0.2 and r.max() <= 0.85


def test_noise_free_generators_match_clean_labels():
    for gen, name in ((gen_synthetic1, "synthetic1"), (gen_synthetic2, "synthetic2")):
        data = gen(500, noise_rate=0.0, seed=3)
        np.testing.assert_array_equal(data.y, clean_labels(name, data.X))


def test_flip_rate():
    data = gen_synthetic1(10_000, noise_rate=0.1, seed=0)
    flipped = np.mean(data.y != clean_labels("synthetic1", data.X))
    assert 0.08 <= flipped <= 0.12


def test_generators_are_deterministic():
    a, b = generate("synthetic2", 100, seed=4), generate("synthetic2", 100, seed=4)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)


def test_unknown_generator():
    with pytest.raises(ConfigError):
        generate("synthetic3", 10)


# --- Split ---
def test_split_is_disjoint_and_exhaustive():
    data = gen_synthetic1(1000, seed=1)
    train, test = train_test_split(data, 0.5, seed=2)
    assert train.N == test.N == 500
    rows = {tuple(x) for x in train.X} | {tuple(x) for x in test.X}
    assert len(rows) == 1000
    again, _ = train_test_split(data, 0.5, seed=2)
    np.testing.assert_array_equal(train.X, again.X)


def test_split_fraction_must_be_inside_unit_interval():
    with pytest.raises(DatasetFormatError):
        train_test_split(gen_synthetic1(10, seed=0), 1.0)


# --- CSV ---
def test_load_small_file(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,y\n0.1,2.5,1\n0.3,-1,0\n")
    data = load_csv(path)
    assert data.N == 2 and data.D == 2
    assert data.feature_names == ("a", "b")
    assert data.y.tolist() == [1, 0]


def test_missing_cell_names_row_and_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,y\n0.1,2.5,1\n0.3,,0\n")
    with pytest.raises(DatasetFormatError) as info:
        load_csv(path)
    assert info.value.row == 3
    assert info.value.column == "b"


def test_non_numeric_feature(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,y\nhello,1\n")
    with pytest.raises(DatasetFormatError) as info:
        load_csv(path)
    assert "non-numeric" in str(info.value)


def test_undecodable_file(tmp_path):
    path = tmp_path / "latin1.csv"
    path.write_bytes("a,b,y\n0.1,0.2,caf\u00e9\n".encode("latin-1"))
    with pytest.raises(DatasetFormatError):
        load_csv(path)


def test_string_labels_get_a_dictionary(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,y\n1,spam\n2,ham\n3,spam\n")
    data = load_csv(path)
    assert data.class_labels == ("ham", "spam")
    assert data.y.tolist() == [1, 0, 1]


def test_csv_round_trip(tmp_path):
    data = gen_synthetic2(50, seed=5)
    path = tmp_path / "s.csv"
    save_csv(data, path)
    restored = load_csv(path)
    np.testing.assert_array_equal(restored.X, data.X)
    np.testing.assert_array_equal(restored.y, data.y)


def test_regression_targets(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("y,x\n1.5,0\n-2.25,1\n")
    data = load_csv(path, task="regression", target_column=0)
    assert data.y.tolist() == [1.5, -2.25]
    assert data.X[:, 0].tolist() == [0.0, 1.0]


# --- Binarization ---
def test_binarized_rows_and_column_means():
    rng = np.random.default_rng(6)
    data = Dataset(rng.uniform(size=(300, 2)), rng.integers(0, 2, size=300), "classification")
    table = StatementTable([0, 1, 1], [0.4, 0.2, 0.7])
    binarized = binarize_dataset(data, table)
    assert binarized.S[17].tolist() == binarize(data.X[17], table).tolist()
    np.testing.assert_allclose(binarized.S[:, 0].mean(), np.mean(data.X[:, 0] > 0.4))
    again = binarize_dataset(data, table)
    np.testing.assert_array_equal(binarized.S, again.S)
