# data/loader.py
"""Datasets: CSV ingestion and emission, train/test split, row-wise binarization."""
import json
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd

import config
from core.binarizer import StatementTable, binarize_matrix
from core.errors import DatasetFormatError
from models.ensemble import TASKS

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    X is N x D; y holds real targets (regression) or class indices in [0, C)
    (classification). class_labels maps an index back to the label in the file.
    """
    X: np.ndarray
    y: np.ndarray
    task: str
    n_classes: int | None = None
    feature_names: tuple[str, ...] | None = None
    class_labels: tuple | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise DatasetFormatError("X must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(X)):
            raise DatasetFormatError("X contains non-finite entries")
        if self.task not in TASKS:
            raise DatasetFormatError(f"unknown task {self.task!r}")
        if self.task == "classification":
            y = np.array(self.y, dtype=np.intp).reshape(-1)
            n_classes = self.n_classes if self.n_classes is not None else max(2, int(y.max()) + 1)
            if np.any(y < 0) or np.any(y >= n_classes):
                raise DatasetFormatError(f"class indices must lie in [0, {n_classes})")
            object.__setattr__(self, "n_classes", int(n_classes))
        else:
            y = np.array(self.y, dtype=float).reshape(-1)
            if not np.all(np.isfinite(y)):
                raise DatasetFormatError("y contains non-finite entries")
        if y.shape[0] != X.shape[0]:
            raise DatasetFormatError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        names = self.feature_names or tuple(f"x{d + 1}" for d in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DatasetFormatError("one feature name per column is required")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(names))
        if self.class_labels is not None:
            object.__setattr__(self, "class_labels", tuple(self.class_labels))

    @property
    def N(self) -> int:
        return int(self.X.shape[0])

    @property
    def D(self) -> int:
        return int(self.X.shape[1])

    def with_targets(self, y) -> "Dataset":
        return replace(self, y=np.asarray(y))

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return replace(self, X=self.X[rows], y=self.y[rows])

    def labels(self) -> np.ndarray:
        """Targets as they appear in the file."""
        if self.task == "classification" and self.class_labels is not None:
            return np.asarray(self.class_labels, dtype=object)[self.y]
        return self.y


@dataclass(frozen=True, eq=False)
class BinarizedDataset:
    """S is the N x L binary matrix of statement truth values; y as in Dataset."""
    S: np.ndarray
    y: np.ndarray
    task: str
    table: StatementTable
    n_classes: int | None = None

    def __post_init__(self):
        S = np.array(self.S, dtype=np.uint8)
        if S.ndim != 2 or S.shape[1] != len(self.table):
            raise DatasetFormatError(f"S must have L={len(self.table)} columns")
        if S.shape[0] != np.asarray(self.y).shape[0]:
            raise DatasetFormatError("S and y must have the same number of rows")
        S.flags.writeable = False
        object.__setattr__(self, "S", S)

    @property
    def N(self) -> int:
        return int(self.S.shape[0])

    @property
    def L(self) -> int:
        return int(self.S.shape[1])

    @cached_property
    def S_float(self) -> np.ndarray:
        return self.S.astype(float)

    @cached_property
    def Y(self) -> np.ndarray:
        """One-hot targets (classification only)."""
        Y = np.zeros((self.N, self.n_classes))
        Y[np.arange(self.N), np.asarray(self.y, dtype=np.intp)] = 1.0
        return Y

    def with_targets(self, y) -> "BinarizedDataset":
        return replace(self, y=np.asarray(y))


def binarize_dataset(dataset: Dataset, table: StatementTable) -> BinarizedDataset:
    return BinarizedDataset(
        S=binarize_matrix(dataset.X, table),
        y=dataset.y,
        task=dataset.task,
        table=table,
        n_classes=dataset.n_classes,
    )


def train_test_split(dataset: Dataset, fraction: float = 0.5, seed: int = config.DEFAULT_SEED) -> tuple[Dataset, Dataset]:
    """Deterministic shuffle; `fraction` of the rows go to the training part."""
    if not 0.0 < fraction < 1.0:
        raise DatasetFormatError(f"split fraction must lie in (0, 1), got {fraction}")
    if dataset.N < 2:
        raise DatasetFormatError("cannot split a dataset with fewer than 2 rows")
    perm = np.random.default_rng(seed).permutation(dataset.N)
    n_train = min(max(int(round(fraction * dataset.N)), 1), dataset.N - 1)
    return dataset.subset(np.sort(perm[:n_train])), dataset.subset(np.sort(perm[n_train:]))


# --- CSV ---
def _parse_float_column(values: pd.Series, column, line_offset: int) -> np.ndarray:
    out = np.empty(len(values))
    for i, cell in enumerate(values.tolist()):
        if cell is None or (isinstance(cell, float) and math.isnan(cell)) or str(cell).strip() == "":
            raise DatasetFormatError("missing cell", row=i + line_offset, column=column)
        try:
            out[i] = float(cell)
        except ValueError as e:
            raise DatasetFormatError(f"non-numeric cell {cell!r}", row=i + line_offset, column=column) from e
        if not math.isfinite(out[i]):
            raise DatasetFormatError(f"non-finite cell {cell!r}", row=i + line_offset, column=column)
    return out


def _encode_labels(raw: list, class_labels=None) -> tuple[np.ndarray, int, tuple]:
    """Integral labels map to themselves; anything else goes through a sorted dictionary."""
    if class_labels is not None:
        lookup = {str(label): idx for idx, label in enumerate(class_labels)}
        try:
            y = np.array([lookup[str(v).strip()] for v in raw], dtype=np.intp)
        except KeyError as e:
            raise DatasetFormatError(f"label {e.args[0]!r} is not in the label dictionary") from e
        return y, len(class_labels), tuple(class_labels)
    try:
        numeric = np.array([float(v) for v in raw])
        integral = np.all(numeric == np.round(numeric)) and np.all(numeric >= 0)
    except ValueError:
        integral = False
    if integral:
        y = numeric.astype(np.intp)
        n_classes = max(2, int(y.max()) + 1)
        return y, n_classes, tuple(range(n_classes))
    labels = sorted({str(v).strip() for v in raw})
    lookup = {label: idx for idx, label in enumerate(labels)}
    y = np.array([lookup[str(v).strip()] for v in raw], dtype=np.intp)
    return y, max(2, len(labels)), tuple(labels)


def load_csv(
    path: Path | str,
    task: str = "classification",
    target_column: int | str = config.CSV_TARGET_COLUMN,
    has_header: bool = True,
    class_labels=None,
) -> Dataset:
    """
    Reads a comma-separated file of decimal features plus one target column.
    Errors name the 1-based file line and the column.
    """
    path = Path(path)
    if task not in TASKS:
        raise DatasetFormatError(f"unknown task {task!r}")
    logger.info(f"Loading {task} dataset from {path}")
    try:
        frame = pd.read_csv(path, header=0 if has_header else None, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise DatasetFormatError(f"ragged rows: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise DatasetFormatError("file is empty") from e
    except UnicodeDecodeError as e:
        raise DatasetFormatError(f"file is not valid UTF-8: {e}") from e
    if frame.shape[0] < 1:
        raise DatasetFormatError("file has no data rows")
    if frame.shape[1] < 2:
        raise DatasetFormatError("need at least one feature column and one target column")

    columns = list(frame.columns)
    if isinstance(target_column, str) and not target_column.lstrip("-").isdigit():
        if target_column not in columns:
            raise DatasetFormatError(f"target column {target_column!r} not found")
        target = target_column
    else:
        index = int(target_column)
        if not -len(columns) <= index < len(columns):
            raise DatasetFormatError(f"target column index {index} out of range")
        target = columns[index]
    line_offset = 2 if has_header else 1

    feature_columns = [c for c in columns if c != target]
    X = np.column_stack([_parse_float_column(frame[c], c, line_offset) for c in feature_columns])
    names = tuple(str(c) for c in feature_columns) if has_header else None

    raw_target = frame[target]
    for i, cell in enumerate(raw_target.tolist()):
        if cell is None or (isinstance(cell, float) and math.isnan(cell)) or str(cell).strip() == "":
            raise DatasetFormatError("missing cell", row=i + line_offset, column=target)
    if task == "regression":
        y = _parse_float_column(raw_target, target, line_offset)
        dataset = Dataset(X, y, task, feature_names=names)
    else:
        y, n_classes, labels = _encode_labels(raw_target.tolist(), class_labels)
        dataset = Dataset(X, y, task, n_classes=n_classes, feature_names=names, class_labels=labels)
    logger.info(f"Loaded N={dataset.N}, D={dataset.D} from {path}")
    return dataset


def save_csv(dataset: Dataset, path: Path | str, target_name: str = "y") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.X, columns=list(dataset.feature_names))
    frame[target_name] = dataset.labels()
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {dataset.N} rows to {path}")


def write_label_dictionary(dataset: Dataset, path: Path | str) -> None:
    """Class index -> label, written next to classification outputs."""
    path = Path(path)
    labels = {str(idx): (label if isinstance(label, (int, float, str)) else str(label))
              for idx, label in enumerate(dataset.class_labels or ())}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(labels, f, indent=2)
    logger.info(f"Label dictionary saved to {path}")
