# models/simplified.py
"""
The simplified model: K regions, each with a Bernoulli pattern over the L
statements (eta), an output model (mu/lambda or gamma) and a mixture weight (alpha).
All likelihood work happens in the log domain with probabilities clipped at PROBA_EPS.
"""
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

import config
from core.binarizer import StatementTable
from core.errors import ModelFormatError, TaskMismatchError
from models.ensemble import TASKS

logger = logging.getLogger(__name__)

EPS = config.PROBA_EPS
SIMPLEX_TOL = 1e-9
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class SimplifiedModel:
    task: str
    table: StatementTable
    alpha: np.ndarray                 # (K,)
    eta: np.ndarray                   # (K, L)
    mu: np.ndarray | None = None      # (K,) regression
    lam: np.ndarray | None = None     # (K,) regression precision
    gamma: np.ndarray | None = None   # (K, C) classification

    def __post_init__(self):
        if self.task not in TASKS:
            raise ModelFormatError(f"unknown task {self.task!r}")
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        K = alpha.shape[0]
        if K < 1:
            raise ModelFormatError("a model needs at least one region")
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0) or abs(alpha.sum() - 1.0) > SIMPLEX_TOL:
            raise ModelFormatError("alpha must be a probability vector")
        eta = np.array(self.eta, dtype=float)
        if eta.shape != (K, len(self.table)):
            raise ModelFormatError(f"eta has shape {eta.shape} but K={K} and the statement table has L={len(self.table)}")
        if not np.all(np.isfinite(eta)):
            raise ModelFormatError("eta entries must be finite")
        eta = np.clip(eta, EPS, 1.0 - EPS)
        fields = {"alpha": alpha, "eta": eta}
        if self.task == "regression":
            if self.mu is None or self.lam is None:
                raise ModelFormatError("regression models need mu and lambda")
            mu = np.array(self.mu, dtype=float).reshape(-1)
            lam = np.array(self.lam, dtype=float).reshape(-1)
            if mu.shape != (K,) or lam.shape != (K,):
                raise ModelFormatError("mu and lambda need one entry per region")
            if np.any(lam <= 0) or not np.all(np.isfinite(lam)) or not np.all(np.isfinite(mu)):
                raise ModelFormatError("lambda must be positive and finite")
            fields.update(mu=mu, lam=lam)
        else:
            if self.gamma is None:
                raise ModelFormatError("classification models need gamma")
            gamma = np.array(self.gamma, dtype=float)
            if gamma.ndim != 2 or gamma.shape[0] != K or gamma.shape[1] < 2:
                raise ModelFormatError("gamma must be K x C with C >= 2")
            if not np.all(np.isfinite(gamma)) or np.any(gamma < 0) or np.any(np.abs(gamma.sum(axis=1) - 1.0) > SIMPLEX_TOL):
                raise ModelFormatError("each gamma row must be a probability vector")
            fields["gamma"] = gamma
        for name, value in fields.items():
            value.flags.writeable = False
            object.__setattr__(self, name, value)

    @property
    def K(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def L(self) -> int:
        return len(self.table)

    @property
    def n_classes(self) -> int | None:
        return int(self.gamma.shape[1]) if self.gamma is not None else None

    def restrict(self, regions) -> "SimplifiedModel":
        """Model over a subset of regions, alpha renormalized."""
        regions = np.asarray(regions, dtype=np.intp)
        alpha = self.alpha[regions]
        alpha = alpha / alpha.sum() if alpha.sum() > 0 else np.full(regions.size, 1.0 / regions.size)
        return replace(
            self,
            alpha=alpha,
            eta=self.eta[regions],
            mu=None if self.mu is None else self.mu[regions],
            lam=None if self.lam is None else self.lam[regions],
            gamma=None if self.gamma is None else self.gamma[regions],
        )

    # --- Vectorized log-likelihoods (N x K) ---
    def log_p_s(self, S) -> np.ndarray:
        S = np.atleast_2d(np.asarray(S, dtype=float))
        log_on, log_off = np.log(self.eta), np.log1p(-self.eta)
        return S @ (log_on - log_off).T + log_off.sum(axis=1)

    def log_p_y(self, y) -> np.ndarray:
        if self.task == "regression":
            y = np.asarray(y, dtype=float).reshape(-1, 1)
            return 0.5 * (np.log(self.lam) - LOG_2PI) - 0.5 * self.lam * (y - self.mu) ** 2
        Y = _as_one_hot(y, self.n_classes)
        return Y @ np.log(np.clip(self.gamma, EPS, 1.0)).T

    def log_alpha(self) -> np.ndarray:
        return np.log(np.maximum(self.alpha, EPS))

    def log_joint(self, S, y) -> np.ndarray:
        """log f_k = log p(y|k) + log p(s|k) + log alpha_k for every row and region."""
        return self.log_p_y(y) + self.log_p_s(S) + self.log_alpha()

    def predict_regions(self, S) -> np.ndarray:
        # y plays no role in the region choice
        return np.argmax(self.log_p_s(S) + self.log_alpha(), axis=1)

    def predict_batch(self, S) -> tuple[np.ndarray, np.ndarray]:
        k_hat = self.predict_regions(S)
        if self.task == "regression":
            return k_hat, self.mu[k_hat]
        return k_hat, np.argmax(self.gamma, axis=1)[k_hat]


def _as_one_hot(y, n_classes: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim == 2:
        if y.shape[1] != n_classes or not np.all((y == 0) | (y == 1)) or not np.all(y.sum(axis=1) == 1):
            raise TaskMismatchError("classification targets must be one-hot vectors of length C")
        return y.astype(float)
    y = y.reshape(-1)
    if not np.all(y == np.round(y)) or np.any(y < 0) or np.any(y >= n_classes):
        raise TaskMismatchError(f"class indices must lie in [0, {n_classes})")
    Y = np.zeros((y.shape[0], n_classes))
    Y[np.arange(y.shape[0]), y.astype(np.intp)] = 1.0
    return Y


# --- Single-row operations ---
def log_p_s_given_k(s, model: SimplifiedModel, k: int) -> float:
    return float(model.log_p_s(np.asarray(s).reshape(1, -1))[0, k])


def log_p_y_given_k(y, model: SimplifiedModel, k: int) -> float:
    if model.task == "classification":
        y = np.asarray(y)
        y = y.reshape(1, -1) if y.ndim == 1 else y.reshape(1)
    return float(model.log_p_y(y)[0, k])


def log_joint(y, s, model: SimplifiedModel, k: int) -> float:
    return log_p_y_given_k(y, model, k) + log_p_s_given_k(s, model, k) + float(model.log_alpha()[k])


def predict(s, model: SimplifiedModel) -> tuple[int, float | int]:
    """Two-step MAP: most probable region from s, then its most probable output."""
    k_hat, y_hat = model.predict_batch(np.asarray(s).reshape(1, -1))
    if model.task == "classification":
        return int(k_hat[0]), int(y_hat[0])
    return int(k_hat[0]), float(y_hat[0])


def model_error(dataset, model: SimplifiedModel, normalize: bool = False) -> float:
    """Sum of squared residuals (regression) or misclassification count; mean if normalize."""
    if dataset.task != model.task:
        raise TaskMismatchError(f"dataset task {dataset.task!r} does not match model task {model.task!r}")
    if dataset.S.shape[1] != model.L:
        raise TaskMismatchError(f"dataset has L={dataset.S.shape[1]} statements, model expects {model.L}")
    _, y_hat = model.predict_batch(dataset.S)
    if model.task == "regression":
        errors = (np.asarray(dataset.y, dtype=float) - y_hat) ** 2
    else:
        errors = (np.asarray(dataset.y) != y_hat).astype(float)
    total = float(errors.sum())
    return total / errors.shape[0] if normalize else total


# --- Model file ---
def model_to_dict(model: SimplifiedModel) -> dict:
    doc = {
        "task": model.task,
        "K": model.K,
        "L": model.L,
        "statements": model.table.to_list(),
        "alpha": model.alpha.tolist(),
        "eta": model.eta.tolist(),
    }
    if model.task == "regression":
        doc["phi"] = {"mu": model.mu.tolist(), "lambda": model.lam.tolist()}
    else:
        doc["phi"] = {"gamma": model.gamma.tolist()}
    return doc


def _declared_size(doc: dict, key: str, actual: int) -> int:
    value = doc.get(key, actual)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelFormatError(f"malformed model file: {key!r} must be an integer, got {value!r}")
    return value


def model_from_dict(doc: dict) -> SimplifiedModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("malformed model file: top level must be an object")
    try:
        table = StatementTable.from_list(doc["statements"])
        phi = doc["phi"]
        model = SimplifiedModel(
            task=doc["task"],
            table=table,
            alpha=np.asarray(doc["alpha"], dtype=float),
            eta=np.asarray(doc["eta"], dtype=float),
            mu=phi.get("mu"),
            lam=phi.get("lambda"),
            gamma=phi.get("gamma"),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model file: {e}") from e
    if _declared_size(doc, "K", model.K) != model.K or _declared_size(doc, "L", model.L) != model.L:
        raise ModelFormatError("declared K/L do not match the parameter shapes")
    return model


def save_model(model: SimplifiedModel, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f)
    logger.info(f"Saved model (K={model.K}, L={model.L}) to {path}")


def load_model(path: Path | str) -> SimplifiedModel:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"malformed model file: {e}") from e
    model = model_from_dict(doc)
    logger.info(f"Loaded {model.task} model from {path}: K={model.K}, L={model.L}")
    return model
