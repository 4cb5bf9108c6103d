# core/em.py
"""
Maximum-likelihood fitting of the simplified model for a fixed number of regions K.

The E-step and M-step here are shared with FAB inference (core/fab.py): FAB only
changes how the responsibilities are computed and adds region truncation.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.special import entr, logsumexp

import config
from core.errors import ConfigError, EmptyRegionError
from models.simplified import SimplifiedModel, model_error
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)


@dataclass
class FitTrace:
    objective: list[float] = field(default_factory=list)   # bound after every outer iteration
    n_regions: list[int] = field(default_factory=list)     # K after every outer iteration
    min_kept_mass: list[float] = field(default_factory=list)  # smallest surviving mean responsibility
    n_iter: int = 0
    converged: bool = False
    seconds: float = 0.0


# --- Shared helpers ---
def fitting_targets(dataset):
    """y for regression, one-hot Y for classification."""
    return dataset.Y if dataset.task == "classification" else dataset.y


def data_log_joint(dataset, model: SimplifiedModel) -> np.ndarray:
    return model.log_joint(dataset.S_float, fitting_targets(dataset))


def softmax_rows(log_f: np.ndarray) -> np.ndarray:
    return np.exp(log_f - logsumexp(log_f, axis=1, keepdims=True))


def expected_log_lik(log_f: np.ndarray, beta: np.ndarray) -> float:
    return float(np.sum(beta * log_f))


def entropy(beta: np.ndarray) -> float:
    return float(np.sum(entr(beta)))


def init_responsibilities(N: int, K: int, seed: int) -> np.ndarray:
    """Rows drawn from a symmetric Dirichlet(1)."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(K), size=N)


def has_converged(previous: float | None, current: float, tol: float) -> bool:
    if previous is None:
        return False
    return abs(current - previous) <= tol * abs(previous)


# --- E-step / M-step ---
def em_estep(dataset, model: SimplifiedModel) -> np.ndarray:
    """beta_k^(n) proportional to f_k^(n), normalized per row."""
    return softmax_rows(data_log_joint(dataset, model))


def mstep(dataset, beta) -> SimplifiedModel:
    """Closed-form maximizer of the expected complete-data log-likelihood."""
    beta = np.asarray(beta, dtype=float)
    mass = beta.sum(axis=0)
    empty = np.flatnonzero(mass <= 0)
    if empty.size:
        raise EmptyRegionError(f"region {int(empty[0])} has zero responsibility mass; truncate it first")
    N = beta.shape[0]
    eta = (beta.T @ dataset.S_float) / mass[:, None]
    alpha = mass / N
    alpha = alpha / alpha.sum()
    if dataset.task == "regression":
        y = np.asarray(dataset.y, dtype=float)
        mu = (beta.T @ y) / mass
        var = np.sum(beta * (y[:, None] - mu) ** 2, axis=0) / mass
        lam = 1.0 / np.maximum(var, config.VARIANCE_FLOOR)
        lam = np.maximum(lam, config.PRECISION_FLOOR)
        return SimplifiedModel("regression", dataset.table, alpha, eta, mu=mu, lam=lam)
    gamma = (beta.T @ dataset.Y) / mass[:, None]
    gamma = gamma / gamma.sum(axis=1, keepdims=True)
    return SimplifiedModel("classification", dataset.table, alpha, eta, gamma=gamma)


def em_lower_bound(dataset, model: SimplifiedModel, beta) -> float:
    """Expected complete-data log-likelihood plus the entropy of the responsibilities."""
    beta = np.asarray(beta, dtype=float)
    return expected_log_lik(data_log_joint(dataset, model), beta) + entropy(beta)


def _reseed_empty(beta: np.ndarray, log_f: np.ndarray) -> np.ndarray:
    """Hands each empty region the worst-fit data point still unclaimed by another empty region."""
    mass = beta.sum(axis=0)
    empty = np.flatnonzero(mass <= 0)
    if not empty.size:
        return beta
    beta = beta.copy()
    worst = np.argsort(logsumexp(log_f, axis=1), kind="stable")
    for j, k in enumerate(empty):
        n = worst[j % worst.size]
        beta[n] = 0.0
        beta[n, k] = 1.0
    logger.warning(f"Re-seeded {empty.size} empty region(s) from worst-fit data points")
    return beta


def em_fit(dataset, K: int, seed: int = config.DEFAULT_SEED, tol: float = config.EM_TOL,
           max_iter: int = config.EM_MAX_ITER) -> tuple[SimplifiedModel, FitTrace]:
    if K < 1:
        raise ConfigError("K must be at least 1")
    start = time.perf_counter()
    trace = FitTrace()
    beta = init_responsibilities(dataset.N, K, seed)
    model = mstep(dataset, beta)
    log_f = data_log_joint(dataset, model)
    previous = None
    for it in range(1, max_iter + 1):
        beta = _reseed_empty(softmax_rows(log_f), log_f)
        model = mstep(dataset, beta)
        log_f = data_log_joint(dataset, model)
        bound = expected_log_lik(log_f, beta) + entropy(beta)
        trace.objective.append(bound)
        trace.n_regions.append(K)
        trace.n_iter = it
        logger.debug(f"EM K={K} iter {it}: bound={bound:.6f}")
        # a single region has beta == 1 everywhere: the first M-step is the fixed point
        if K == 1 or has_converged(previous, bound, tol):
            trace.converged = True
            break
        previous = bound
    trace.seconds = time.perf_counter() - start
    if not trace.converged:
        logger.warning(f"EM with K={K} did not converge in {max_iter} iterations")
    return model, trace


# --- Sweep over K ---
@dataclass
class SweepEntry:
    K: int
    model: SimplifiedModel
    trace: FitTrace
    train_error: float
    test_error: float | None
    seconds: float
    restarts: int


@dataclass
class SweepResult:
    entries: list[SweepEntry]
    total_seconds: float

    def best(self, by: str = "test_error") -> SweepEntry:
        key = (lambda e: (e.test_error, e.K)) if by == "test_error" else (lambda e: (e.train_error, e.K))
        return min(self.entries, key=key)


def em_sweep(dataset, k_range=config.EM_K_RANGE, restarts: int = 1, seed: int = config.DEFAULT_SEED,
             test=None, tol: float = config.EM_TOL, max_iter: int = config.EM_MAX_ITER,
             n_jobs: int = config.N_JOBS) -> SweepResult:
    """
    em_fit for every K with `restarts` random initializations each; per K the
    restart with the smallest training error wins. Errors are reported as means.
    """
    entries = []
    sweep_start = time.perf_counter()
    for K in k_range:
        start = time.perf_counter()
        fits = Parallel(n_jobs=n_jobs)(
            delayed(em_fit)(dataset, K, derive_seed(seed, K, r), tol, max_iter) for r in range(restarts)
        )
        errors = [model_error(dataset, model, normalize=True) for model, _ in fits]
        best = int(np.argmin(errors))
        model, trace = fits[best]
        seconds = time.perf_counter() - start
        test_error = model_error(test, model, normalize=True) if test is not None else None
        entries.append(SweepEntry(K, model, trace, errors[best], test_error, seconds, restarts))
        logger.info(f"EM K={K}: train error {errors[best]:.4f}"
                    + (f", test error {test_error:.4f}" if test_error is not None else "")
                    + f" ({seconds:.2f}s)")
    total = time.perf_counter() - sweep_start
    logger.info(f"EM sweep over {len(entries)} values of K took {total:.2f}s")
    return SweepResult(entries, total)
