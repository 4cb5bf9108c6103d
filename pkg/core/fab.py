# core/fab.py
"""
FAB inference: EM-like maximization of an asymptotic marginal-likelihood lower
bound. The log-mass penalty -omega * sum_k log(sum_n beta_k + 1) shrinks small
regions; regions whose mean responsibility falls below delta are removed, so K is
selected while fitting.
"""
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

import config
from core.em import (
    FitTrace,
    data_log_joint,
    entropy,
    expected_log_lik,
    has_converged,
    init_responsibilities,
    mstep,
    softmax_rows,
)
from core.errors import ConfigError
from models.simplified import SimplifiedModel, model_error
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FabConfig:
    k_max: int = config.FAB_K_MAX
    delta: float = config.FAB_DELTA
    inner_tol: float = config.FAB_INNER_TOL
    inner_max_iter: int = config.FAB_INNER_MAX_ITER
    outer_tol: float = config.FAB_OUTER_TOL
    outer_max_iter: int = config.FAB_OUTER_MAX_ITER
    restarts: int = config.FAB_RESTARTS
    seed: int = config.DEFAULT_SEED
    n_jobs: int = config.N_JOBS
    count_simplex: bool = False     # dim(phi)/K = C - 1 instead of C for classification
    omega: float | None = None      # None: computed from the task and L

    def __post_init__(self):
        if self.k_max < 1:
            raise ConfigError("k_max must be at least 1")
        # delta = 0 disables truncation; only regions with exactly zero mass are dropped then
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)")
        if self.inner_tol <= 0 or self.outer_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.inner_max_iter < 1 or self.outer_max_iter < 1:
            raise ConfigError("iteration limits must be at least 1")
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")
        if self.omega is not None and self.omega < 0:
            raise ConfigError("omega must be nonnegative")


def omega(task: str, n_classes: int | None, L: int, count_simplex: bool = False) -> float:
    """(dim(phi)/K + L + 1) / 2 with dim(phi)/K = 2 (mu, lambda) or C (gamma)."""
    if task == "regression":
        dim_phi = 2
    else:
        dim_phi = n_classes - 1 if count_simplex else n_classes
    return (dim_phi + L + 1) / 2.0


def _omega_for(dataset, cfg: FabConfig) -> float:
    if cfg.omega is not None:
        return float(cfg.omega)
    return omega(dataset.task, dataset.n_classes, dataset.L, cfg.count_simplex)


# --- Objective ---
def fab_objective(log_f: np.ndarray, beta: np.ndarray, w: float) -> float:
    mass = beta.sum(axis=0)
    return expected_log_lik(log_f, beta) - w * float(np.sum(np.log(mass + 1.0))) + entropy(beta)


def fab_lower_bound(dataset, model: SimplifiedModel, beta, w: float) -> float:
    beta = np.asarray(beta, dtype=float)
    return fab_objective(data_log_joint(dataset, model), beta, w)


# --- E-step ---
def fab_inner_loop(log_f: np.ndarray, psi: np.ndarray, w: float, tol: float, max_iter: int,
                   trace: list | None = None) -> tuple[np.ndarray, int]:
    """
    Majorize-minimize iteration: beta <- softmax(log f - w / (sum_n psi + 1)), psi <- beta,
    until the largest change in beta drops below tol. Each step cannot decrease
    fab_objective (the log-mass term is replaced by its tangent at psi).
    """
    psi = np.asarray(psi, dtype=float)
    if trace is not None:
        trace.append(fab_objective(log_f, psi, w))
    beta, n_iter = psi, 0
    for n_iter in range(1, max_iter + 1):
        mass = psi.sum(axis=0)
        beta = softmax_rows(log_f - w / (mass + 1.0))
        change = float(np.max(np.abs(beta - psi)))
        if trace is not None:
            trace.append(fab_objective(log_f, beta, w))
        psi = beta
        if change < tol:
            break
    return beta, n_iter


def fab_estep(dataset, model: SimplifiedModel, w: float, beta, inner_tol: float = config.FAB_INNER_TOL,
              inner_max_iter: int = config.FAB_INNER_MAX_ITER, trace: list | None = None) -> np.ndarray:
    """
    Responsibilities at the fixed point of beta proportional to f * exp(-w / (sum_n beta + 1)),
    started from `beta` (the previous outer iteration). If `trace` is a list, the
    E-step objective is appended before the first and after every update.
    """
    log_f = data_log_joint(dataset, model)
    beta, _ = fab_inner_loop(log_f, beta, w, inner_tol, inner_max_iter, trace)
    return beta


# --- Truncation ---
def truncate(beta, model: SimplifiedModel, delta: float) -> tuple[np.ndarray, SimplifiedModel, list[int]]:
    """
    Removes regions whose mean responsibility is below delta (or exactly zero).
    Returns the renormalized beta, the restricted model and the removed 0-based indices.
    At least the region with the largest mass always survives.
    """
    beta = np.asarray(beta, dtype=float)
    mean_mass = beta.mean(axis=0)
    keep = (mean_mass >= delta) & (mean_mass > 0)
    if not keep.any():
        keep[int(np.argmax(mean_mass))] = True
        logger.warning(f"Every region fell below delta={delta}; keeping the largest one")
    removed = np.flatnonzero(~keep).tolist()
    if not removed:
        return beta, model, []
    beta = beta[:, keep]
    rows = beta.sum(axis=1, keepdims=True)
    orphans = rows[:, 0] <= 0
    if orphans.any():
        beta[orphans] = 1.0 / beta.shape[1]
        rows[orphans] = 1.0
    beta = beta / rows
    logger.debug(f"Truncated regions {removed}: K {keep.size} -> {int(keep.sum())}")
    return beta, model.restrict(np.flatnonzero(keep)), removed


# --- Algorithm ---
def fab_fit(dataset, cfg: FabConfig | None = None, seed: int | None = None) -> tuple[SimplifiedModel, FitTrace, int]:
    """
    Starts from K = k_max random responsibilities, then repeats
    {inner E-loop; truncate; M-step} until the bound's relative change at constant K
    falls below outer_tol.
    """
    cfg = cfg or FabConfig()
    seed = cfg.seed if seed is None else seed
    w = _omega_for(dataset, cfg)
    start = time.perf_counter()
    trace = FitTrace()
    beta = init_responsibilities(dataset.N, cfg.k_max, seed)
    model = mstep(dataset, beta)
    log_f = data_log_joint(dataset, model)
    previous = None
    for it in range(1, cfg.outer_max_iter + 1):
        beta, _ = fab_inner_loop(log_f, beta, w, cfg.inner_tol, cfg.inner_max_iter)
        mean_mass = beta.mean(axis=0)
        beta, model, removed = truncate(beta, model, cfg.delta)
        kept_mass = np.delete(mean_mass, removed)
        model = mstep(dataset, beta)
        log_f = data_log_joint(dataset, model)
        bound = fab_objective(log_f, beta, w)
        trace.objective.append(bound)
        trace.n_regions.append(model.K)
        trace.min_kept_mass.append(float(kept_mass.min()))
        trace.n_iter = it
        logger.debug(f"FAB iter {it}: K={model.K}, bound={bound:.6f}")
        if removed:
            previous = None
            continue
        if has_converged(previous, bound, cfg.outer_tol):
            trace.converged = True
            break
        previous = bound
    trace.seconds = time.perf_counter() - start
    if not trace.converged:
        logger.warning(f"FAB inference did not converge in {cfg.outer_max_iter} outer iterations (K={model.K})")
    return model, trace, model.K


# --- Solution selection ---
@dataclass
class RestartReport:
    restart: int
    seed: int
    K: int
    train_error: float
    lower_bound: float
    n_iter: int
    converged: bool
    seconds: float
    selected: bool = False
    trace: FitTrace = field(default_factory=FitTrace, repr=False)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("trace")
        return doc


def _single_restart(dataset, cfg: FabConfig, restart: int):
    seed = derive_seed(cfg.seed, restart)
    model, trace, K = fab_fit(dataset, cfg, seed=seed)
    report = RestartReport(
        restart=restart,
        seed=seed,
        K=K,
        train_error=model_error(dataset, model, normalize=True),
        lower_bound=trace.objective[-1],
        n_iter=trace.n_iter,
        converged=trace.converged,
        seconds=trace.seconds,
        trace=trace,
    )
    return model, report


def fit_with_restarts(dataset, cfg: FabConfig | None = None) -> tuple[SimplifiedModel, list[RestartReport]]:
    """
    cfg.restarts independent fab_fit runs (seed of restart m = derive_seed(cfg.seed, m));
    the winner has the smallest training error, then fewer regions, then the lower index.
    """
    cfg = cfg or FabConfig()
    logger.info(f"FAB inference: K_max={cfg.k_max}, delta={cfg.delta}, {cfg.restarts} restarts, "
                f"omega={_omega_for(dataset, cfg):.2f}")
    results = Parallel(n_jobs=cfg.n_jobs)(
        delayed(_single_restart)(dataset, cfg, m) for m in range(cfg.restarts)
    )
    reports = [report for _, report in results]
    winner = min(range(len(results)), key=lambda m: (reports[m].train_error, reports[m].K, m))
    reports[winner].selected = True
    best = results[winner][0]
    logger.info(f"Selected restart {winner}: K={best.K}, train error {reports[winner].train_error:.4f}")
    return best, reports
