# data/synthetic.py
"""
Two-dimensional synthetic benchmarks with label noise.

synthetic1: y* = XOR(x1 > 0.5, x2 > 0.5), a box-shaped boundary four rules can express.
synthetic2: y* = 1(x2 > r(x1)) with a smooth sigmoid-plus-cosine boundary r.
Both flip each label with probability noise_rate. x is uniform on [0, 1]^2.
"""
import logging

import numpy as np

import config
from core.errors import ConfigError
from data.loader import Dataset

logger = logging.getLogger(__name__)

GENERATORS = ("synthetic1", "synthetic2")


def synthetic2_boundary(x1):
    """r(x1) = 0.25 + 0.5 / (1 + exp(-20 (x1 - 0.5))) + 0.05 cos(2 pi x1)."""
    x1 = np.asarray(x1, dtype=float)
    return 0.25 + 0.5 / (1.0 + np.exp(-20.0 * (x1 - 0.5))) + 0.05 * np.cos(2.0 * np.pi * x1)


def clean_labels(name: str, X) -> np.ndarray:
    """Noise-free labels y* of either generator."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if name == "synthetic1":
        return np.logical_xor(X[:, 0] > 0.5, X[:, 1] > 0.5).astype(np.intp)
    if name == "synthetic2":
        return (X[:, 1] > synthetic2_boundary(X[:, 0])).astype(np.intp)
    raise ConfigError(f"unknown generator {name!r} (expected one of {GENERATORS})")


def _generate(name: str, N: int, noise_rate: float, seed: int) -> Dataset:
    if N < 1:
        raise ConfigError("N must be at least 1")
    if not 0.0 <= noise_rate <= 1.0:
        raise ConfigError("noise_rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(N, 2))
    flips = rng.uniform(0.0, 1.0, size=N) < noise_rate
    y = np.logical_xor(clean_labels(name, X), flips).astype(np.intp)
    logger.debug(f"{name}: N={N}, seed={seed}, flipped {int(flips.sum())} labels")
    return Dataset(X, y, "classification", n_classes=2, feature_names=("x1", "x2"), class_labels=(0, 1))


def gen_synthetic1(N: int = config.SYNTH_N, noise_rate: float = config.SYNTH_NOISE_RATE,
                   seed: int = config.DEFAULT_SEED) -> Dataset:
    return _generate("synthetic1", N, noise_rate, seed)


def gen_synthetic2(N: int = config.SYNTH_N, noise_rate: float = config.SYNTH_NOISE_RATE,
                   seed: int = config.DEFAULT_SEED) -> Dataset:
    # Same 10% XOR flip as synthetic1.
    return _generate("synthetic2", N, noise_rate, seed)


def generate(name: str, N: int = config.SYNTH_N, noise_rate: float = config.SYNTH_NOISE_RATE,
             seed: int = config.DEFAULT_SEED) -> Dataset:
    if name not in GENERATORS:
        raise ConfigError(f"unknown generator {name!r} (expected one of {GENERATORS})")
    return _generate(name, N, noise_rate, seed)
