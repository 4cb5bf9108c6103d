# utils/seeding.py
"""Deterministic seed streams for trees, restarts and generators."""
import numpy as np


def derive_seed(seed: int, *keys: int) -> int:
    """
    Mixes a base seed with integer keys (tree index, restart index, K, ...)
    through numpy's SeedSequence. The same (seed, keys) always yields the same
    32-bit seed, on every platform.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])

