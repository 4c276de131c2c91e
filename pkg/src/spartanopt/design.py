"""Initial experiment designs on the unit hypercube."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import qmc

MAX_SOBOL_DIM = 32


def lhs(p: int, d: int, rng) -> np.ndarray:
    """Latin hypercube sample of p points in [0, 1)^d.

    Each dimension gets an independent random permutation of the p strata
    and a uniform offset within each stratum.
    """
    if p < 1 or d < 1:
        raise ValueError("count and dimension must be positive")
    pts = np.empty((p, d))
    for j in range(d):
        perm = rng.permutation(p)
        pts[:, j] = (perm + rng.random(p)) / p
    return pts


def sobol(p: int, d: int) -> np.ndarray:
    """Points 1..p of the unscrambled Joe-Kuo Sobol sequence.

    Index 0 (the all-zeros corner) is skipped; the result is deterministic
    and needs no seed.
    """
    if p < 1:
        raise ValueError("count must be positive")
    if not 1 <= d <= MAX_SOBOL_DIM:
        raise ValueError(f"sobol supports 1 <= d <= {MAX_SOBOL_DIM}, got {d}")
    with warnings.catch_warnings():
        # drawing a non power-of-two count is fine for a space-filling scan
        warnings.simplefilter("ignore", UserWarning)
        engine = qmc.Sobol(d, scramble=False)
        engine.fast_forward(1)
        return engine.random(p)
