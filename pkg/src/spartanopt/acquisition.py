"""Expected improvement over the sampled-hyperparameter GP mixture.

The improvement target is the best outcome observed so far (in
standardized units).  The acquisition value at a point is the sum of the
per-sample closed-form EI terms; maximization runs a shifted Sobol scan
over the unit hypercube followed by a Nelder-Mead polish of the best scan
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from .design import sobol
from .surrogate import ObservationSet, PosteriorSnapshot, predict_batch

SIGMA_FLOOR = 1e-10
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Incumbent:
    """EI reference level: the best observed outcome, standardized."""

    rho: float
    x_best: np.ndarray
    y_best_raw: float

    @classmethod
    def from_observations(cls, obs: ObservationSet) -> "Incumbent":
        i = int(np.argmin(obs.y_raw))
        return cls(rho=float(obs.y[i]), x_best=obs.X[i].copy(), y_best_raw=float(obs.y_raw[i]))


@dataclass(frozen=True)
class AcquisitionResult:
    x_next: np.ndarray
    ei_value: float


def _ei_terms(mean: np.ndarray, var: np.ndarray, rho: float) -> np.ndarray:
    sigma = np.sqrt(var)
    impr = rho - mean
    out = np.maximum(impr, 0.0)
    live = sigma >= SIGMA_FLOOR
    if np.any(live):
        z = impr[live] / sigma[live]
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
        out[live] = impr[live] * ndtr(z) + sigma[live] * pdf
    return np.maximum(out, 0.0)


def expected_improvement_batch(Xq, posteriors, inc: Incumbent) -> np.ndarray:
    """EI summed over the hyperparameter samples, for each query row."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    total = np.zeros(Xq.shape[0])
    for post in posteriors:
        mean, var = predict_batch(post, Xq)
        total += _ei_terms(mean, var, inc.rho)
    return total


def expected_improvement(x, posteriors, inc: Incumbent) -> float:
    return float(expected_improvement_batch(np.asarray(x, dtype=float)[None, :], posteriors, inc)[0])


def _lexicographic_first(points: np.ndarray) -> int:
    order = np.lexsort(points[:, ::-1].T)
    return int(order[0])


def _scan_points(dim: int, n: int, rng, candidates) -> np.ndarray:
    shift = rng.random(dim)
    pts = np.mod(sobol(n, dim) + shift, 1.0)
    if len(candidates):
        cand = np.clip(np.atleast_2d(np.asarray(candidates, dtype=float)), 0.0, 1.0)
        pts = np.vstack([cand, pts])
    return pts


def maximize_acquisition(
    posteriors: list[PosteriorSnapshot],
    inc: Incumbent,
    budget: int,
    rng,
    candidates=(),
) -> AcquisitionResult:
    """Two-stage EI maximization over [0, 1]^d.

    Stage one scans ceil(0.9 * budget) shifted Sobol points plus the given
    candidate points (the incumbent location, and the sampled local-region
    centers when available); stage two refines the best scan point with
    Nelder-Mead on the remaining budget.  Ties are broken toward the
    lexicographically smallest point, so the result does not depend on
    evaluation order.
    """
    if budget < 100:
        raise ValueError("acquisition budget must be at least 100 evaluations")
    dim = posteriors[0].X.shape[1]
    cand_list = [np.asarray(inc.x_best, dtype=float)]
    cand_list.extend(np.asarray(c, dtype=float) for c in candidates)

    n_scan = int(math.ceil(0.9 * budget))
    pts = _scan_points(dim, n_scan, rng, cand_list)
    ei = expected_improvement_batch(pts, posteriors, inc)
    best_val = float(ei.max())
    ties = np.flatnonzero(ei == best_val)
    best_idx = ties[0] if ties.size == 1 else ties[_lexicographic_first(pts[ties])]
    x_best = pts[best_idx].copy()

    nm_budget = budget - n_scan - len(cand_list)
    if nm_budget >= 10:
        def neg_ei(x):
            return -expected_improvement(np.clip(x, 0.0, 1.0), posteriors, inc)

        res = minimize(
            neg_ei,
            x_best,
            method="Nelder-Mead",
            options={"maxfev": nm_budget, "xatol": 1e-6, "fatol": 1e-12},
        )
        refined = np.clip(res.x, 0.0, 1.0)
        refined_val = float(-res.fun)
        if refined_val > best_val:
            return AcquisitionResult(x_next=refined, ei_value=refined_val)
    return AcquisitionResult(x_next=x_best, ei_value=best_val)


def max_variance_point(posteriors: list[PosteriorSnapshot], n_scan: int, rng) -> np.ndarray:
    """Scan point with the largest mixture predictive variance.

    Fallback query for degenerate, identically-zero EI surfaces; the
    mixture variance is the mean per-sample variance plus the dispersion of
    the per-sample means.
    """
    dim = posteriors[0].X.shape[1]
    pts = _scan_points(dim, n_scan, rng, [])
    m = len(posteriors)
    mean_acc = np.zeros(pts.shape[0])
    second = np.zeros(pts.shape[0])
    for post in posteriors:
        mean, var = predict_batch(post, pts)
        mean_acc += mean
        second += var + mean * mean
    mix_var = second / m - (mean_acc / m) ** 2
    ties = np.flatnonzero(mix_var == mix_var.max())
    idx = ties[0] if ties.size == 1 else ties[_lexicographic_first(pts[ties])]
    return pts[idx].copy()
