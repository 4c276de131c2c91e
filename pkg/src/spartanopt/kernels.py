"""Covariance functions for the GP surrogate.

Provides squared-exponential and Matern 5/2 kernels with per-dimension
(ARD) length-scales, and a composite kernel that blends a global and a
local kernel through normalized Gaussian region weights.  All kernels are
correlation functions (unit diagonal); the output scale is carried by the
standardized observations, not by a signal-variance hyperparameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

SQRT5 = np.sqrt(5.0)

SE_ARD = "se-ard"
MATERN52_ARD = "matern52-ard"
SPARTAN = "spartan"

KINDS = (SE_ARD, MATERN52_ARD, SPARTAN)


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class LengthScales:
    """Per-dimension ARD length-scales; all entries strictly positive."""

    values: np.ndarray

    def __post_init__(self):
        v = _as_vector(self.values, "length-scales")
        if np.any(v <= 0.0):
            raise ValueError("length-scales must be strictly positive")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SpartanWeightConfig:
    """Centers and influence variances of the global/local region weights.

    The global weight is a normal density centered at ``psi`` with variance
    ``sigma2_g``; the local weight is centered at the learned ``theta_p``
    with variance ``sigma2_l``.  Inputs live in the unit hypercube, so
    ``theta_p`` must too.
    """

    psi: np.ndarray
    sigma2_g: float
    sigma2_l: float
    theta_p: np.ndarray

    def __post_init__(self):
        psi = _as_vector(self.psi, "psi")
        tp = _as_vector(self.theta_p, "theta_p")
        if psi.shape != tp.shape:
            raise ValueError("psi and theta_p must have the same dimension")
        if not (self.sigma2_g > 0.0 and self.sigma2_l > 0.0):
            raise ValueError("influence variances must be positive")
        if np.any(tp < 0.0) or np.any(tp > 1.0):
            raise ValueError("theta_p must lie in the unit hypercube")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "theta_p", tp)
        object.__setattr__(self, "sigma2_g", float(self.sigma2_g))
        object.__setattr__(self, "sigma2_l", float(self.sigma2_l))


def default_weight_config(theta_p, sigma2_l: float = 0.05) -> SpartanWeightConfig:
    """Weight config with the default near-uniform global region.

    In normalized space psi = [0.5]^d with sigma2_g = 10 approximates a
    uniform global weight.
    """
    tp = _as_vector(theta_p, "theta_p")
    return SpartanWeightConfig(
        psi=np.full(tp.shape[0], 0.5),
        sigma2_g=10.0,
        sigma2_l=sigma2_l,
        theta_p=tp,
    )


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel configuration.

    Plain kinds carry only ``global_scales``; the composite ("spartan")
    kind additionally carries the local scales and the weight config, for
    3d hyperparameters in total (d global + d local + d for the local
    center).
    """

    kind: str
    global_scales: LengthScales
    local_scales: LengthScales | None = None
    weights: SpartanWeightConfig | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == SPARTAN:
            if self.local_scales is None or self.weights is None:
                raise ValueError("spartan spec requires local scales and weights")
            if self.local_scales.dim != self.global_scales.dim:
                raise ValueError("local and global scales must share a dimension")
            if self.weights.theta_p.shape[0] != self.global_scales.dim:
                raise ValueError("weight config dimension mismatch")

    @property
    def dim(self) -> int:
        return self.global_scales.dim

    @property
    def hyper_count(self) -> int:
        return 3 * self.dim if self.kind == SPARTAN else self.dim


def matern_spec(scales) -> KernelSpec:
    return KernelSpec(MATERN52_ARD, LengthScales(np.asarray(scales, dtype=float)))


def spartan_spec(global_scales, local_scales, weights: SpartanWeightConfig) -> KernelSpec:
    return KernelSpec(
        SPARTAN,
        LengthScales(np.asarray(global_scales, dtype=float)),
        LengthScales(np.asarray(local_scales, dtype=float)),
        weights,
    )


# ---------------------------------------------------------------------------
# scalar kernel evaluations


def _ard_r(x: np.ndarray, x2: np.ndarray, scales: LengthScales) -> float:
    if x.shape != x2.shape or x.shape[0] != scales.dim:
        raise ValueError("point/scale dimension mismatch")
    z = (x - x2) / scales.values
    return float(np.sqrt(np.dot(z, z)))


def _matern52_of_r(r):
    return np.exp(-SQRT5 * r) * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r)


def matern52(x, x2, scales: LengthScales) -> float:
    """Matern 5/2 correlation exp(-sqrt5 r)(1 + sqrt5 r + 5/3 r^2) with the
    ARD-weighted distance r."""
    x = _as_vector(x, "x")
    x2 = _as_vector(x2, "x'")
    return float(_matern52_of_r(_ard_r(x, x2, scales)))


def squared_exponential(x, x2, scales: LengthScales) -> float:
    """Squared-exponential correlation exp(-r^2/2)."""
    x = _as_vector(x, "x")
    x2 = _as_vector(x2, "x'")
    r = _ard_r(x, x2, scales)
    return float(np.exp(-0.5 * r * r))


def _weight_squares_core(X, psi, sigma2_g, theta_p, sigma2_l):
    d = X.shape[1]
    dg = X - psi
    dl = X - theta_p
    log_wg = -0.5 * np.einsum("ij,ij->i", dg, dg) / sigma2_g \
        - 0.5 * d * np.log(2.0 * np.pi * sigma2_g)
    log_wl = -0.5 * np.einsum("ij,ij->i", dl, dl) / sigma2_l \
        - 0.5 * d * np.log(2.0 * np.pi * sigma2_l)
    t = log_wl - log_wg
    return expit(-t), expit(t)


def weight_squares(X: np.ndarray, cfg: SpartanWeightConfig):
    """Squared normalized weights (lambda_g^2, lambda_l^2) for rows of X.

    Computed through the log-density ratio and a logistic transform, which
    keeps the normalization lambda_g^2 + lambda_l^2 = 1 stable even when one
    density underflows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise ValueError("weight evaluation requires finite inputs")
    return _weight_squares_core(X, cfg.psi, cfg.sigma2_g, cfg.theta_p, cfg.sigma2_l)


def spartan_weights(x, cfg: SpartanWeightConfig):
    """Normalized region weights (lambda_g, lambda_l) at a single point."""
    x = _as_vector(x, "x")
    wg2, wl2 = weight_squares(x[None, :], cfg)
    return float(np.sqrt(wg2[0])), float(np.sqrt(wl2[0]))


def spartan_kernel(x, x2, spec: KernelSpec) -> float:
    """Composite correlation lam_g(x)lam_g(x') k_g + lam_l(x)lam_l(x') k_l."""
    if spec.kind != SPARTAN:
        raise ValueError("spec must be of the spartan kind")
    x = _as_vector(x, "x")
    x2 = _as_vector(x2, "x'")
    wg2, wl2 = weight_squares(np.stack([x, x2]), spec.weights)
    kg = matern52(x, x2, spec.global_scales)
    kl = matern52(x, x2, spec.local_scales)
    return float(np.sqrt(wg2[0] * wg2[1]) * kg + np.sqrt(wl2[0] * wl2[1]) * kl)


def kernel_value(x, x2, spec: KernelSpec) -> float:
    if spec.kind == SPARTAN:
        return spartan_kernel(x, x2, spec)
    if spec.kind == MATERN52_ARD:
        return matern52(x, x2, spec.global_scales)
    return squared_exponential(x, x2, spec.global_scales)


# ---------------------------------------------------------------------------
# vectorized matrix evaluations


def _cross_sq(A: np.ndarray, B: np.ndarray, scales: LengthScales) -> np.ndarray:
    return cdist(A / scales.values, B / scales.values, "sqeuclidean")


def matern52_consuming_sq(r2: np.ndarray) -> np.ndarray:
    """Matern 5/2 from a squared-distance array, overwriting the argument."""
    r = np.sqrt(r2)
    poly = np.multiply(r2, 5.0 / 3.0, out=r2)
    poly += 1.0
    t = np.multiply(r, SQRT5, out=r)
    poly += t
    np.negative(t, out=t)
    np.exp(t, out=t)
    poly *= t
    return poly


def _plain_from_sq(r2: np.ndarray, kind: str) -> np.ndarray:
    # consumes r2; every caller passes a freshly built distance array
    if kind == MATERN52_ARD:
        return matern52_consuming_sq(r2)
    r2 *= -0.5
    return np.exp(r2, out=r2)


def cross_matrix(A, B, spec: KernelSpec) -> np.ndarray:
    """Kernel matrix k(a_i, b_j) for two point sets, shape (na, nb)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1] or A.shape[1] != spec.dim:
        raise ValueError("point set dimension mismatch")
    if spec.kind != SPARTAN:
        return _plain_from_sq(_cross_sq(A, B, spec.global_scales), spec.kind)
    Kg = _plain_from_sq(_cross_sq(A, B, spec.global_scales), MATERN52_ARD)
    Kl = _plain_from_sq(_cross_sq(A, B, spec.local_scales), MATERN52_ARD)
    wg2_a, wl2_a = weight_squares(A, spec.weights)
    wg2_b, wl2_b = weight_squares(B, spec.weights)
    return np.sqrt(np.outer(wg2_a, wg2_b)) * Kg + np.sqrt(np.outer(wl2_a, wl2_b)) * Kl


def diag_value(X, spec: KernelSpec) -> np.ndarray:
    """k(x, x) for each row of X (1 for plain kernels)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if spec.kind != SPARTAN:
        return np.ones(X.shape[0])
    wg2, wl2 = weight_squares(X, spec.weights)
    return wg2 + wl2


def pairwise_sqdiffs(X: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, shape (d, n, n).

    Cached by callers that evaluate many hyperparameter settings on the
    same point set; the ARD squared distance is then one tensordot away.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    diff = X.T[:, :, None] - X.T[:, None, :]
    return diff * diff


def gram_from_sqdiffs(sq: np.ndarray, X: np.ndarray, spec: KernelSpec, noise: float) -> np.ndarray:
    """Gram matrix from a precomputed pairwise_sqdiffs tensor."""
    inv_g = 1.0 / (spec.global_scales.values ** 2)
    r2 = np.tensordot(inv_g, sq, axes=1)
    if spec.kind != SPARTAN:
        K = _plain_from_sq(r2, spec.kind)
    else:
        Kg = _plain_from_sq(r2, MATERN52_ARD)
        inv_l = 1.0 / (spec.local_scales.values ** 2)
        Kl = _plain_from_sq(np.tensordot(inv_l, sq, axes=1), MATERN52_ARD)
        wg2, wl2 = weight_squares(X, spec.weights)
        K = np.sqrt(np.outer(wg2, wg2)) * Kg + np.sqrt(np.outer(wl2, wl2)) * Kl
    if noise:
        K[np.diag_indices_from(K)] += noise
    return K


def gram_matrix(X, spec: KernelSpec, noise: float = 0.0) -> np.ndarray:
    """Gram matrix K[i, j] = k(x_i, x_j) + noise * [i == j]."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("gram_matrix needs at least one point")
    if X.shape[1] != spec.dim:
        raise ValueError("point set dimension mismatch")
    if not np.all(np.isfinite(X)):
        raise ValueError("gram_matrix requires finite inputs")
    if noise < 0.0:
        raise ValueError("noise variance must be non-negative")
    return gram_from_sqdiffs(pairwise_sqdiffs(X), X, spec, noise)


def adaptive_sigma2_l(theta_p, X, k_loc: int = 8, lo: float = 0.01, hi: float = 0.25) -> float:
    """Local influence variance chosen from the sample density near theta_p.

    Picks sigma_l so that k_loc observed points fall within Euclidean
    distance 2*sigma_l of the local center (the area narrows as the
    neighbourhood fills up), clamping sigma_l to [lo, hi] to avoid
    degenerate regions.
    """
    tp = _as_vector(theta_p, "theta_p")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    dists = np.sqrt(((X - tp) ** 2).sum(axis=1))
    k = min(k_loc, dists.shape[0])
    sigma_l = 0.5 * np.sort(dists)[k - 1]
    sigma_l = min(max(sigma_l, lo), hi)
    return float(sigma_l ** 2)
