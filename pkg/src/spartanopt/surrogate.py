"""Gaussian-process fit and prediction with an estimated constant mean.

Observations are standardized before fitting so that the unit-variance
kernels carry no amplitude hyperparameter.  Fitting factorizes the noisy
Gram matrix once (with a jitter ladder as the fallback for near-singular
matrices); prediction and the log marginal likelihood reuse the factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpotrf, dpotrs

from .kernels import KernelSpec, cross_matrix, diag_value, gram_from_sqdiffs, pairwise_sqdiffs
from .warp import WarpParams, warp_point

STD_FLOOR = 1e-8
JITTER_LADDER = (0.0, 1e-10, 1e-6, 1e-4)
LOG_2PI = np.log(2.0 * np.pi)


class SingularModelError(RuntimeError):
    """Gram matrix stayed non-positive-definite through the jitter ladder."""


@dataclass(frozen=True)
class ObservationSet:
    """Query points in the unit hypercube with raw and standardized outcomes."""

    X: np.ndarray
    y_raw: np.ndarray
    y: np.ndarray
    y_mean: float
    y_std: float

    @classmethod
    def from_data(cls, X, y_raw) -> "ObservationSet":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y_raw = np.asarray(y_raw, dtype=float).ravel()
        if X.shape[0] != y_raw.shape[0]:
            raise ValueError("X and y_raw must have matching lengths")
        if y_raw.shape[0] == 0:
            return cls(X=X, y_raw=y_raw, y=y_raw.copy(), y_mean=0.0, y_std=1.0)
        mean = float(np.mean(y_raw))
        std = max(float(np.std(y_raw)), STD_FLOOR)
        return cls(X=X, y_raw=y_raw, y=(y_raw - mean) / std, y_mean=mean, y_std=std)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @cached_property
    def sqdiffs(self) -> np.ndarray:
        """Per-dimension squared differences of X, cached across refits."""
        return pairwise_sqdiffs(self.X)

    def standardize(self, value: float) -> float:
        return (value - self.y_mean) / self.y_std

    def unstandardize(self, value: float) -> float:
        return value * self.y_std + self.y_mean


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


@dataclass(frozen=True)
class PosteriorSnapshot:
    """Immutable fitted GP for one hyperparameter sample.

    ``X`` holds the training inputs in kernel space: for warped models these
    are the already-transformed points and ``warp`` records the transform to
    apply to query points.
    """

    spec: KernelSpec
    X: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    m_hat: float
    noise: float
    jitter: float = 0.0
    warp: WarpParams | None = None


def _solve_gram(K0: np.ndarray, y: np.ndarray):
    """Cholesky factor, GLS mean and weighted residual for a noisy Gram matrix.

    Walks the jitter ladder on factorization failure; raises
    SingularModelError when even the largest jitter does not help.
    Returns (L, alpha, m_hat, jitter).
    """
    n = y.shape[0]
    diag = np.diag_indices(n)
    for jitter in JITTER_LADDER:
        K = K0 if jitter == 0.0 else K0.copy()
        if jitter:
            K[diag] += jitter
        try:
            L = cholesky(K, lower=True, check_finite=False)
        except LinAlgError:
            continue
        rhs = np.empty((n, 2))
        rhs[:, 0] = y
        rhs[:, 1] = 1.0
        sol = cho_solve((L, True), rhs, check_finite=False)
        denom = float(np.sum(sol[:, 1]))
        m_hat = float(np.sum(sol[:, 0])) / denom
        alpha = sol[:, 0] - m_hat * sol[:, 1]
        return L, alpha, m_hat, jitter
    raise SingularModelError(
        f"Gram matrix not positive definite after jitter {JITTER_LADDER[-1]:g}"
    )


def gram_log_marginal(K0: np.ndarray, y: np.ndarray) -> float:
    """Log marginal likelihood for a prebuilt noisy Gram matrix.

    Hot path of the hyperparameter search: same arithmetic as
    fit + log_marginal_likelihood (raw LAPACK potrf/potrs, which is what
    the scipy wrappers call), without building a snapshot.  The caller may
    not reuse K0 afterwards.
    """
    n = y.shape[0]
    diag = np.diag_indices(n)
    for jitter in JITTER_LADDER:
        K = K0 if jitter == 0.0 else K0.copy()
        if jitter:
            K[diag] += jitter
        L, info = dpotrf(K, lower=1, clean=0, overwrite_a=jitter != 0.0)
        if info != 0:
            continue
        rhs = np.empty((n, 2))
        rhs[:, 0] = y
        rhs[:, 1] = 1.0
        sol, _ = dpotrs(L, rhs, lower=1, overwrite_b=1)
        denom = float(np.sum(sol[:, 1]))
        m_hat = float(np.sum(sol[:, 0])) / denom
        alpha = sol[:, 0] - m_hat * sol[:, 1]
        resid = y - m_hat
        return float(
            -0.5 * float(resid @ alpha)
            - np.log(np.diag(L)).sum()
            - 0.5 * n * LOG_2PI
        )
    raise SingularModelError(
        f"Gram matrix not positive definite after jitter {JITTER_LADDER[-1]:g}"
    )


def fit(obs: ObservationSet, spec: KernelSpec, noise: float, warp: WarpParams | None = None) -> PosteriorSnapshot:
    """Factorize the model for one kernel spec.

    Computes K = Gram + noise*I, its lower Cholesky factor, the
    generalized-least-squares constant mean m_hat = (1'K^-1 y)/(1'K^-1 1)
    and alpha = K^-1 (y - m_hat).  A Cholesky failure walks the jitter
    ladder before giving up with SingularModelError.
    """
    if obs.n < 1:
        raise ValueError("fit requires at least one observation")
    if noise < 0.0:
        raise ValueError("noise variance must be non-negative")
    if warp is None:
        Xk = obs.X
        K0 = gram_from_sqdiffs(obs.sqdiffs, Xk, spec, noise)
    else:
        Xk = warp_point(obs.X, warp)
        K0 = gram_from_sqdiffs(pairwise_sqdiffs(Xk), Xk, spec, noise)
    L, alpha, m_hat, jitter = _solve_gram(K0, obs.y)
    return PosteriorSnapshot(
        spec=spec, X=Xk, chol=L, alpha=alpha, m_hat=m_hat,
        noise=noise, jitter=jitter, warp=warp,
    )


def predict_batch(post: PosteriorSnapshot, Xq) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at each query row, via triangular solves."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if post.warp is not None:
        Xq = warp_point(Xq, post.warp)
    kq = cross_matrix(Xq, post.X, post.spec)
    mean = post.m_hat + kq @ post.alpha
    v = solve_triangular(post.chol, kq.T, lower=True, check_finite=False)
    kd = diag_value(Xq, post.spec)
    var = kd - np.einsum("ij,ij->j", v, v)
    np.clip(var, 0.0, kd + post.noise, out=var)
    return mean, var


def predict(post: PosteriorSnapshot, x_q) -> Prediction:
    """Posterior prediction at a single query point."""
    mean, var = predict_batch(post, np.asarray(x_q, dtype=float)[None, :])
    return Prediction(mean=float(mean[0]), variance=float(var[0]))


def log_marginal_likelihood(post: PosteriorSnapshot, obs: ObservationSet) -> float:
    """Profile log marginal likelihood of the standardized outcomes."""
    resid = obs.y - post.m_hat
    return float(
        -0.5 * float(resid @ post.alpha)
        - np.log(np.diag(post.chol)).sum()
        - 0.5 * obs.n * LOG_2PI
    )
