"""Hyperparameter learning by slice-sampling MCMC.

The sampler walks a flat coordinate vector whose layout depends on the
surrogate mode: length-scales (in log-space) for the stationary model,
plus the local scales and local-region center for the composite kernel, or
the warping shape parameters (log-space) for the input-warping baseline.
The target density is the GP log marginal likelihood plus weakly
informative priors; the same prior is placed on the local and global
length-scale blocks so the data decide which kernel turns out narrow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .kernels import (
    SpartanWeightConfig,
    _weight_squares_core,
    adaptive_sigma2_l,
    matern52_consuming_sq,
    matern_spec,
    pairwise_sqdiffs,
    spartan_spec,
)
from .surrogate import (
    ObservationSet,
    PosteriorSnapshot,
    SingularModelError,
    fit,
    gram_log_marginal,
    log_marginal_likelihood,
)
from .warp import WarpParams, beta_cdf

BO = "bo"
SBO = "sbo"
WARP = "warp"
MODES = (BO, SBO, WARP)

# log-normal(log 0.3, 1) on length-scales in normalized space,
# log-normal(0, 0.75) on the warp shapes, uniform on the local center.
LS_LOG_MEAN = math.log(0.3)
LS_LOG_SD = 1.0
WARP_LOG_MEAN = 0.0
WARP_LOG_SD = 0.75

_VEC_BOUND = 40.0  # |coordinate| beyond this is numerically dead prior mass


class DegeneratePosteriorError(RuntimeError):
    """No starting point with finite posterior density could be found."""


@dataclass(frozen=True)
class McmcConfig:
    n_samples: int = 10
    burn_in: int = 100
    thin: int = 10
    step_width: float = 1.0
    max_stepout: int = 10

    def __post_init__(self):
        if self.n_samples < 1 or self.burn_in < 0 or self.thin < 1:
            raise ValueError("invalid MCMC configuration")


@dataclass(frozen=True)
class ModelSetup:
    """Resolved surrogate configuration shared by one optimization run."""

    mode: str
    dim: int
    noise: float = 1e-6
    sigma2_l: float = 0.05
    adaptive_k: int | None = None
    pin_local: bool = False
    sigma2_g: float = 10.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown surrogate mode {self.mode!r}")


@dataclass(frozen=True)
class HyperSample:
    """One MCMC draw of the hyperparameter vector.

    Length-scales and warp shapes are stored in log-space; the local-region
    center ``theta_p`` is stored directly in the unit hypercube.
    """

    log_global: np.ndarray
    log_local: np.ndarray | None = None
    theta_p: np.ndarray | None = None
    log_warp: np.ndarray | None = None

    def to_vector(self, setup: ModelSetup) -> np.ndarray:
        if setup.mode == SBO and not setup.pin_local:
            return np.concatenate([self.log_global, self.log_local, self.theta_p])
        if setup.mode == WARP:
            return np.concatenate([self.log_global, self.log_warp])
        return np.asarray(self.log_global, dtype=float).copy()


def sampler_dim(setup: ModelSetup) -> int:
    if setup.mode == SBO and not setup.pin_local:
        return 3 * setup.dim
    if setup.mode == WARP:
        return 3 * setup.dim
    return setup.dim


def sample_from_vector(vec, setup: ModelSetup) -> HyperSample:
    vec = np.asarray(vec, dtype=float)
    if vec.shape[0] != sampler_dim(setup):
        raise ValueError("vector length does not match the sampler layout")
    d = setup.dim
    if setup.mode == WARP:
        return HyperSample(log_global=vec[:d].copy(), log_warp=vec[d:].copy())
    if setup.mode == SBO:
        if setup.pin_local:
            g = vec.copy()
            return HyperSample(log_global=g, log_local=g, theta_p=np.full(d, 0.5))
        return HyperSample(
            log_global=vec[:d].copy(),
            log_local=vec[d : 2 * d].copy(),
            theta_p=vec[2 * d :].copy(),
        )
    return HyperSample(log_global=vec.copy())


def initial_vector(setup: ModelSetup) -> np.ndarray:
    """Prior-median starting point for a fresh chain."""
    k = sampler_dim(setup)
    vec = np.full(k, LS_LOG_MEAN)
    d = setup.dim
    if setup.mode == SBO and not setup.pin_local:
        vec[2 * d :] = 0.5
    elif setup.mode == WARP:
        vec[d:] = WARP_LOG_MEAN
    return vec


def _prior_vector(setup: ModelSetup, rng) -> np.ndarray:
    k = sampler_dim(setup)
    d = setup.dim
    vec = rng.normal(LS_LOG_MEAN, LS_LOG_SD, k)
    if setup.mode == SBO and not setup.pin_local:
        vec[2 * d :] = rng.uniform(0.0, 1.0, d)
    elif setup.mode == WARP:
        vec[d:] = rng.normal(WARP_LOG_MEAN, WARP_LOG_SD, 2 * d)
    return vec


def reflect_unit(v: np.ndarray) -> np.ndarray:
    """Triangle-wave reflection of coordinates into [0, 1]."""
    folded = np.mod(v, 2.0)
    return np.where(folded > 1.0, 2.0 - folded, folded)


def _normal_logpdf_sum(x, mean, sd):
    z = (x - mean) / sd
    n = x.shape[0]
    return -0.5 * float(np.dot(z, z)) - n * (math.log(sd) + 0.5 * math.log(2.0 * math.pi))


def log_prior(sample: HyperSample, setup: ModelSetup) -> float:
    lp = _normal_logpdf_sum(sample.log_global, LS_LOG_MEAN, LS_LOG_SD)
    if setup.mode == SBO and not setup.pin_local:
        lp += _normal_logpdf_sum(sample.log_local, LS_LOG_MEAN, LS_LOG_SD)
        tp = sample.theta_p
        if np.any(tp < 0.0) or np.any(tp > 1.0):
            return -np.inf
    elif setup.mode == WARP:
        lp += _normal_logpdf_sum(sample.log_warp, WARP_LOG_MEAN, WARP_LOG_SD)
    return lp


def build_spec(sample: HyperSample, obs: ObservationSet | None, setup: ModelSetup):
    """Kernel spec (and warp transform, if any) induced by one sample."""
    if setup.mode == BO:
        return matern_spec(np.exp(sample.log_global)), None
    if setup.mode == WARP:
        d = setup.dim
        w = WarpParams(np.exp(sample.log_warp[:d]), np.exp(sample.log_warp[d:]))
        return matern_spec(np.exp(sample.log_global)), w
    if setup.pin_local:
        weights = SpartanWeightConfig(
            psi=np.full(setup.dim, 0.5),
            sigma2_g=setup.sigma2_g,
            sigma2_l=setup.sigma2_g,
            theta_p=np.full(setup.dim, 0.5),
        )
    else:
        if setup.adaptive_k is not None and obs is not None and obs.n > 0:
            s2l = adaptive_sigma2_l(sample.theta_p, obs.X, setup.adaptive_k)
        else:
            s2l = setup.sigma2_l
        weights = SpartanWeightConfig(
            psi=np.full(setup.dim, 0.5),
            sigma2_g=setup.sigma2_g,
            sigma2_l=s2l,
            theta_p=sample.theta_p,
        )
    return spartan_spec(np.exp(sample.log_global), np.exp(sample.log_local), weights), None


def fit_sample(sample: HyperSample, obs: ObservationSet, setup: ModelSetup) -> PosteriorSnapshot:
    spec, w = build_spec(sample, obs, setup)
    return fit(obs, spec, setup.noise, warp=w)


def log_posterior(sample: HyperSample, obs: ObservationSet, setup: ModelSetup) -> float:
    """Log marginal likelihood plus log prior; -inf off the prior support
    or when the induced model is singular."""
    lp = log_prior(sample, setup)
    if not np.isfinite(lp) or obs.n == 0:
        return lp
    try:
        snap = fit_sample(sample, obs, setup)
    except SingularModelError:
        return -np.inf
    return lp + log_marginal_likelihood(snap, obs)


def _make_target(obs: ObservationSet, setup: ModelSetup):
    """Log-posterior closure over the flat coordinate vector.

    Specialized per mode to keep the per-evaluation cost down: the Gram
    matrix is assembled from the observation set's cached squared-difference
    tensor without going through the declarative spec objects.  Matches
    ``log_posterior`` on the structured sample (same arithmetic core).
    """
    if obs.n == 0:
        def prior_only(vec: np.ndarray) -> float:
            if np.any(np.abs(vec) > _VEC_BOUND):
                return -np.inf
            v = vec
            if setup.mode == SBO and not setup.pin_local:
                v = vec.copy()
                v[2 * setup.dim:] = reflect_unit(v[2 * setup.dim:])
            return log_prior(sample_from_vector(v, setup), setup)

        return prior_only

    d = setup.dim
    n = obs.n
    y = obs.y
    noise = setup.noise
    diag = np.diag_indices(n)
    prior_const = -(math.log(LS_LOG_SD) + 0.5 * math.log(2.0 * math.pi))

    def _lml(K0: np.ndarray) -> float:
        try:
            return gram_log_marginal(K0, y)
        except SingularModelError:
            return -np.inf

    if setup.mode in (BO, SBO) and (setup.mode == BO or setup.pin_local):
        sq2 = obs.sqdiffs.reshape(d, n * n)

        def target(vec: np.ndarray) -> float:
            if np.any(np.abs(vec) > _VEC_BOUND):
                return -np.inf
            z = (vec - LS_LOG_MEAN) / LS_LOG_SD
            lp = -0.5 * float(np.dot(z, z)) + d * prior_const
            inv = 1.0 / (np.exp(vec) ** 2)
            K = matern52_consuming_sq((inv @ sq2).reshape(n, n))
            K[diag] += noise
            return lp + _lml(K)

        return target

    if setup.mode == SBO:
        sq2 = obs.sqdiffs.reshape(d, n * n)
        X = obs.X
        psi = np.full(d, 0.5)
        # the global weight density never moves; only the local one does
        dg = X - psi
        log_wg = -0.5 * np.einsum("ij,ij->i", dg, dg) / setup.sigma2_g \
            - 0.5 * d * math.log(2.0 * math.pi * setup.sigma2_g)

        def target(vec: np.ndarray) -> float:
            if np.any(np.abs(vec) > _VEC_BOUND):
                return -np.inf
            scales = vec[: 2 * d]
            z = (scales - LS_LOG_MEAN) / LS_LOG_SD
            lp = -0.5 * float(np.dot(z, z)) + 2 * d * prior_const
            theta_p = reflect_unit(vec[2 * d :])
            if setup.adaptive_k is not None:
                s2l = adaptive_sigma2_l(theta_p, X, setup.adaptive_k)
            else:
                s2l = setup.sigma2_l
            inv = 1.0 / (np.exp(scales) ** 2)
            Kg = matern52_consuming_sq((inv[:d] @ sq2).reshape(n, n))
            Kl = matern52_consuming_sq((inv[d:] @ sq2).reshape(n, n))
            dl = X - theta_p
            log_wl = -0.5 * np.einsum("ij,ij->i", dl, dl) / s2l \
                - 0.5 * d * math.log(2.0 * math.pi * s2l)
            t = log_wl - log_wg
            wg2 = expit(-t)
            wl2 = expit(t)
            K = np.sqrt(np.outer(wg2, wg2))
            K *= Kg
            Kl *= np.sqrt(np.outer(wl2, wl2))
            K += Kl
            K[diag] += noise
            return lp + _lml(K)

        return target

    # warp: the inputs move with the hyperparameters, so the distance tensor
    # is rebuilt per evaluation (the honest cost of this baseline)
    X = obs.X
    warp_prior_const = -(math.log(WARP_LOG_SD) + 0.5 * math.log(2.0 * math.pi))

    def target(vec: np.ndarray) -> float:
        if np.any(np.abs(vec) > _VEC_BOUND):
            return -np.inf
        z = (vec[:d] - LS_LOG_MEAN) / LS_LOG_SD
        lp = -0.5 * float(np.dot(z, z)) + d * prior_const
        zw = (vec[d:] - WARP_LOG_MEAN) / WARP_LOG_SD
        lp += -0.5 * float(np.dot(zw, zw)) + 2 * d * warp_prior_const
        Xw = beta_cdf(X, np.exp(vec[d : 2 * d]), np.exp(vec[2 * d :]))
        sq = pairwise_sqdiffs(Xw)
        K = matern52_consuming_sq(np.tensordot(1.0 / (np.exp(vec[:d]) ** 2), sq, axes=1))
        K[diag] += noise
        return lp + _lml(K)

    return target


def slice_sample(target, start, cfg: McmcConfig, rng, max_stepouts=None) -> np.ndarray:
    """Coordinate-wise univariate slice sampling with step-out and shrinkage.

    Sweeps every coordinate once per step, discards ``burn_in`` sweeps and
    then keeps one state per ``thin`` sweeps, for ``n_samples`` retained
    states.  Deterministic for a given generator.  ``max_stepouts`` can cap
    the bracket expansion per coordinate (used for coordinates whose target
    is periodic, where a bracket of one period already covers every state).
    """
    x = np.array(start, dtype=float)
    fx = target(x)
    if not np.isfinite(fx):
        raise ValueError("slice sampling requires a finite target at the start")
    k = x.shape[0]
    width = cfg.step_width
    if max_stepouts is None:
        max_stepouts = np.full(k, cfg.max_stepout, dtype=int)
    out = np.empty((cfg.n_samples, k))
    kept = 0
    total = cfg.burn_in + cfg.n_samples * cfg.thin
    for sweep in range(1, total + 1):
        for j in range(k):
            x_j = x[j]
            level = fx + math.log(1.0 - rng.random())
            r = rng.random()
            left = x_j - r * width
            right = left + width
            steps = max_stepouts[j]
            while steps > 0:
                x[j] = left
                if target(x) <= level:
                    break
                left -= width
                steps -= 1
            steps = max_stepouts[j]
            while steps > 0:
                x[j] = right
                if target(x) <= level:
                    break
                right += width
                steps -= 1
            shrinks = 0
            while True:
                xj_new = left + rng.random() * (right - left)
                x[j] = xj_new
                f_new = target(x)
                if f_new > level:
                    fx = f_new
                    break
                if xj_new < x_j:
                    left = xj_new
                elif xj_new > x_j:
                    right = xj_new
                shrinks += 1
                if xj_new == x_j or shrinks > 1000:
                    # interval collapsed onto the current point
                    x[j] = x_j
                    fx = target(x)
                    break
        if sweep > cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
            out[kept] = x
            kept += 1
    return out


def posterior_samples(
    obs: ObservationSet,
    setup: ModelSetup,
    cfg: McmcConfig,
    rng,
    warm_start: np.ndarray | None = None,
) -> list[HyperSample]:
    """Draw ``cfg.n_samples`` hyperparameter samples for the current data.

    A chain warm-started from the previous iteration's final state needs
    only half the burn-in; a fresh chain starts at the prior median.  The
    last returned sample doubles as the warm start for the next iteration
    (``HyperSample.to_vector``).
    """
    target = _make_target(obs, setup)
    d = setup.dim
    reflect_block = setup.mode == SBO and not setup.pin_local

    start = None
    burn_in = cfg.burn_in
    if warm_start is not None and np.isfinite(target(np.asarray(warm_start, dtype=float))):
        start = np.asarray(warm_start, dtype=float)
        burn_in = cfg.burn_in // 2
    if start is None:
        cand = initial_vector(setup)
        if np.isfinite(target(cand)):
            start = cand
    tries = 0
    while start is None and tries < 20:
        cand = _prior_vector(setup, rng)
        if np.isfinite(target(cand)):
            start = cand
        tries += 1
    if start is None:
        raise DegeneratePosteriorError("posterior density is -inf at every tried start")

    chain_cfg = McmcConfig(
        n_samples=cfg.n_samples,
        burn_in=burn_in,
        thin=cfg.thin,
        step_width=cfg.step_width,
        max_stepout=cfg.max_stepout,
    )
    max_stepouts = None
    if reflect_block:
        # the reflected local-center block is periodic with period 2: one
        # expansion per side already brackets a full period, wider search is
        # redundant
        max_stepouts = np.full(sampler_dim(setup), cfg.max_stepout, dtype=int)
        period_cap = max(1, math.ceil((2.0 - cfg.step_width) / cfg.step_width))
        max_stepouts[2 * d :] = min(cfg.max_stepout, period_cap)
    vectors = slice_sample(target, start, chain_cfg, rng, max_stepouts=max_stepouts)
    if reflect_block:
        vectors[:, 2 * d :] = reflect_unit(vectors[:, 2 * d :])
    return [sample_from_vector(v, setup) for v in vectors]
