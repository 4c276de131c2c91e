"""Bayesian optimization with a two-region adaptive kernel.

The surrogate is a Gaussian process whose covariance blends a global and a
local Matern 5/2 kernel through normalized Gaussian region weights; the
center of the local region is learned from data by slice-sampling MCMC
alongside the length-scales.  A stationary-kernel baseline and an
input-warping baseline share the same decision loop (expected improvement
over the sampled hyperparameter mixture), and a small harness runs seeded,
repeated benchmark experiments.
"""

from .kernels import (
    KernelSpec,
    LengthScales,
    SpartanWeightConfig,
    gram_matrix,
    matern52,
    spartan_kernel,
    spartan_weights,
    squared_exponential,
)
from .surrogate import ObservationSet, PosteriorSnapshot, Prediction, fit, log_marginal_likelihood, predict
from .hyperlearn import HyperSample, McmcConfig, log_posterior, posterior_samples, slice_sample
from .acquisition import AcquisitionResult, Incumbent, expected_improvement, maximize_acquisition
from .design import lhs, sobol
from .warp import WarpParams, beta_cdf, warp_point, warped_kernel
from .benchmarks import Objective, get_objective
from .driver import MethodConfig, RunRecord, run, run_repeated

__all__ = [
    "KernelSpec",
    "LengthScales",
    "SpartanWeightConfig",
    "gram_matrix",
    "matern52",
    "spartan_kernel",
    "spartan_weights",
    "squared_exponential",
    "ObservationSet",
    "PosteriorSnapshot",
    "Prediction",
    "fit",
    "predict",
    "log_marginal_likelihood",
    "HyperSample",
    "McmcConfig",
    "log_posterior",
    "posterior_samples",
    "slice_sample",
    "Incumbent",
    "AcquisitionResult",
    "expected_improvement",
    "maximize_acquisition",
    "lhs",
    "sobol",
    "WarpParams",
    "beta_cdf",
    "warp_point",
    "warped_kernel",
    "Objective",
    "get_objective",
    "MethodConfig",
    "RunRecord",
    "run",
    "run_repeated",
]

__version__ = "0.1.0"
