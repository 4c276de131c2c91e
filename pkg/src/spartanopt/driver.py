"""The Bayesian optimization loop and seeded repeated-run harness.

One run: evaluate an initial design, then repeatedly refit the surrogate
mixture from fresh MCMC hyperparameter samples, maximize expected
improvement, and evaluate the objective at the winner until the budget is
spent.  Repetitions use consecutive seeds with common random numbers: the
initial design and the objective noise stream for a given repetition index
are shared by every method.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import t as student_t

from .acquisition import Incumbent, max_variance_point, maximize_acquisition
from .benchmarks import Objective
from .design import lhs, sobol
from .hyperlearn import (
    SBO,
    DegeneratePosteriorError,
    McmcConfig,
    ModelSetup,
    fit_sample,
    posterior_samples,
)
from .surrogate import ObservationSet

THREADS_ENV = "SPARTAN_OPT_THREADS"

DEFAULT_BUDGETS = {
    "gramacy": 60,
    "branin": 40,
    "hartmann6": 70,
    "michalewicz": 210,
    "mountain-car": 40,
}

DEFAULT_NOISE_DETERMINISTIC = 1e-6
DEFAULT_NOISE_STOCHASTIC = 1e-2


class RunAbortedError(RuntimeError):
    """Optimization could not continue (degenerate posterior twice in a row)."""


@dataclass(frozen=True)
class MethodConfig:
    """Everything one optimization run needs besides the objective."""

    method: str = "sbo"  # bo | sbo | warp
    budget: int | None = None
    init_count: int | None = None
    init_kind: str = "lhs"  # lhs | sobol
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    noise: float | None = None
    sigma2_l_mode: str = "fixed"  # fixed | adaptive
    sigma2_l: float = 0.05
    k_loc: int = 8
    seed: int = 0
    acq_budget_per_dim: int = 2000
    pin_local: bool = False


def default_budget(objective_name: str) -> int:
    stem = objective_name.split("-d")[0]
    return DEFAULT_BUDGETS.get(objective_name, DEFAULT_BUDGETS.get(stem, 50))


def default_init_count(dim: int) -> int:
    return 10 if dim <= 8 else 2 * dim


def resolve_config(objective: Objective, cfg: MethodConfig):
    """Concrete (budget, init count, noise, surrogate setup) for a run."""
    budget = cfg.budget if cfg.budget is not None else default_budget(objective.name)
    p = cfg.init_count if cfg.init_count is not None else default_init_count(objective.dim)
    if p < 1 or budget < p:
        raise ValueError(f"need budget >= init count >= 1, got N={budget}, p={p}")
    if cfg.init_kind not in ("lhs", "sobol"):
        raise ValueError(f"unknown init kind {cfg.init_kind!r}")
    if cfg.sigma2_l_mode not in ("fixed", "adaptive"):
        raise ValueError(f"unknown sigma2_l mode {cfg.sigma2_l_mode!r}")
    noise = cfg.noise
    if noise is None:
        noise = DEFAULT_NOISE_STOCHASTIC if objective.stochastic else DEFAULT_NOISE_DETERMINISTIC
    setup = ModelSetup(
        mode=cfg.method,
        dim=objective.dim,
        noise=noise,
        sigma2_l=cfg.sigma2_l,
        adaptive_k=cfg.k_loc if cfg.sigma2_l_mode == "adaptive" else None,
        pin_local=cfg.pin_local,
    )
    return budget, p, noise, setup


@dataclass(frozen=True)
class IterationRow:
    iteration: int  # 1-based evaluation index
    x_native: np.ndarray
    y_raw: float
    best_raw: float
    wall_ms: float


@dataclass
class RunRecord:
    objective: str
    method: str
    seed: int
    dim: int
    rows: list[IterationRow]
    theta_p_trace: list[np.ndarray]  # mean local center per BO iteration (sbo)
    x_best_native: np.ndarray
    y_best_raw: float
    total_wall_ms: float

    def best_so_far(self) -> np.ndarray:
        return np.array([row.best_raw for row in self.rows])

    def best_at(self, evaluations: int) -> float:
        return float(self.rows[evaluations - 1].best_raw)


def _noise_rng(seed: int, eval_index: int):
    # per-evaluation stream: repetition r of every method sees the same
    # draws at the same evaluation index (common random numbers)
    return np.random.default_rng(np.random.SeedSequence((seed, 3, eval_index)))


def run(objective: Objective, cfg: MethodConfig) -> RunRecord:
    """One seeded optimization run; deterministic for deterministic objectives."""
    budget, p, noise, setup = resolve_config(objective, cfg)
    d = objective.dim
    design_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    mcmc_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1)))
    acq_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 2)))

    t_run = time.perf_counter()
    X01 = list(sobol(p, d) if cfg.init_kind == "sobol" else lhs(p, d, design_rng))

    rows: list[IterationRow] = []
    y_raw: list[float] = []
    best = np.inf

    def record(x01, t0):
        nonlocal best
        x_native = objective.to_native(x01)
        y = objective.evaluate(x_native, rng=_noise_rng(cfg.seed, len(y_raw)))
        y_raw.append(y)
        best = min(best, y)
        rows.append(
            IterationRow(
                iteration=len(y_raw),
                x_native=x_native,
                y_raw=y,
                best_raw=best,
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )

    for x01 in X01:
        record(x01, time.perf_counter())

    theta_trace: list[np.ndarray] = []
    warm = None
    while len(y_raw) < budget:
        t0 = time.perf_counter()
        obs = ObservationSet.from_data(np.asarray(X01), np.asarray(y_raw))
        try:
            samples = posterior_samples(obs, setup, cfg.mcmc, mcmc_rng, warm_start=warm)
        except DegeneratePosteriorError:
            try:
                samples = posterior_samples(obs, setup, cfg.mcmc, mcmc_rng, warm_start=None)
            except DegeneratePosteriorError as exc:
                raise RunAbortedError(
                    f"{objective.name}/{cfg.method} seed {cfg.seed}: degenerate "
                    f"posterior at evaluation {len(y_raw)}"
                ) from exc
        warm = samples[-1].to_vector(setup)
        posteriors = [fit_sample(s, obs, setup) for s in samples]
        inc = Incumbent.from_observations(obs)

        seed_centers = ()
        if setup.mode == SBO and not setup.pin_local:
            seed_centers = tuple(s.theta_p for s in samples)
            theta_trace.append(np.mean([s.theta_p for s in samples], axis=0))

        result = maximize_acquisition(
            posteriors, inc, budget=cfg.acq_budget_per_dim * d, rng=acq_rng,
            candidates=seed_centers,
        )
        x_next = result.x_next
        if result.ei_value <= 0.0:
            x_next = max_variance_point(posteriors, n_scan=cfg.acq_budget_per_dim * d, rng=acq_rng)
        X01.append(x_next)
        record(x_next, t0)

    i_best = int(np.argmin(y_raw))
    return RunRecord(
        objective=objective.name,
        method=cfg.method,
        seed=cfg.seed,
        dim=d,
        rows=rows,
        theta_p_trace=theta_trace,
        x_best_native=rows[i_best].x_native,
        y_best_raw=float(y_raw[i_best]),
        total_wall_ms=(time.perf_counter() - t_run) * 1e3,
    )


# ---------------------------------------------------------------------------
# repeated runs


@dataclass
class Aggregate:
    iterations: np.ndarray
    mean: np.ndarray
    median: np.ndarray
    ci95: np.ndarray  # half-widths
    final_best: np.ndarray


@dataclass
class RunBatch:
    records: list[RunRecord]
    aggregate: Aggregate

    @property
    def total_wall_ms(self) -> float:
        return float(sum(r.total_wall_ms for r in self.records))


def summarize(best_matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-iteration mean, median and 95% Student-t CI half-width.

    ``best_matrix`` has one row per run, one column per evaluation.
    """
    n = best_matrix.shape[0]
    mean = best_matrix.mean(axis=0)
    median = np.median(best_matrix, axis=0)
    if n < 2:
        hw = np.zeros(best_matrix.shape[1])
    else:
        crit = float(student_t.ppf(0.975, n - 1))
        hw = crit * best_matrix.std(axis=0, ddof=1) / np.sqrt(n)
    return mean, median, hw


def resolve_jobs(n_jobs: int | None = None) -> int:
    if n_jobs is not None:
        return max(1, int(n_jobs))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_repeated(
    objective: Objective,
    cfg: MethodConfig,
    repeats: int,
    n_jobs: int | None = None,
) -> RunBatch:
    """Run with seeds cfg.seed .. cfg.seed + repeats - 1 and aggregate."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    configs = [replace(cfg, seed=cfg.seed + r) for r in range(repeats)]
    jobs = resolve_jobs(n_jobs)
    if jobs == 1 or repeats == 1:
        records = [run(objective, c) for c in configs]
    else:
        records = Parallel(n_jobs=jobs)(delayed(run)(objective, c) for c in configs)
    best = np.vstack([rec.best_so_far() for rec in records])
    mean, median, hw = summarize(best)
    agg = Aggregate(
        iterations=np.arange(1, best.shape[1] + 1),
        mean=mean,
        median=median,
        ci95=hw,
        final_best=best[:, -1].copy(),
    )
    return RunBatch(records=records, aggregate=agg)
