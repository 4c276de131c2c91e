"""Command-line harness: run experiments, emit plot-ready results.

``run`` executes seeded repeated runs for one objective and one or more
methods, writing one CSV per run plus an aggregate JSON; ``report`` turns a
result directory into per-objective convergence CSVs and a final-gap
summary table.  Flags can come from a ``key = value`` config file, with
explicit flags taking precedence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .benchmarks import get_objective
from .driver import MethodConfig, RunRecord, resolve_jobs, run_repeated, summarize
from .hyperlearn import MODES, McmcConfig

RUN_DEFAULTS = {
    "objective": None,  # required
    "method": "sbo",
    "budget": None,
    "init_count": None,
    "init_kind": "lhs",
    "repeats": 20,
    "seed": 0,
    "mcmc_samples": 10,
    "burn_in": 100,
    "thin": 10,
    "noise": None,
    "sigma2l_mode": "fixed",
    "sigma2l": 0.05,
    "k_loc": 8,
    "acq_budget": 2000,
    "out": "results",
    "jobs": None,
}

_INT_KEYS = {"budget", "init_count", "repeats", "seed", "mcmc_samples", "burn_in",
             "thin", "k_loc", "acq_budget", "jobs"}
_FLOAT_KEYS = {"noise", "sigma2l"}


class ConfigError(ValueError):
    pass


def read_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` config file (# starts a comment)."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in RUN_DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def merge_settings(cli_args: dict, file_values: dict) -> dict:
    settings = dict(RUN_DEFAULTS)
    for key, value in file_values.items():
        settings[key] = _coerce(key, value)
    for key, value in cli_args.items():
        if value is not None:
            settings[key] = value
    return settings


def _float_repr(v: float) -> str:
    return repr(float(v))


def write_run_csv(path: Path, record: RunRecord) -> None:
    header = ["iter"] + [f"x_{j + 1}" for j in range(record.dim)] + ["y", "best"]
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in record.rows:
            writer.writerow(
                [row.iteration]
                + [_float_repr(v) for v in row.x_native]
                + [_float_repr(row.y_raw), _float_repr(row.best_raw)]
            )


def cmd_run(settings: dict) -> int:
    if not settings.get("objective"):
        raise ConfigError("an objective name is required (--objective)")
    try:
        objective = get_objective(settings["objective"])
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    methods = [m.strip() for m in str(settings["method"]).split(",") if m.strip()]
    if not methods:
        raise ConfigError("no methods given")
    for m in methods:
        if m not in MODES:
            raise ConfigError(f"unknown method {m!r} (choose from {', '.join(MODES)})")
    repeats = int(settings["repeats"])
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")

    mcmc = McmcConfig(
        n_samples=int(settings["mcmc_samples"]),
        burn_in=int(settings["burn_in"]),
        thin=int(settings["thin"]),
    )
    out_root = Path(settings["out"]) / objective.name
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = resolve_jobs(settings["jobs"])

    aggregate = {
        "objective": objective.name,
        "dimension": objective.dim,
        "known_optimum": objective.known_optimum,
        "config": {k: settings[k] for k in RUN_DEFAULTS},
        "seeds": [int(settings["seed"]) + r for r in range(repeats)],
        "jobs": jobs,
        "methods": {},
    }
    t0 = time.perf_counter()
    for method in methods:
        cfg = MethodConfig(
            method=method,
            budget=settings["budget"],
            init_count=settings["init_count"],
            init_kind=settings["init_kind"],
            mcmc=mcmc,
            noise=settings["noise"],
            sigma2_l_mode=settings["sigma2l_mode"],
            sigma2_l=float(settings["sigma2l"]),
            k_loc=int(settings["k_loc"]),
            seed=int(settings["seed"]),
            acq_budget_per_dim=int(settings["acq_budget"]),
        )
        batch = run_repeated(objective, cfg, repeats=repeats, n_jobs=jobs)
        method_dir = out_root / method
        method_dir.mkdir(parents=True, exist_ok=True)
        for r, record in enumerate(batch.records):
            write_run_csv(method_dir / f"run{r}.csv", record)
        agg = batch.aggregate
        aggregate["methods"][method] = {
            "mean": agg.mean.tolist(),
            "median": agg.median.tolist(),
            "ci95": agg.ci95.tolist(),
            "final_best": agg.final_best.tolist(),
            "total_wall_ms": batch.total_wall_ms,
        }
        print(f"{objective.name}/{method}: {repeats} runs, "
              f"median final best {np.median(agg.final_best):.6g}")
    aggregate["wall_ms"] = (time.perf_counter() - t0) * 1e3
    with (out_root / "aggregate.json").open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(aggregate, fh, indent=2)
        fh.write("\n")
    return 0


# ---------------------------------------------------------------------------
# report


def _read_best_column(path: Path) -> np.ndarray:
    with path.open(encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        try:
            idx = header.index("best")
        except ValueError as exc:
            raise ConfigError(f"{path}: no 'best' column") from exc
        return np.array([float(row[idx]) for row in reader])


def collect_runs(objective_dir: Path) -> dict[str, np.ndarray]:
    """Per-method matrix of best-so-far traces found under an objective dir."""
    methods = {}
    for method_dir in sorted(p for p in objective_dir.iterdir() if p.is_dir()):
        runs = sorted(method_dir.glob("run*.csv"))
        if not runs:
            continue
        traces = [_read_best_column(p) for p in runs]
        lengths = {t.shape[0] for t in traces}
        if len(lengths) != 1:
            raise ConfigError(f"{method_dir}: runs have differing lengths {sorted(lengths)}")
        methods[method_dir.name] = np.vstack(traces)
    if not methods:
        raise ConfigError(f"{objective_dir}: no run CSVs found")
    return methods


def cmd_report(result_dir: str) -> int:
    root = Path(result_dir)
    if not root.is_dir():
        raise ConfigError(f"{result_dir} is not a directory")
    objective_dirs = [p for p in sorted(root.iterdir()) if p.is_dir()]
    if not objective_dirs:
        raise ConfigError(f"{result_dir}: no objective subdirectories")

    summary_rows = []
    for obj_dir in objective_dirs:
        methods = collect_runs(obj_dir)
        n_iter = next(iter(methods.values())).shape[1]
        header = ["iter"]
        columns = [np.arange(1, n_iter + 1)]
        for method, matrix in methods.items():
            mean, _, hw = summarize(matrix)
            header += [f"{method}_mean", f"{method}_ci_lo", f"{method}_ci_hi"]
            columns += [mean, mean - hw, mean + hw]
            try:
                optimum = get_objective(obj_dir.name).known_optimum
            except KeyError:
                optimum = None
            finals = matrix[:, -1]
            median_final = float(np.median(finals))
            gap = median_final - optimum if optimum is not None else None
            summary_rows.append((obj_dir.name, method, matrix.shape[0], median_final, gap))
        out_path = obj_dir / "convergence.csv"
        with out_path.open("w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(n_iter):
                writer.writerow(
                    [int(columns[0][i])] + [_float_repr(col[i]) for col in columns[1:]]
                )
        print(f"wrote {out_path}")

    print(f"\n{'objective':<22}{'method':<8}{'runs':>5}{'median final':>16}{'median gap':>14}")
    for name, method, n_runs, median_final, gap in summary_rows:
        gap_text = f"{gap:>14.6g}" if gap is not None else f"{'-':>14}"
        print(f"{name:<22}{method:<8}{n_runs:>5}{median_final:>16.6g}{gap_text}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spartanopt",
        description="Bayesian optimization benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute seeded repeated optimization runs")
    p_run.add_argument("--config", help="key = value config file")
    p_run.add_argument("--objective", help="objective registry name")
    p_run.add_argument("--method", help="comma-separated methods: bo,sbo,warp")
    p_run.add_argument("--budget", type=int, help="total evaluations per run")
    p_run.add_argument("--init-count", type=int, dest="init_count")
    p_run.add_argument("--init-kind", choices=("lhs", "sobol"), dest="init_kind")
    p_run.add_argument("--repeats", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--mcmc-samples", type=int, dest="mcmc_samples")
    p_run.add_argument("--burn-in", type=int, dest="burn_in")
    p_run.add_argument("--thin", type=int)
    p_run.add_argument("--noise", type=float)
    p_run.add_argument("--sigma2l-mode", choices=("fixed", "adaptive"), dest="sigma2l_mode")
    p_run.add_argument("--sigma2l", type=float)
    p_run.add_argument("--k-loc", type=int, dest="k_loc")
    p_run.add_argument("--acq-budget", type=int, dest="acq_budget",
                       help="acquisition evaluations per input dimension")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")

    p_report = sub.add_parser("report", help="summarize a result directory")
    p_report.add_argument("result_dir")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cli_values = {k: getattr(args, k) for k in RUN_DEFAULTS if hasattr(args, k)}
            file_values = read_config_file(args.config) if args.config else {}
            settings = merge_settings(cli_values, file_values)
            return cmd_run(settings)
        return cmd_report(args.result_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # objective/run failure
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
