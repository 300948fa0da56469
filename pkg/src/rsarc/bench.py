"""Benchmark grids and data profiles over the "relative Hessians seen" budget.

A problem instance counts as solved at tolerance tau once
f(x_k) <= f* + tau (f(x0) - f*); the budget charged is the cumulative
metric (relative Hessians, or solver CPU seconds) at the first iterate
meeting that bar, and infinity when the bar is never met within the
2000-iteration cap.  Data profiles report the fraction of instances
solved as a function of the budget.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidProblemError
from .problems import get_problem
from .solver import IterationTrace, SolverConfig, run, trace_to_csv

METRIC_REL_HESSIANS = "rel-hessians"
METRIC_RUNTIME = "runtime"
METRICS = (METRIC_REL_HESSIANS, METRIC_RUNTIME)

#: iteration cap applied when deciding whether an instance was solved
ITERATION_CAP = 2000

#: default budget grid: alpha = 0 plus 400 log-spaced points up to 100
DEFAULT_ALPHA_GRID = np.concatenate(([0.0], np.logspace(-3, 2, 400)))


@dataclass
class BenchmarkRun:
    """Outcome of one (problem instance, solver) pair."""

    problem_id: str
    solver_id: str
    repeat: int
    seed: int  # solver seed; the instance seed is part of problem_id
    n_p: Dict[float, float]  # tolerance -> budget at solve (inf if unsolved)
    status: str
    trace_path: Optional[str] = None


@dataclass
class DataProfile:
    solver_id: str
    tau: float
    alpha_grid: np.ndarray
    pi: np.ndarray


def solved_budget(
    trace: Sequence[IterationTrace],
    f0: float,
    f_star: float,
    tau: float,
    metric: str = METRIC_REL_HESSIANS,
    final_f: Optional[float] = None,
) -> float:
    """Budget spent until the solve bar is first met, or inf.

    Scans the per-iteration trace (capped at 2000 rows); if no recorded
    iterate meets the bar but the run's final point does (``final_f``),
    the full spent budget is charged, since the final point is reached by
    the last recorded iteration.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidProblemError(f"need tau in (0,1), got {tau}")
    if f_star is None or not f0 > f_star:
        raise InvalidProblemError(f"need f0 > f_star, got f0={f0}, f_star={f_star}")
    if metric not in METRICS:
        raise InvalidProblemError(f"unknown metric {metric!r}")
    bar = f_star + tau * (f0 - f_star)
    rows = list(trace)[:ITERATION_CAP]
    for row in rows:
        if row.f <= bar:
            return row.cum_rel_hessians if metric == METRIC_REL_HESSIANS else row.wall_time_s
    if final_f is not None and final_f <= bar and len(trace) <= ITERATION_CAP:
        if not rows:
            return 0.0
        last = rows[-1]
        return last.cum_rel_hessians if metric == METRIC_REL_HESSIANS else last.wall_time_s
    return math.inf


def data_profile(
    runs: Sequence[BenchmarkRun],
    tau: float,
    alpha_grid: Optional[np.ndarray] = None,
    solver_id: Optional[str] = None,
) -> DataProfile:
    """Fraction of runs solved within budget alpha, per grid point.

    Each run counts as one problem instance; unsolved runs stay in the
    denominator.  When ``solver_id`` is None the runs must all share one.
    """
    runs = list(runs)
    if not runs:
        raise InvalidInputError("no benchmark runs given")
    ids = {r.solver_id for r in runs}
    if solver_id is None:
        if len(ids) != 1:
            raise InvalidInputError(f"runs mix solvers {sorted(ids)}; pass solver_id")
        solver_id = next(iter(ids))
    else:
        runs = [r for r in runs if r.solver_id == solver_id]
        if not runs:
            raise InvalidInputError(f"no runs for solver {solver_id!r}")
    grid = DEFAULT_ALPHA_GRID if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    budgets = np.array([r.n_p[tau] for r in runs])
    pi = np.array([np.mean(budgets <= a) for a in grid])
    return DataProfile(solver_id, tau, grid, pi)


def _run_one(job: dict) -> dict:
    """Worker: build the problem from its selector, run, score all taus.

    Any per-run failure (unknown optimum, solver error) is recorded as an
    unsolved run instead of propagating, so a grid never aborts.
    """
    config = SolverConfig(**job["config"])
    trace_path = job.get("trace_path")
    budgets = {tau: {m: math.inf for m in METRICS} for tau in job["taus"]}
    try:
        problem = get_problem(job["problem_id"])
        result = run(problem, config)
        f0 = problem.value(problem.x0)
        for tau in job["taus"]:
            for metric in METRICS:
                budgets[tau][metric] = solved_budget(
                    result.trace, f0, problem.f_star, tau, metric, final_f=result.f_final
                )
        status = result.status
        if trace_path:
            trace_to_csv(result.trace, trace_path)
    except Exception as exc:  # noqa: BLE001 - isolate per-run failures
        status = f"Error:{type(exc).__name__}"
        trace_path = None
    return {
        "problem_id": job["problem_id"],
        "solver_id": config.solver_id(),
        "repeat": job["repeat"],
        "seed": config.seed,
        "budgets": budgets,
        "status": status,
        "trace_path": trace_path,
    }


def _instance_selector(selector: str, instance_seed: int) -> str:
    """Inject the per-repeat augmentation seed into a low-rank selector."""
    if selector.startswith("l-") and "seed=" not in selector:
        return f"{selector}:seed={instance_seed}"
    return selector


def solver_seed(seed_base: int, run_index: int) -> int:
    """Deterministic per-run solver seed derived from the grid seed."""
    ss = np.random.SeedSequence([seed_base, run_index])
    return int(ss.generate_state(1)[0])


def run_grid(
    problems: Sequence[str],
    solver_configs: Sequence[SolverConfig],
    repeats: int,
    seed_base: int,
    taus: Sequence[float] = (1e-2, 1e-5),
    metric: str = METRIC_REL_HESSIANS,
    out_dir: Optional[str] = None,
    workers: int = 1,
) -> List[BenchmarkRun]:
    """Run every (problem, solver, repeat) combination, reproducibly.

    ``problems`` are registry selectors without an instance seed; each
    repeat augments low-rank problems with a fresh embedding seeded by
    seed_base + repeat, and gets its own solver seed.  Failed runs are
    recorded as unsolved rather than aborting the grid.
    """
    if repeats < 1:
        raise InvalidInputError(f"need repeats >= 1, got {repeats}")
    if not problems or not solver_configs:
        raise InvalidInputError("need at least one problem and one solver config")
    for config in solver_configs:
        config.validate()

    jobs = []
    index = 0
    for selector in problems:
        for config in solver_configs:
            for rep in range(repeats):
                instance = _instance_selector(selector, seed_base + rep)
                cfg = replace(config, seed=solver_seed(seed_base, index))
                trace_path = None
                if out_dir is not None:
                    fname = "trace_{}_{}_rep{}.csv".format(
                        _sanitize(instance), _sanitize(cfg.solver_id()), rep
                    )
                    trace_path = os.path.join(out_dir, fname)
                jobs.append(
                    {
                        "problem_id": instance,
                        "config": vars(cfg).copy(),
                        "repeat": rep,
                        "taus": list(taus),
                        "trace_path": trace_path,
                        "index": index,
                    }
                )
                index += 1

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_one, jobs))
    else:
        raw = [_run_one(job) for job in jobs]

    runs = []
    for rec in raw:
        n_p = {tau: rec["budgets"][tau][metric] for tau in rec["budgets"]}
        runs.append(
            BenchmarkRun(
                problem_id=rec["problem_id"],
                solver_id=rec["solver_id"],
                repeat=rec["repeat"],
                seed=rec["seed"],
                n_p=n_p,
                status=rec["status"],
                trace_path=rec["trace_path"],
            )
        )
    return runs


def _sanitize(name: str) -> str:
    return name.replace(":", "_").replace("=", "")


def write_runs_csv(runs: Sequence[BenchmarkRun], path) -> None:
    """One row per (run, tolerance): problem, solver, repeat, seed, tau, N_p."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["problem_id", "solver_id", "repeat", "seed", "tau", "N_p", "status"])
        for r in runs:
            for tau in sorted(r.n_p, reverse=True):
                writer.writerow(
                    [r.problem_id, r.solver_id, r.repeat, r.seed, repr(tau), repr(r.n_p[tau]), r.status]
                )


def read_runs_csv(path) -> List[BenchmarkRun]:
    by_key: Dict[tuple, BenchmarkRun] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["problem_id"], rec["solver_id"], int(rec["repeat"]))
            run_rec = by_key.get(key)
            if run_rec is None:
                run_rec = BenchmarkRun(
                    problem_id=rec["problem_id"],
                    solver_id=rec["solver_id"],
                    repeat=int(rec["repeat"]),
                    seed=int(rec["seed"]),
                    n_p={},
                    status=rec["status"],
                )
                by_key[key] = run_rec
            run_rec.n_p[float(rec["tau"])] = float(rec["N_p"])
    return list(by_key.values())


def write_profile_csv(profile: DataProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "pi"])
        for a, p in zip(profile.alpha_grid, profile.pi):
            writer.writerow([repr(float(a)), repr(float(p))])
