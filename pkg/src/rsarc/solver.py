"""Outer loop: cubic regularization over adaptively sized random subspaces.

Modes:
  * ``arc``     -- identity sketch with l = d (classical adaptive cubic
                   regularization; fully deterministic).
  * ``rarc``    -- fixed sketch size l0, scaled-Gaussian sketches.
  * ``rarc-d``  -- sketch size grown by the rank-driven rule
                   l_{k+1} = max(C * Rhat_k + 1, l_k) whenever the running
                   maximum Rhat of observed sketched-Hessian ranks
                   increases, capped at d.

Each iteration draws (or reuses) a sketch S_k, forms the projected
derivatives S g and S H S^T, minimizes the sketched cubic model exactly,
and accepts the trial step when the achieved-over-predicted decrease
ratio rho exceeds theta.  Per-iteration cost is charged as (l_k/d)^2
"relative Hessians seen", the budget metric used by the benchmark layer.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from . import sketch as sk
from . import subproblem as sp
from .errors import ConfigError, InnerSolverError, InvalidDimensionError, SingularGramError
from .problems import ObjectiveProblem

MODE_ARC = "arc"
MODE_RARC = "rarc"
MODE_RARC_D = "rarc-d"
MODES = (MODE_ARC, MODE_RARC, MODE_RARC_D)

REDRAW_ON_SUCCESS = "on-success"
REDRAW_EVERY_ITERATION = "every-iteration"
REDRAW_POLICIES = (REDRAW_ON_SUCCESS, REDRAW_EVERY_ITERATION)

STATUS_GRADIENT_TOL = "GradientTolReached"
STATUS_MAX_ITER = "MaxIter"
STATUS_INNER_FAILURE = "InnerFailure"

#: consecutive Gram-factorization failures tolerated before giving up
_MAX_GRAM_REDRAWS = 10

TRACE_COLUMNS = (
    "k",
    "f",
    "grad_norm",
    "l_k",
    "r_hat_k",
    "R_hat_k",
    "sigma_k",
    "rho_k",
    "success",
    "cum_rel_hessians",
    "wall_time_s",
)


@dataclass
class SolverConfig:
    """Parameters of the outer loop; defaults follow common practice.

    theta, kappa_t, kappa_s are the acceptance constants; sigma is
    decreased by gamma_dec on success (floored at sigma_min) and grown by
    gamma_inc on failure.  l0 is the initial (or, for ``rarc``, fixed)
    sketch size and C the growth constant of the adaptive rule.
    """

    mode: str = MODE_RARC_D
    theta: float = 0.01
    sigma0: float = 1.0
    sigma_min: float = 1e-16
    gamma_inc: float = 2.0
    gamma_dec: float = 0.5
    epsilon: float = 1e-5
    max_iter: int = 2000
    l0: int = 2
    growth_c: int = 1
    kappa_t: float = 0.1
    kappa_s: float = 0.1
    rank_tol: float = 1e-10
    redraw_policy: str = REDRAW_ON_SUCCESS
    distribution: Optional[str] = None  # None = inferred from mode
    seed: int = 0
    inner_tol: float = 1e-10
    max_inner: int = 200

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"need theta in (0,1), got {self.theta}")
        if self.sigma0 <= 0.0 or self.sigma_min <= 0.0 or self.sigma0 < self.sigma_min:
            raise ConfigError(
                f"need sigma0 >= sigma_min > 0, got sigma0={self.sigma0}, "
                f"sigma_min={self.sigma_min}"
            )
        if self.gamma_inc <= 1.0:
            raise ConfigError(f"need gamma_inc > 1, got {self.gamma_inc}")
        if not 0.0 < self.gamma_dec < 1.0:
            raise ConfigError(f"need gamma_dec in (0,1), got {self.gamma_dec}")
        if self.epsilon <= 0.0:
            raise ConfigError(f"need epsilon > 0, got {self.epsilon}")
        if self.max_iter < 0:
            raise ConfigError(f"need max_iter >= 0, got {self.max_iter}")
        if self.l0 < 1:
            raise ConfigError(f"need l0 >= 1, got {self.l0}")
        if self.growth_c < 1:
            raise ConfigError(f"need C >= 1, got {self.growth_c}")
        if self.kappa_t < 0.0 or self.kappa_s < 0.0:
            raise ConfigError("need kappa_t, kappa_s >= 0")
        if self.rank_tol <= 0.0:
            raise ConfigError(f"need rank_tol > 0, got {self.rank_tol}")
        if self.redraw_policy not in REDRAW_POLICIES:
            raise ConfigError(f"unknown redraw policy {self.redraw_policy!r}")
        if self.distribution is not None and self.distribution not in sk.DISTRIBUTIONS:
            raise ConfigError(f"unknown distribution {self.distribution!r}")

    def solver_id(self) -> str:
        if self.mode == MODE_ARC:
            return "arc"
        if self.mode == MODE_RARC:
            return f"rarc-l{self.l0}"
        return f"rarc-d-l0{self.l0}"


@dataclass
class IterationTrace:
    k: int
    f: float
    grad_norm: float
    l_k: int
    r_hat_k: int
    big_r_hat_k: int
    sigma_k: float
    rho_k: float  # NaN when the model decrease fell below the guard
    success: bool
    cum_rel_hessians: float
    wall_time_s: float  # cumulative solver-loop CPU seconds


@dataclass
class SolveResult:
    x_final: np.ndarray
    f_final: float
    grad_norm_final: float
    status: str
    trace: List[IterationTrace] = field(default_factory=list)


def update_sketch_size(l_k: int, r_hat_k: int, r_hat_prev: int, c: int, d: int) -> int:
    """Sketch-size growth rule: grow to C*Rhat+1 when Rhat increased.

    Never shrinks, and never exceeds the ambient dimension d.
    """
    if r_hat_k > r_hat_prev:
        return min(max(c * r_hat_k + 1, l_k), d)
    return l_k


def decrease_ratio(f_x: float, f_trial: float, q_decrease: float, guard: float) -> float:
    """Achieved-over-predicted decrease; NaN when the predicted decrease
    is below the guard (the iteration is then unsuccessful without dividing)."""
    if q_decrease > guard:
        return (f_x - f_trial) / q_decrease
    return math.nan


def _initial_sketch_size(problem: ObjectiveProblem, config: SolverConfig) -> int:
    if config.mode == MODE_ARC:
        return problem.dim
    return config.l0


def _distribution(config: SolverConfig) -> str:
    if config.distribution is not None:
        return config.distribution
    return sk.IDENTITY if config.mode == MODE_ARC else sk.SCALED_GAUSSIAN


def run(problem: ObjectiveProblem, config: SolverConfig) -> SolveResult:
    """Minimize ``problem`` until ||grad f|| <= epsilon or max_iter iterations.

    The trace records one row per iteration (f, gradient norm, sketch
    size, observed rank and its running maximum, sigma, rho, success flag,
    and the cumulative budget counters).
    """
    config.validate()
    d = problem.dim
    if config.mode != MODE_ARC and config.l0 > d:
        raise InvalidDimensionError(f"l0={config.l0} exceeds problem dimension {d}")
    distribution = _distribution(config)
    if distribution == sk.IDENTITY and _initial_sketch_size(problem, config) != d:
        raise ConfigError("identity sketches require l = d")

    rng = np.random.default_rng(config.seed)
    x = np.array(problem.x0, dtype=float, copy=True)
    sigma = config.sigma0
    l = _initial_sketch_size(problem, config)
    r_hat_running = 0
    s_mat: Optional[sk.SketchMatrix] = None
    need_draw = True
    trace: List[IterationTrace] = []
    cum_rel = 0.0
    cum_time = 0.0
    status = STATUS_MAX_ITER
    f = problem.value(x)
    grad = problem.gradient(x)

    for k in range(config.max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= config.epsilon:
            status = STATUS_GRADIENT_TOL
            break
        if k == config.max_iter:
            status = STATUS_MAX_ITER
            break

        t0 = time.process_time()
        hess = problem.hessian(x)

        solution = None
        for attempt in range(_MAX_GRAM_REDRAWS + 1):
            if need_draw or s_mat is None:
                s_mat = sk.draw(distribution, l, d, rng)
                need_draw = config.redraw_policy == REDRAW_EVERY_ITERATION
            g_hat = sk.sketch_gradient(s_mat, grad)
            h_hat = sk.sketch_hessian(s_mat, hess)
            try:
                model = sp.build_model(f, g_hat, h_hat, sigma, s_mat.gram())
                solution = sp.solve(
                    model,
                    inner_tol=config.inner_tol,
                    max_inner=config.max_inner,
                    kappa_t=config.kappa_t,
                    kappa_s=config.kappa_s,
                )
                break
            except (SingularGramError, InnerSolverError):
                s_mat = None
                need_draw = True
                if distribution == sk.IDENTITY or attempt == _MAX_GRAM_REDRAWS:
                    solution = None
                    break
        if solution is None:
            status = STATUS_INNER_FAILURE
            cum_time += time.process_time() - t0
            break

        r_hat = sk.numerical_rank(h_hat, config.rank_tol).numerical_rank
        r_hat_prev = r_hat_running
        r_hat_running = max(r_hat_running, r_hat)

        step = s_mat.matrix.T @ solution.s_hat
        q_dec = sp.quadratic_decrease(model, solution.s_hat)
        f_trial = problem.value(x + step)
        guard = 1e-16 * (1.0 + abs(f))
        rho = decrease_ratio(f, f_trial, q_dec, guard)
        success = bool(rho >= config.theta) if not math.isnan(rho) else False

        f_at_k = f  # value at the iterate this row describes
        sigma_used = sigma
        if success:
            x = x + step
            f = f_trial
            grad = problem.gradient(x)
            sigma = max(config.gamma_dec * sigma, config.sigma_min)
            if config.redraw_policy == REDRAW_ON_SUCCESS:
                need_draw = True
        else:
            sigma = config.gamma_inc * sigma

        cum_rel += (l / d) ** 2
        cum_time += time.process_time() - t0
        trace.append(
            IterationTrace(
                k=k,
                f=f_at_k,
                grad_norm=gnorm,
                l_k=l,
                r_hat_k=r_hat,
                big_r_hat_k=r_hat_running,
                sigma_k=sigma_used,
                rho_k=rho,
                success=success,
                cum_rel_hessians=cum_rel,
                wall_time_s=cum_time,
            )
        )

        if config.mode == MODE_RARC_D:
            l_next = update_sketch_size(l, r_hat_running, r_hat_prev, config.growth_c, d)
            if problem.known_rank is not None:
                assert l_next <= max(config.growth_c * problem.known_rank + 1, config.l0)
            if l_next != l:
                l = l_next
                need_draw = True

    return SolveResult(
        x_final=x,
        f_final=float(problem.value(x)),
        grad_norm_final=float(np.linalg.norm(problem.gradient(x))),
        status=status,
        trace=trace,
    )


def trace_to_csv(trace: List[IterationTrace], path) -> None:
    """Write one CSV row per iteration with round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace:
            writer.writerow(
                [
                    row.k,
                    repr(row.f),
                    repr(row.grad_norm),
                    row.l_k,
                    row.r_hat_k,
                    row.big_r_hat_k,
                    repr(row.sigma_k),
                    repr(row.rho_k),
                    row.success,
                    repr(row.cum_rel_hessians),
                    repr(row.wall_time_s),
                ]
            )


def trace_from_csv(path) -> List[IterationTrace]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                IterationTrace(
                    k=int(rec["k"]),
                    f=float(rec["f"]),
                    grad_norm=float(rec["grad_norm"]),
                    l_k=int(rec["l_k"]),
                    r_hat_k=int(rec["r_hat_k"]),
                    big_r_hat_k=int(rec["R_hat_k"]),
                    sigma_k=float(rec["sigma_k"]),
                    rho_k=float(rec["rho_k"]),
                    success=rec["success"] == "True",
                    cum_rel_hessians=float(rec["cum_rel_hessians"]),
                    wall_time_s=float(rec["wall_time_s"]),
                )
            )
    return rows


def summary_dict(problem: ObjectiveProblem, config: SolverConfig, result: SolveResult) -> dict:
    """JSON-serializable run summary: config echo, status, final values."""
    return {
        "problem": problem.name,
        "dim": problem.dim,
        "solver_id": config.solver_id(),
        "config": asdict(config),
        "status": result.status,
        "iterations": len(result.trace),
        "f_final": result.f_final,
        "grad_norm_final": result.grad_norm_final,
        "cum_rel_hessians": result.trace[-1].cum_rel_hessians if result.trace else 0.0,
    }


def write_summary(problem, config, result, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(problem, config, result), fh, indent=2)
        fh.write("\n")
