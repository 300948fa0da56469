"""Command-line interface: single solves, benchmark grids, profiles, embedding checks.

Exit codes for ``solve``: 0 when the gradient tolerance was reached,
2 on the iteration cap, 3 on inner-solver failure, 1 on usage errors.
The other subcommands exit 0 on completion and 1 on malformed input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields, replace
from typing import List, Optional

import numpy as np

from . import bench as bn
from . import sketch as sk
from .errors import RsarcError
from .problems import get_problem
from .solver import (
    MODE_ARC,
    MODE_RARC,
    MODE_RARC_D,
    STATUS_GRADIENT_TOL,
    STATUS_INNER_FAILURE,
    STATUS_MAX_ITER,
    SolverConfig,
    run,
    trace_to_csv,
    write_summary,
)

_MODE_FLAGS = {"arc": MODE_ARC, "rarc": MODE_RARC, "rarc-d": MODE_RARC_D}
_EXIT_BY_STATUS = {STATUS_GRADIENT_TOL: 0, STATUS_MAX_ITER: 2, STATUS_INNER_FAILURE: 3}

_INT_FIELDS = {"max_iter", "l0", "growth_c", "seed", "max_inner"}
_STR_FIELDS = {"mode", "redraw_policy", "distribution"}
_FIELD_ALIASES = {"C": "growth_c", "eps": "epsilon", "redraw": "redraw_policy"}


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _coerce(name: str, raw: str):
    if name in _STR_FIELDS:
        return raw
    if name in _INT_FIELDS:
        return int(raw)
    return float(raw)


def read_config_file(path: str) -> dict:
    """Flat key = value file mirroring SolverConfig field names."""
    known = {f.name for f in fields(SolverConfig)}
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise RsarcError(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            key = _FIELD_ALIASES.get(key, key)
            if key not in known:
                raise RsarcError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def _config_from_args(args) -> SolverConfig:
    config = SolverConfig()
    if getattr(args, "config", None):
        config = replace(config, **read_config_file(args.config))
    overrides = {}
    for flag, field_name in (
        ("mode", "mode"),
        ("theta", "theta"),
        ("sigma0", "sigma0"),
        ("sigma_min", "sigma_min"),
        ("gamma_inc", "gamma_inc"),
        ("gamma_dec", "gamma_dec"),
        ("eps", "epsilon"),
        ("max_iter", "max_iter"),
        ("l0", "l0"),
        ("C", "growth_c"),
        ("kappa_t", "kappa_t"),
        ("kappa_s", "kappa_s"),
        ("rank_tol", "rank_tol"),
        ("redraw", "redraw_policy"),
        ("seed", "seed"),
        ("inner_tol", "inner_tol"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    if "mode" in overrides:
        overrides["mode"] = _MODE_FLAGS[overrides["mode"]]
    if overrides:
        config = replace(config, **overrides)
    config.validate()
    return config


def _add_solver_flags(parser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--mode", choices=sorted(_MODE_FLAGS), help="solver variant")
    parser.add_argument("--theta", type=float, help="acceptance threshold in (0,1)")
    parser.add_argument("--sigma0", type=float, help="initial regularization weight")
    parser.add_argument("--sigma-min", dest="sigma_min", type=float)
    parser.add_argument("--gamma-inc", dest="gamma_inc", type=float)
    parser.add_argument("--gamma-dec", dest="gamma_dec", type=float)
    parser.add_argument("--eps", type=float, help="first-order tolerance on ||grad f||")
    parser.add_argument("--max-iter", dest="max_iter", type=int)
    parser.add_argument("--l0", type=int, help="initial (or fixed) sketch size")
    parser.add_argument("--C", type=int, help="sketch growth constant (>= 1)")
    parser.add_argument("--kappa-t", dest="kappa_t", type=float)
    parser.add_argument("--kappa-s", dest="kappa_s", type=float)
    parser.add_argument("--rank-tol", dest="rank_tol", type=float)
    parser.add_argument(
        "--redraw", choices=("on-success", "every-iteration"), help="sketch redraw policy"
    )
    parser.add_argument("--seed", type=int, help="solver RNG seed")
    parser.add_argument("--inner-tol", dest="inner_tol", type=float)


def cmd_solve(args) -> int:
    config = _config_from_args(args)
    problem = get_problem(args.problem)
    result = run(problem, config)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        stem = args.problem.replace(":", "_").replace("=", "")
        trace_to_csv(result.trace, os.path.join(args.out, f"trace_{stem}.csv"))
        write_summary(problem, config, result, os.path.join(args.out, f"summary_{stem}.json"))
    final_l = result.trace[-1].l_k if result.trace else config.l0
    print(
        f"{problem.name}: status={result.status} iters={len(result.trace)} "
        f"f={result.f_final:.6e} ||g||={result.grad_norm_final:.3e} l_final={final_l}"
    )
    return _EXIT_BY_STATUS.get(result.status, 3)


LOWRANK_SUITE = ("ARWHEAD", "COSINE", "ENGVAL1", "POWER")


def _suite_selectors(args) -> List[str]:
    if args.problem:
        return list(args.problem)
    if args.suite == "lowrank":
        return [f"l-{name}:N={args.N}:d={args.d}" for name in LOWRANK_SUITE]
    raise RsarcError("specify --problem selectors or --suite lowrank")


def _parse_solver_spec(spec: str, base: SolverConfig) -> SolverConfig:
    """'arc', 'rarc:l=10', or 'rarc-d[:l0=2]' on top of shared settings."""
    head, _, rest = spec.partition(":")
    if head not in _MODE_FLAGS:
        raise RsarcError(f"unknown solver spec {spec!r}")
    config = replace(base, mode=_MODE_FLAGS[head])
    for part in filter(None, rest.split(":")):
        key, _, raw = part.partition("=")
        if key in ("l", "l0"):
            config = replace(config, l0=int(raw))
        elif key == "C":
            config = replace(config, growth_c=int(raw))
        else:
            raise RsarcError(f"unknown solver parameter {part!r} in {spec!r}")
    return config


def cmd_bench(args) -> int:
    if args.manifest:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        selectors = manifest["problems"]
        configs = [SolverConfig(**c) for c in manifest["solver_configs"]]
        repeats = manifest["repeats"]
        seed_base = manifest["seed_base"]
        taus = manifest["taus"]
        metric = manifest.get("metric", bn.METRIC_REL_HESSIANS)
    else:
        base = _config_from_args(args)
        selectors = _suite_selectors(args)
        configs = [_parse_solver_spec(s, base) for s in args.solvers.split(",")]
        repeats = args.repeats
        seed_base = args.seed_base
        taus = args.tau or [1e-2, 1e-5]
        metric = args.metric
    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "problems": list(selectors),
        "solver_configs": [vars(c).copy() for c in configs],
        "repeats": repeats,
        "seed_base": seed_base,
        "taus": list(taus),
        "metric": metric,
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    runs = bn.run_grid(
        selectors,
        configs,
        repeats=repeats,
        seed_base=seed_base,
        taus=taus,
        metric=metric,
        out_dir=args.out if args.traces else None,
        workers=args.workers,
    )
    bn.write_runs_csv(runs, os.path.join(args.out, "runs.csv"))
    solved = sum(1 for r in runs if any(np.isfinite(v) for v in r.n_p.values()))
    print(f"{len(runs)} runs -> {args.out}/runs.csv ({solved} solved at some tolerance)")
    return 0


def cmd_profile(args) -> int:
    runs = bn.read_runs_csv(args.runs)
    os.makedirs(args.out, exist_ok=True)
    solver_ids = sorted({r.solver_id for r in runs})
    taus = args.tau or sorted({t for r in runs for t in r.n_p}, reverse=True)
    for solver_id in solver_ids:
        for tau in taus:
            profile = bn.data_profile(runs, tau, solver_id=solver_id)
            name = f"profile_{solver_id}_{tau:g}.csv"
            bn.write_profile_csv(profile, os.path.join(args.out, name))
            print(f"{name}: pi(100) = {profile.pi[-1]:.3f}")
    return 0


def cmd_embed_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    passes = 0
    worst = 0.0
    for _ in range(args.trials):
        b = rng.standard_normal((args.d, args.rank))
        s = sk.draw(sk.SCALED_GAUSSIAN, args.l, args.d, rng)
        check = sk.check_subspace_embedding(s, b, args.eps, args.samples, rng)
        passes += check.passed
        worst = max(worst, check.max_distortion)
    rate = passes / args.trials
    print(
        f"eps={args.eps} l={args.l} d={args.d} rank={args.rank}: "
        f"pass rate {rate:.3f} over {args.trials} draws, worst distortion {worst:.4f}"
    )
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="rsarc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solver on one problem")
    p_solve.add_argument("--problem", required=True, help="registry selector")
    p_solve.add_argument("--out", help="directory for trace CSV + JSON summary")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run a benchmark grid")
    p_bench.add_argument("--suite", choices=("lowrank",), help="predefined problem set")
    p_bench.add_argument("--problem", action="append", help="registry selector (repeatable)")
    p_bench.add_argument("--d", type=int, default=1000, help="ambient dimension for --suite")
    p_bench.add_argument("--N", type=int, default=100, help="base dimension for --suite")
    p_bench.add_argument("--solvers", default="arc,rarc-d", help="comma list: arc,rarc:l=10,rarc-d")
    p_bench.add_argument("--repeats", type=int, default=5)
    p_bench.add_argument("--seed-base", dest="seed_base", type=int, default=0)
    p_bench.add_argument("--tau", type=float, action="append", help="tolerance (repeatable)")
    p_bench.add_argument("--metric", choices=bn.METRICS, default=bn.METRIC_REL_HESSIANS)
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--traces", action="store_true", help="also write per-run trace CSVs")
    p_bench.add_argument("--manifest", help="rerun a previously written manifest.json")
    p_bench.add_argument("--out", required=True)
    _add_solver_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_prof = sub.add_parser("profile", help="data profiles from a runs.csv")
    p_prof.add_argument("--runs", required=True)
    p_prof.add_argument("--tau", type=float, action="append")
    p_prof.add_argument("--out", required=True)
    p_prof.set_defaults(func=cmd_profile)

    p_embed = sub.add_parser("embed-check", help="Monte-Carlo subspace-embedding check")
    p_embed.add_argument("--l", type=int, required=True)
    p_embed.add_argument("--d", type=int, required=True)
    p_embed.add_argument("--rank", type=int, required=True)
    p_embed.add_argument("--eps", type=float, default=0.5)
    p_embed.add_argument("--trials", type=int, default=100)
    p_embed.add_argument("--samples", type=int, default=100)
    p_embed.add_argument("--seed", type=int, default=0)
    p_embed.set_defaults(func=cmd_embed_check)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RsarcError as exc:
        print(f"rsarc: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"rsarc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
