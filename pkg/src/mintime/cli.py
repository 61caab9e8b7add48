"""Command-line front end.

Exit codes:
  0  success (solve: certified; oracle: reachable; mpc: origin reached;
     demo: every run certified)
  1  error (bad arguments, malformed problem file, solver failure)
  2  solved but not certified (mpc: origin not reached within max_steps)
  3  oracle: origin unreachable within --tmax
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io as _io
import logging
import os
import sys
import time
from importlib.resources import files
from pathlib import Path

import numpy as np

from . import __version__
from .io import (
    Problem,
    ProblemFileError,
    atomic_write_text,
    load_problem,
    report_to_dict,
    trace_to_dict,
    write_report,
    write_trajectory,
)
from .mpc import MpcConfig, mpc_run
from .oracle import oracle_scan
from .pipeline import run_pipeline
from .solver import SolverError

EXIT_OK, EXIT_ERROR, EXIT_UNCERTIFIED, EXIT_UNREACHABLE = 0, 1, 2, 3
DEMOS = {"double-integrator": "double_integrator.yaml", "multi-input": "multi_input.yaml"}

logger = logging.getLogger("mintime")


def demo_path(name: str) -> Path:
    if name not in DEMOS:
        raise ValueError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return Path(str(files("mintime") / "data" / DEMOS[name]))


def _seed(args, problem: Problem) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MINTIME_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"MINTIME_SEED must be an integer, got {env!r}") from None
    return problem.seed if problem.seed is not None else 0


def _apply_overrides(problem: Problem, args) -> Problem:
    changes = {}
    for flag, key in (("eps_abs", "eps_abs"), ("eps_rel", "eps_rel"), ("max_iters", "max_iters")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[key] = value
    if changes:
        problem.solver = dataclasses.replace(problem.solver, **changes)
    return problem


def _out(args, stem: str, suffix: str) -> Path:
    return Path(args.out_dir) / f"{stem}{suffix}"


def _solve_one(problem: Problem, args, stem: str, *, T_max=None, extra=None):
    seed = _seed(args, problem)
    t0 = time.perf_counter()
    report = run_pipeline(
        problem.sys,
        problem.uset,
        problem.x0,
        problem.weights,
        cfg=problem.solver,
        T_max=T_max if T_max is not None else (args.tmax or problem.T),
        bisect=args.bisect,
        mu_samples=args.mu_samples,
        rng=np.random.default_rng(seed),
    )
    elapsed = time.perf_counter() - t0
    extra = dict(extra or {}, seed=seed)
    if args.timings:
        extra["timings"] = {"pipeline_seconds": elapsed}
    write_report(_out(args, stem, ".report.json"), report_to_dict(report, problem, extra=extra))
    write_trajectory(_out(args, stem, ".trajectory.csv"), report.relaxation.x, report.relaxation.u)
    return report


def cmd_solve(args) -> int:
    problem = _apply_overrides(load_problem(args.problem), args)
    stem = Path(args.problem).stem
    try:
        report = _solve_one(problem, args, stem)
    except SolverError as exc:
        write_report(_out(args, stem, ".report.json"), {"tool": "mintime", "version": __version__, "error": str(exc)})
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"T1={report.T1} t_star={report.t_star} certified={str(report.certified).lower()} "
          f"objective={report.relaxation.objective:.10g}")
    return EXIT_OK if report.certified else EXIT_UNCERTIFIED


def cmd_oracle(args) -> int:
    problem = _apply_overrides(load_problem(args.problem), args)
    stem = Path(args.problem).stem
    T_max = args.tmax or problem.T
    result = oracle_scan(problem.sys, problem.uset, problem.x0, T_max, bisect=args.bisect, cfg=problem.solver)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "distance", "reachable"])
    for t, d in result.distances.items():
        w.writerow([t, format(d, ".17g"), int(d <= result.feas_tol)])
    atomic_write_text(_out(args, stem, ".oracle.csv"), buf.getvalue())
    summary = {
        "tool": "mintime",
        "version": __version__,
        "t_star": result.t_star,
        "T_max": result.T_max,
        "feas_tol": result.feas_tol,
        "distances": {str(k): v for k, v in result.distances.items()},
        "witness": None if result.witness is None else result.witness.tolist(),
    }
    write_report(_out(args, stem, ".oracle.json"), summary)
    print(f"t_star={result.t_star}")
    return EXIT_OK if result.reachable else EXIT_UNREACHABLE


def _mpc_config(problem: Problem, args) -> MpcConfig:
    opts = dict(problem.mpc)
    for flag in ("tau", "resolve_period", "max_steps"):
        value = getattr(args, flag, None)
        if value is not None:
            opts[flag] = value
    return MpcConfig(
        tau=opts.get("tau"),
        resolve_period=opts.get("resolve_period", 1),
        max_steps=opts.get("max_steps", 100),
        zero_tol=opts.get("zero_tol"),
        relative_time=opts.get("relative_time", False),
    )


def cmd_mpc(args) -> int:
    problem = _apply_overrides(load_problem(args.problem), args)
    stem = Path(args.problem).stem
    cfg = _mpc_config(problem, args)
    cfg.horizon(problem.sys.n)  # reject tau <= n before any work
    t0 = time.perf_counter()
    trace = mpc_run(problem.sys, problem.uset, problem.x0, cfg, problem.solver)
    extra = {"resolve_period": cfg.resolve_period, "max_steps": cfg.max_steps}
    if args.timings:
        extra["timings"] = {"closed_loop_seconds": time.perf_counter() - t0}
    write_report(_out(args, stem, ".mpc.json"), trace_to_dict(trace, problem, extra=extra))
    write_trajectory(_out(args, stem, ".mpc.csv"), trace.states, trace.inputs, trace.solve_times)
    print(f"reached_zero_at={trace.reached_zero_at} solves={len(trace.solve_times)}")
    return EXIT_OK if trace.reached_zero_at is not None else EXIT_UNCERTIFIED


def run_demo(name: str, args) -> list:
    """Run every initial state of a bundled demo; returns ``(stem, report)`` pairs."""
    base = _apply_overrides(load_problem(demo_path(name)), args)
    grid = base.x0_grid or [base.x0]
    results = []
    for k, x0 in enumerate(grid):
        problem = base.with_x0(x0)
        extra = {"demo": {"name": name, "index": k, "horizon_requested": base.T}}
        T_max = None
        if base.max_horizon is not None and base.max_horizon > base.T:
            # extend the horizon to the oracle's minimum time when it exceeds T
            scan = oracle_scan(problem.sys, problem.uset, problem.x0, base.max_horizon, cfg=problem.solver)
            if scan.t_star is not None and scan.t_star > base.T:
                problem = problem.with_horizon(scan.t_star)
            T_max = problem.T
            extra["demo"]["max_horizon"] = base.max_horizon
        extra["demo"]["horizon_used"] = problem.T
        extra["demo"]["auto_extended"] = problem.T != base.T
        stem = f"{name}-{k}"
        report = _solve_one(problem, args, stem, T_max=T_max, extra=extra)
        print(f"{stem}: x0={x0.tolist()} T={problem.T} T1={report.T1} t_star={report.t_star} "
              f"certified={str(report.certified).lower()}")
        results.append((stem, report))
    return results


def cmd_demo(args) -> int:
    results = run_demo(args.name, args)
    return EXIT_OK if all(r.certified for _, r in results) else EXIT_UNCERTIFIED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for reports and tables (default: .)")
    common.add_argument("--seed", type=int, default=None, help="seed for sampling (fallback: MINTIME_SEED, then the problem file)")
    common.add_argument("--eps-abs", type=float, default=None, help="absolute stopping tolerance")
    common.add_argument("--eps-rel", type=float, default=None, help="relative stopping tolerance")
    common.add_argument("--max-iters", type=int, default=None, help="iteration cap of the splitting solver")
    common.add_argument("--timings", action="store_true", help="record wall-clock timings (reports are then not byte-reproducible)")
    common.add_argument("-v", "--verbose", action="store_true")

    scan = argparse.ArgumentParser(add_help=False)
    scan.add_argument("--tmax", type=int, default=None, help="largest horizon scanned by the oracle (default: the problem horizon)")
    scan.add_argument("--bisect", action="store_true", help="bisect over the horizon instead of scanning upward")

    parser = argparse.ArgumentParser(
        prog="mintime",
        description="Minimum-time control of discrete-time LTI systems.",
        epilog=__doc__.split("\n", 2)[2],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"mintime {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common, scan], help="solve the relaxation and certify it")
    p.add_argument("problem")
    p.add_argument("--mu-samples", type=int, default=0, help="Monte-Carlo samples for the exactness-ratio refuter")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", parents=[common, scan], help="exact minimum time by feasibility scan")
    p.add_argument("problem")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("mpc", parents=[common], help="closed-loop receding-horizon run")
    p.add_argument("problem")
    p.add_argument("--tau", type=int, default=None, help="prediction horizon, must exceed the state dimension (default: n + 3)")
    p.add_argument("--resolve-period", type=int, default=None, help="steps between re-solves (1..tau)")
    p.add_argument("--max-steps", type=int, default=None)
    p.set_defaults(func=cmd_mpc)

    p = sub.add_parser("demo", parents=[common, scan], help="run a bundled example")
    p.add_argument("name", choices=sorted(DEMOS))
    p.add_argument("--mu-samples", type=int, default=0)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ProblemFileError, ValueError, OverflowError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
