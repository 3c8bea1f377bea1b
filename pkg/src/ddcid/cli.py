"""Command-line benchmark runner.

    ddcid list-problems
    ddcid run --problem camel --budget 100 --seed 1 --reps 1 --out camel.json
    ddcid trace --problem molei --seed 3 --out trajectory.csv
"""

from __future__ import annotations

import argparse
import os
import sys

from .diffusion import DiffusionConfig, NoiseSource, escape_minimum
from .explorer import ExplorationConfig
from .harness import (
    METHODS,
    AnnealConfig,
    BenchmarkSpec,
    emit_report,
    run_benchmark,
    write_trajectory_csv,
)
from .local_search import CONVERGED, Tolerances, minimize
from .potentials import available_problems, get_potential


def _output_path(out: str | None, problem: str, method: str, fmt: str) -> str:
    out_dir = os.environ.get("DDCID_OUT_DIR", ".")
    if out is None:
        safe = problem.replace(":", "_")
        return os.path.join(out_dir, f"{safe}_{method}.{fmt}")
    if os.path.dirname(out):
        return out
    return os.path.join(out_dir, out)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddcid", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-problems", help="list registry problem keys")

    run = sub.add_parser("run", help="run a benchmark")
    run.add_argument("--problem", required=True, help="registry key, e.g. camel or lj:7")
    run.add_argument("--budget", type=int, default=20, help="critical-point attempts per run")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--method", choices=METHODS, default="ddcid")
    run.add_argument("--reps", type=int, default=1, help="independent repetitions")
    run.add_argument("--out", default=None, help="output path (DDCID_OUT_DIR applies)")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--alpha", type=float, default=1.0, help="diffusion kick amplitude")
    run.add_argument("--max-diffusive", type=int, default=50)
    run.add_argument("--atol", type=float, default=1e-8)
    run.add_argument("--rtol", type=float, default=1e-8)
    run.add_argument("--max-iterations", type=int, default=500)
    run.add_argument("--max-restarts", type=int, default=5)
    run.add_argument("--target", type=float, default=None, help="known global value")
    run.add_argument("--target-tol", type=float, default=1e-3)
    run.add_argument("--mc-starts", type=int, default=20)
    run.add_argument("--anneal-budget", type=int, default=20000)
    run.add_argument("--neighbor-scale", type=float, default=0.5)

    trace = sub.add_parser("trace", help="dump one minimum-escape diffusion trajectory")
    trace.add_argument("--problem", required=True)
    trace.add_argument("--seed", type=int, default=0)
    trace.add_argument("--out", default=None)
    trace.add_argument("--alpha", type=float, default=1.0)
    return parser


def _cmd_run(args) -> int:
    config = ExplorationConfig(
        max_critical_points=args.budget,
        tolerances=Tolerances(atol=args.atol, rtol=args.rtol,
                              max_iterations=args.max_iterations),
        diffusion=DiffusionConfig(alpha=args.alpha,
                                  max_diffusive_steps=args.max_diffusive),
        seed=args.seed,
        max_restarts=args.max_restarts,
    )
    spec = BenchmarkSpec(
        problem=args.problem, config=config, repetitions=args.reps,
        method=args.method, output=args.out, fmt=args.format,
        target_value=args.target, target_tol=args.target_tol,
        mc_starts=args.mc_starts,
        anneal=AnnealConfig(iteration_budget=args.anneal_budget,
                            neighbor_scale=args.neighbor_scale),
    )
    report = run_benchmark(spec)
    path = _output_path(args.out, args.problem, args.method, args.format)
    emit_report(report, args.format, path)
    agg = report.aggregate()
    print(f"{args.problem} [{args.method}] reps={args.reps} "
          f"best={agg['best_value']} distinct_minima={agg['distinct_minima']}")
    if "global_hits" in agg:
        print(f"target {spec.target_value} hit in {agg['global_hits']}/{args.reps} reps")
    print(f"report written to {path}")
    return 0


def _cmd_trace(args) -> int:
    p = get_potential(args.problem)
    noise = NoiseSource(args.seed)
    x0 = noise.uniform_box(p.search_region)
    result = minimize(p, x0)
    if result.outcome != CONVERGED:
        print(f"initial minimization did not converge ({result.outcome})", file=sys.stderr)
        return 1
    esc = escape_minimum(p, result.final_point, DiffusionConfig(alpha=args.alpha), noise)
    path = _output_path(args.out, args.problem, "trace", "csv")
    write_trajectory_csv(esc.trajectory, path)
    print(f"minimum at g={result.final_value:.6g}; escape ({esc.outcome}) after "
          f"{esc.steps} diffusive steps; trajectory written to {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list-problems":
            for key in available_problems():
                print(key)
            return 0
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "trace":
            return _cmd_trace(args)
    except (KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
