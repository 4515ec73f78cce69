"""Command-line entry points: solve one scenario, run benchmarks, validate.

Exit codes: 0 on success, 1 when planning or validation fails, 2 on
input errors (bad arguments, malformed or invalid files).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import (
    BUILTIN_SCENARIOS,
    ParseError,
    Scenario,
    ValidationError,
    builtin_scenario,
    export_solution,
    import_solution,
    load_scenario,
    run_benchmark,
    run_trial,
)
from .planners import StacParams, validate_solution
from .scheduler import default_resolution

PLANNERS = ("stac", "sync", "priority")


def _load_scenario_arg(value: str) -> Scenario:
    path = Path(value)
    if path.exists():
        return load_scenario(path)
    if value in BUILTIN_SCENARIOS:
        return builtin_scenario(value)
    raise ParseError(f"scenario '{value}' is neither a file nor a builtin name")


def _cmd_solve(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    params = StacParams(n_ra=args.nra, timeout=args.timeout, seed=args.seed)
    row, result = run_trial(scenario, args.planner, params)
    print(
        f"{scenario.name} planner={args.planner} seed={args.seed} "
        f"success={int(row.success)} time={result.stats.solve_time:.3f}s "
        f"queries={row.queries} attempts={row.schedule_attempts} "
        f"coord_ratio={row.coord_ratio:.3f}"
    )
    if not row.success:
        return 1
    if args.out:
        export_solution(result, args.out)
        print(f"solution written to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    directory = Path(args.scenarios)
    files = sorted(directory.glob("*.json"))
    if not files:
        raise ParseError(f"no scenario files in {directory}")
    scenarios = [load_scenario(f) for f in files]
    planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    for p in planners:
        if p not in PLANNERS:
            raise ParseError(f"unknown planner '{p}' (have {', '.join(PLANNERS)})")
    report = run_benchmark(
        scenarios,
        planners,
        trials=args.trials,
        base_seed=args.base_seed,
        timeout=args.timeout,
        nra=args.nra,
        csv_path=args.csv,
        cdf_path=args.cdf,
        progress=lambda row: print(
            f"  {row.scenario} {row.planner} seed={row.seed} "
            f"success={int(row.success)} time={row.solve_time_s:.3f}s queries={row.queries}"
        ),
    )
    print(f"{'scenario':<14}{'planner':<10}{'succ':>6}{'t_med':>9}{'Q_med':>7}{'coord':>7}")
    for agg in report.aggregates:
        print(
            f"{agg.scenario:<14}{agg.planner:<10}{agg.success_rate:>6.0%}"
            f"{agg.time_median:>9.3f}{agg.queries_median:>7.1f}{agg.mean_coord_ratio:>7.1%}"
        )
    return 0


def _cmd_validate(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    candidate, paths = import_solution(args.solution)
    models = [r.model for r in scenario.robots]
    if len(paths) != len(models):
        print(f"INVALID: solution has {len(paths)} robots, scenario has {len(models)}")
        return 1
    problems = validate_solution(
        paths,
        candidate,
        models,
        default_resolution(models),
        starts=[r.start for r in scenario.robots],
        goal_sets=[r.goals for r in scenario.robots],
    )
    if problems:
        for p in problems:
            print(f"INVALID: {p}")
        return 1
    print("valid solution")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coordplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario with one planner")
    p.add_argument("--scenario", required=True, help="scenario file or builtin name")
    p.add_argument("--planner", choices=PLANNERS, default="stac")
    p.add_argument("--nra", type=int, default=200, help="max reschedule attempts per path set")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the solution file here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark over a scenario directory")
    p.add_argument("--scenarios", required=True, help="directory of scenario JSON files")
    p.add_argument("--planners", default="stac,sync", help="comma-separated planner list")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--nra", type=int, default=200)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="per-trial CSV output path")
    p.add_argument("--cdf", default=None, help="solve-time CDF CSV output path")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("validate", help="independently validate an exported solution")
    p.add_argument("--scenario", required=True)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
