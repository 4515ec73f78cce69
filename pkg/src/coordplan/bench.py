"""Scenario files, benchmark execution, and solution export.

Scenario files are UTF-8 JSON (lengths in meters, angles in radians)
with keys ``name``, ``world`` and ``robots``; see the README for the
schema. Benchmarks run seeded trials per (scenario, planner), write
per-trial CSV rows plus solve-time CDF series, and aggregate quartiles
with failures recorded at the timeout value.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path as FilePath

import numpy as np

from .constraints import EndEffectorLine, ManifoldConstraint, Unconstrained, evaluate
from .geometry import (
    Circle,
    Configuration,
    Disc,
    PlanarArm,
    Rect,
    RobotModel,
    World,
    robot_world_collision,
)
from .planners import Failure, PlannerStats, Solution, StacParams, solve
from .roadmap import Path
from .scheduler import CandidateSolution

BUILTIN_SCENARIOS = ("doorway2d", "arm_doorway", "cross2", "cross3", "cross4")


class ParseError(ValueError):
    """Malformed scenario or solution file; message names the field."""


class ValidationError(ValueError):
    """Well-formed file with semantically invalid content."""


@dataclass
class RobotSpec:
    model: RobotModel
    constraint: ManifoldConstraint
    start: Configuration
    goals: list[Configuration]


@dataclass
class Scenario:
    name: str
    world: World
    robots: list[RobotSpec]


# -- scenario parsing -----------------------------------------------------


def _need(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ParseError(f"{where}: missing key '{key}'")
    return mapping[key]


def _floats(value, where: str, n: int | None = None) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not all(
        isinstance(v, (int, float)) for v in value
    ):
        raise ParseError(f"{where}: expected a list of numbers")
    if n is not None and len(value) != n:
        raise ParseError(f"{where}: expected {n} numbers, got {len(value)}")
    return tuple(float(v) for v in value)


def _parse_world(data, where: str) -> World:
    bounds = _floats(_need(data, "bounds", where), f"{where}.bounds", 4)
    obstacles = []
    for k, obs in enumerate(data.get("obstacles", [])):
        kind = _need(obs, "type", f"{where}.obstacles[{k}]")
        try:
            if kind == "rect":
                r = _floats(_need(obs, "rect", f"{where}.obstacles[{k}]"), f"{where}.obstacles[{k}].rect", 4)
                obstacles.append(Rect(*r))
            elif kind == "circle":
                c = _floats(_need(obs, "center", f"{where}.obstacles[{k}]"), f"{where}.obstacles[{k}].center", 2)
                obstacles.append(Circle(c[0], c[1], float(_need(obs, "radius", f"{where}.obstacles[{k}]"))))
            else:
                raise ParseError(f"{where}.obstacles[{k}].type: unknown obstacle type '{kind}'")
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"{where}.obstacles[{k}]: {exc}") from exc
    try:
        return World(Rect(*bounds), tuple(obstacles))
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _parse_model(data, where: str) -> RobotModel:
    kind = _need(data, "type", where)
    try:
        if kind == "disc":
            return Disc(float(_need(data, "radius", where)))
        if kind == "planar_arm":
            return PlanarArm(
                base=_floats(_need(data, "base", where), f"{where}.base", 2),
                link_lengths=_floats(_need(data, "link_lengths", where), f"{where}.link_lengths"),
                link_radius=float(_need(data, "link_radius", where)),
                ee_stick_length=float(data.get("ee_stick_length", 0.0)),
            )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{where}: {exc}") from exc
    raise ParseError(f"{where}.type: unknown model type '{kind}'")


def _parse_constraint(data, where: str) -> ManifoldConstraint:
    kind = _need(data, "type", where)
    if kind == "none":
        return Unconstrained()
    if kind == "ee_line":
        heading = data.get("fix_heading")
        return EndEffectorLine(
            line_y=float(_need(data, "line_y", where)),
            fix_heading=None if heading is None else float(heading),
        )
    raise ParseError(f"{where}.type: unknown constraint type '{kind}'")


def scenario_from_dict(data: dict, origin: str = "scenario") -> Scenario:
    name = _need(data, "name", origin)
    world = _parse_world(_need(data, "world", origin), f"{origin}.world")
    robot_list = _need(data, "robots", origin)
    if not isinstance(robot_list, list) or not robot_list:
        raise ParseError(f"{origin}.robots: need a non-empty list")
    robots = []
    for i, rdata in enumerate(robot_list):
        where = f"{origin}.robots[{i}]"
        model = _parse_model(_need(rdata, "model", where), f"{where}.model")
        constraint = _parse_constraint(_need(rdata, "constraint", where), f"{where}.constraint")
        try:
            start = model.config(_floats(_need(rdata, "start", where), f"{where}.start"))
            goal_list = _need(rdata, "goals", where)
            if not isinstance(goal_list, list) or not goal_list:
                raise ParseError(f"{where}.goals: need a non-empty list")
            goals = [model.config(_floats(g, f"{where}.goals[{k}]")) for k, g in enumerate(goal_list)]
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"{where}: {exc}") from exc
        robots.append(RobotSpec(model, constraint, start, goals))
    scenario = Scenario(str(name), world, robots)
    _validate_scenario(scenario)
    return scenario


def _validate_scenario(scenario: Scenario) -> None:
    for i, robot in enumerate(scenario.robots):
        for label, configs in (("start", [robot.start]), ("goals", robot.goals)):
            for k, q in enumerate(configs):
                field = f"robots[{i}].{label}" + (f"[{k}]" if label == "goals" else "")
                residual = evaluate(robot.constraint, robot.model, q)
                if residual.size and np.abs(residual).max() > robot.constraint.tolerance:
                    raise ValidationError(f"{field}: violates the constraint (residual {residual})")
                if robot_world_collision(robot.model, q, scenario.world):
                    raise ValidationError(f"{field}: collides with the world")


def load_scenario(path) -> Scenario:
    """Load and fully validate a scenario JSON file."""
    path = FilePath(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return scenario_from_dict(data, origin=path.name)


def scenario_to_dict(scenario: Scenario) -> dict:
    def obstacle_dict(obs):
        if isinstance(obs, Rect):
            return {"type": "rect", "rect": [obs.x_min, obs.y_min, obs.x_max, obs.y_max]}
        return {"type": "circle", "center": [obs.cx, obs.cy], "radius": obs.radius}

    def model_dict(model):
        if isinstance(model, Disc):
            return {"type": "disc", "radius": model.radius}
        return {
            "type": "planar_arm",
            "base": list(model.base),
            "link_lengths": list(model.link_lengths),
            "link_radius": model.link_radius,
            "ee_stick_length": model.ee_stick_length,
        }

    def constraint_dict(constraint):
        if isinstance(constraint, Unconstrained):
            return {"type": "none"}
        return {"type": "ee_line", "line_y": constraint.line_y, "fix_heading": constraint.fix_heading}

    b = scenario.world.bounds
    return {
        "name": scenario.name,
        "world": {
            "bounds": [b.x_min, b.y_min, b.x_max, b.y_max],
            "obstacles": [obstacle_dict(o) for o in scenario.world.obstacles],
        },
        "robots": [
            {
                "model": model_dict(r.model),
                "constraint": constraint_dict(r.constraint),
                "start": list(r.start.values),
                "goals": [list(g.values) for g in r.goals],
            }
            for r in scenario.robots
        ],
    }


def save_scenario(scenario: Scenario, path) -> None:
    FilePath(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=1, sort_keys=True), encoding="utf-8"
    )


def builtin_scenario(name: str) -> Scenario:
    """Load one of the packaged scenarios by name."""
    if name not in BUILTIN_SCENARIOS:
        raise ParseError(f"unknown builtin scenario '{name}' (have {', '.join(BUILTIN_SCENARIOS)})")
    ref = resources.files("coordplan").joinpath(f"scenarios/{name}.json")
    data = json.loads(ref.read_text(encoding="utf-8"))
    return scenario_from_dict(data, origin=name)


def random_valid_config(world, model, constraint, rng, max_tries: int = 200) -> Configuration:
    """Seeded start/goal generator: a uniform constraint- and world-valid draw."""
    from .constraints import NonConvergenceError, project

    for _ in range(max_tries):
        try:
            q = project(constraint, model, model.sample_uniform(rng, world))
        except NonConvergenceError:
            continue
        if not robot_world_collision(model, q, world):
            return q
    raise ValidationError("could not sample a valid configuration")


# -- benchmark harness ----------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    scenario: str
    planner: str
    nra: int
    seed: int
    success: bool
    solve_time_s: float
    queries: int
    schedule_attempts: int
    coord_ratio: float


@dataclass(frozen=True)
class Aggregate:
    scenario: str
    planner: str
    trials: int
    success_rate: float
    time_q1: float
    time_median: float
    time_q3: float
    queries_q1: float
    queries_median: float
    queries_q3: float
    mean_coord_ratio: float


@dataclass
class BenchmarkReport:
    rows: list[TrialRow]
    aggregates: list[Aggregate]
    cdf: dict[tuple[str, str], list[tuple[float, float]]]


def _quartiles(xs: list[float]) -> tuple[float, float, float]:
    if len(xs) == 1:
        return (xs[0], xs[0], xs[0])
    q = statistics.quantiles(xs, n=4, method="inclusive")
    return (q[0], q[1], q[2])


def _cdf_series(times: list[float]) -> list[tuple[float, float]]:
    ordered = sorted(times)
    n = len(ordered)
    if n == 1:
        return [(ordered[0], 1.0)]
    return [(t, i / (n - 1)) for i, t in enumerate(ordered)]


def aggregate_rows(rows: list[TrialRow]) -> list[Aggregate]:
    groups: dict[tuple[str, str], list[TrialRow]] = {}
    for row in rows:
        groups.setdefault((row.scenario, row.planner), []).append(row)
    out = []
    for (scenario, planner), group in groups.items():
        times = [r.solve_time_s for r in group]
        queries = [float(r.queries) for r in group]
        tq = _quartiles(times)
        qq = _quartiles(queries)
        out.append(
            Aggregate(
                scenario,
                planner,
                len(group),
                sum(r.success for r in group) / len(group),
                tq[0], tq[1], tq[2],
                qq[0], qq[1], qq[2],
                sum(r.coord_ratio for r in group) / len(group),
            )
        )
    return out


def run_trial(scenario: Scenario, planner: str, params: StacParams) -> tuple[TrialRow, Solution | Failure]:
    result = solve(scenario, planner, params)
    stats: PlannerStats = result.stats
    success = isinstance(result, Solution)
    row = TrialRow(
        scenario=scenario.name,
        planner=planner,
        nra=params.n_ra,
        seed=params.seed,
        success=success,
        solve_time_s=stats.solve_time if success else params.timeout,
        queries=stats.queries,
        schedule_attempts=stats.schedule_attempts,
        coord_ratio=stats.coord_ratio,
    )
    return row, result


def run_benchmark(
    scenarios: list[Scenario],
    planners: list[str],
    trials: int,
    base_seed: int = 0,
    timeout: float = 60.0,
    nra: int = 200,
    base_params: StacParams | None = None,
    csv_path=None,
    cdf_path=None,
    progress=None,
) -> BenchmarkReport:
    """Run seeded trials for every (scenario, planner) pair.

    Trial i uses seed base_seed + i so each trial is independent of the
    others' presence. Failures are recorded at the timeout value.
    """
    base = base_params if base_params is not None else StacParams()
    rows = []
    for scenario in scenarios:
        for planner in planners:
            for i in range(trials):
                params = replace(base, seed=base_seed + i, timeout=timeout, n_ra=nra)
                row, _ = run_trial(scenario, planner, params)
                rows.append(row)
                if progress is not None:
                    progress(row)
    cdf = {
        (sc, pl): _cdf_series(
            [r.solve_time_s for r in rows if r.scenario == sc and r.planner == pl]
        )
        for sc in {r.scenario for r in rows}
        for pl in {r.planner for r in rows}
        if any(r.scenario == sc and r.planner == pl for r in rows)
    }
    report = BenchmarkReport(rows, aggregate_rows(rows), cdf)
    if csv_path is not None:
        write_rows_csv(report.rows, csv_path)
    if cdf_path is not None:
        write_cdf_csv(report.cdf, cdf_path)
    return report


CSV_COLUMNS = (
    "scenario", "planner", "nra", "seed", "success",
    "solve_time_s", "queries", "schedule_attempts", "coord_ratio",
)


def write_rows_csv(rows: list[TrialRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.scenario, r.planner, r.nra, r.seed, int(r.success),
                 f"{r.solve_time_s:.6f}", r.queries, r.schedule_attempts,
                 f"{r.coord_ratio:.6f}"]
            )


def read_rows_csv(path) -> list[TrialRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                TrialRow(
                    rec["scenario"], rec["planner"], int(rec["nra"]), int(rec["seed"]),
                    bool(int(rec["success"])), float(rec["solve_time_s"]),
                    int(rec["queries"]), int(rec["schedule_attempts"]),
                    float(rec["coord_ratio"]),
                )
            )
    return rows


def write_cdf_csv(cdf, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "planner", "time_s", "cum_prob"])
        for (scenario, planner) in sorted(cdf):
            for t, p in cdf[(scenario, planner)]:
                writer.writerow([scenario, planner, f"{t:.6f}", f"{p:.6f}"])


# -- solution files -------------------------------------------------------


def solution_to_dict(solution: Solution) -> dict:
    candidate = solution.candidate
    states = []
    for row in candidate.progress:
        states.append([list(path.configs[v].values) for path, v in zip(solution.paths, row)])
    return {
        "num_robots": len(solution.paths),
        "num_timesteps": candidate.num_timesteps,
        "progress": [list(row) for row in candidate.progress],
        "states": states,
        "paths": [
            {
                "vertex_ids": list(p.vertex_ids),
                "cost": p.cost,
                "configs": [list(q.values) for q in p.configs],
                "edge_waypoints": [[list(q.values) for q in wps] for wps in p.edge_waypoints],
            }
            for p in solution.paths
        ],
    }


def export_solution(solution: Solution, path) -> None:
    """Write the schedule, composite states, and per-robot paths as JSON.

    The output depends only on the solution content, so identical solves
    export byte-identical files.
    """
    FilePath(path).write_text(
        json.dumps(solution_to_dict(solution), indent=1, sort_keys=True), encoding="utf-8"
    )


def import_solution(path) -> tuple[CandidateSolution, list[Path]]:
    file_path = FilePath(path)
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{file_path}: invalid JSON ({exc})") from exc
    try:
        candidate = CandidateSolution(tuple(tuple(int(v) for v in row) for row in data["progress"]))
        paths = []
        for p in data["paths"]:
            configs = [Configuration(tuple(float(v) for v in q)) for q in p["configs"]]
            waypoints = [
                tuple(Configuration(tuple(float(v) for v in q)) for q in wps)
                for wps in p["edge_waypoints"]
            ]
            paths.append(Path(list(p["vertex_ids"]), configs, float(p["cost"]), waypoints))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{file_path}: malformed solution file ({exc})") from exc
    return candidate, paths
