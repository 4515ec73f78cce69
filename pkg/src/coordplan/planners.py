"""Top-level multi-robot solvers and the scheduling oracle.

``stac_solve`` is the full planner: per-robot roadmap queries, iterated
stop-schedule sampling with collision feedback, and experience-driven
replanning after every failed rescheduling round. ``synchronous_solve``
is the baseline that only ever moves all robots simultaneously and
replans whole path sets on conflict. ``priority_solve`` schedules by
random priority order without feedback. ``brute_force_schedule``
exhaustively enumerates schedules for tiny instances and serves as a
test oracle.
"""

from __future__ import annotations

import itertools
import random
import time
from bisect import bisect_right
from dataclasses import dataclass

from .feedback import CollisionHistory, CollisionRecord, normalize, plan_with_experience, record_collision
from .geometry import Disc, RobotModel, robot_robot_collision
from .roadmap import NoPathError, Path, Roadmap, RoadmapParams, build_roadmap
from .scheduler import (
    CandidateSolution,
    SweepCache,
    _candidate_from_move_rows,
    collision_check,
    default_resolution,
    schedule,
    schedule_priority,
)


class CapExceededError(ValueError):
    """Instance too large for exhaustive schedule enumeration."""


@dataclass(frozen=True)
class PlannerStats:
    solve_time: float
    queries: int
    schedule_attempts: int
    coord_time: float
    coord_ratio: float
    success: bool


@dataclass(frozen=True)
class StacParams:
    """Solver knobs; defaults match the benchmark configuration."""

    n_ra: int = 200
    timeout: float = 60.0
    seed: int = 0
    p_priority: float = 0.2
    p_root: float = 0.2
    weight_cost: float = 1.0
    weight_selections: float = 0.5
    perturb: float = 0.3
    detour_retries: int = 30
    resolution: float | None = None
    num_samples: int | None = None
    k_nearest: int = 8
    step: float = 0.05

    def __post_init__(self) -> None:
        if self.n_ra < 1 or self.timeout <= 0.0:
            raise ValueError("need n_ra >= 1 and a positive timeout")


@dataclass
class Solution:
    paths: list[Path]
    candidate: CandidateSolution
    stats: PlannerStats


@dataclass
class Failure:
    stats: PlannerStats


def _roadmap_params(model: RobotModel, params: StacParams) -> RoadmapParams:
    samples = params.num_samples
    if samples is None:
        samples = 300 if isinstance(model, Disc) else 600
    return RoadmapParams(samples, params.k_nearest, params.step)


class _Run:
    """Shared bookkeeping for one solve call: clock, rng, and counters."""

    def __init__(self, scenario, params: StacParams):
        self.scenario = scenario
        self.params = params
        self.rng = random.Random(params.seed)
        self.models = [r.model for r in scenario.robots]
        self.resolution = (
            params.resolution if params.resolution is not None else default_resolution(self.models)
        )
        self.t0 = time.perf_counter()
        self.deadline = self.t0 + params.timeout
        self.queries = 0
        self.attempts = 0
        self.coord_time = 0.0

    def out_of_time(self) -> bool:
        return time.perf_counter() > self.deadline

    def stats(self, success: bool) -> PlannerStats:
        solve_time = time.perf_counter() - self.t0
        ratio = min(1.0, self.coord_time / solve_time) if solve_time > 0.0 else 0.0
        return PlannerStats(solve_time, self.queries, self.attempts, self.coord_time, ratio, success)

    def build_roadmaps(self) -> list[Roadmap] | None:
        roadmaps = []
        for robot in self.scenario.robots:
            if self.out_of_time():
                return None
            roadmaps.append(
                build_roadmap(
                    self.scenario.world,
                    robot.model,
                    robot.constraint,
                    robot.start,
                    robot.goals,
                    _roadmap_params(robot.model, self.params),
                    self.rng,
                    deadline=self.deadline,
                    clock=time.perf_counter,
                )
            )
        return roadmaps

    def initial_paths(self, roadmaps: list[Roadmap]) -> list[Path] | None:
        paths = []
        for rm in roadmaps:
            if self.out_of_time():
                return None
            paths.append(rm.plan(rm.start_id, rm.goal_ids, self.rng, self.params.perturb))
        self.queries = 1
        return paths


def stac_solve(scenario, params: StacParams) -> Solution | Failure:
    """Schedule-first hybrid solve: reschedule up to n_ra times per path
    set, then feed the conflict counts back and request new paths."""
    run = _Run(scenario, params)
    roadmaps = run.build_roadmaps()
    if roadmaps is None:
        return Failure(run.stats(False))
    try:
        paths = run.initial_paths(roadmaps)
    except NoPathError:
        return Failure(run.stats(False))
    if paths is None:
        return Failure(run.stats(False))

    histories = [CollisionHistory() for _ in roadmaps]
    while True:
        records = [CollisionRecord.for_path(p) for p in paths]
        cache = SweepCache(paths, run.models, run.resolution, conservative=True)
        for _ in range(params.n_ra):
            if run.out_of_time():
                return Failure(run.stats(False))
            tick = time.perf_counter()
            if run.rng.random() < params.p_priority:
                candidate = schedule_priority(paths, run.rng)
            else:
                candidate = schedule(paths, run.rng)
            events = collision_check(candidate, paths, run.models, run.resolution, cache)
            run.attempts += 1
            if not events:
                run.coord_time += time.perf_counter() - tick
                return Solution(paths, candidate, run.stats(True))
            record_collision(records, events)
            run.coord_time += time.perf_counter() - tick

        new_paths = []
        for r, rm in enumerate(roadmaps):
            if run.out_of_time():
                return Failure(run.stats(False))
            histories[r].add(paths[r], normalize(records[r]))
            new_paths.append(
                plan_with_experience(
                    rm,
                    histories[r],
                    run.rng,
                    p_root=params.p_root,
                    a=params.weight_cost,
                    b=params.weight_selections,
                    perturb=params.perturb,
                    detour_retries=params.detour_retries,
                )
            )
        paths = new_paths
        run.queries += 1


def _chain_of(path: Path, model: RobotModel):
    chain = [path.configs[0]]
    for wps in path.edge_waypoints:
        chain.extend(wps[1:])
    cum = [0.0]
    for a, b in zip(chain, chain[1:]):
        cum.append(cum[-1] + model.distance(a, b))
    return chain, cum


def _point_on_chain(chain, cum, model, s: float):
    if s <= 0.0:
        return chain[0]
    if s >= cum[-1]:
        return chain[-1]
    k = bisect_right(cum, s) - 1
    seg = cum[k + 1] - cum[k]
    t = (s - cum[k]) / seg if seg > 0.0 else 0.0
    return model.interpolate(chain[k], chain[k + 1], t)


def resample_uniform(path: Path, model: RobotModel, num_waypoints: int) -> Path:
    """Uniform arc-length resampling along the path's cached motion.

    Static paths (zero length) stay single-vertex. The resampled path
    keeps the original polyline between consecutive waypoints so swept
    collision checks follow the true motion.
    """
    chain, cum = _chain_of(path, model)
    total = cum[-1]
    if total == 0.0 or num_waypoints < 2:
        return Path([0], [path.configs[0]], 0.0, [])
    targets = [k * total / (num_waypoints - 1) for k in range(num_waypoints)]
    targets[-1] = total
    configs = [_point_on_chain(chain, cum, model, s) for s in targets]
    edge_waypoints = []
    for k in range(num_waypoints - 1):
        lo, hi = targets[k], targets[k + 1]
        middle = [chain[m] for m in range(len(chain)) if lo < cum[m] < hi]
        edge_waypoints.append(tuple([configs[k]] + middle + [configs[k + 1]]))
    return Path(list(range(num_waypoints)), configs, total, edge_waypoints)


def synchronous_solve(scenario, params: StacParams) -> Solution | Failure:
    """Baseline: all robots move simultaneously at uniform progress.

    Paths are resampled to the longest path's waypoint count; any
    conflict invalidates the whole set and a fresh perturbed path set is
    requested until one traverses cleanly or the timeout hits.
    """
    run = _Run(scenario, params)
    roadmaps = run.build_roadmaps()
    if roadmaps is None:
        return Failure(run.stats(False))
    try:
        paths = run.initial_paths(roadmaps)
    except NoPathError:
        return Failure(run.stats(False))
    if paths is None:
        return Failure(run.stats(False))

    while True:
        n_max = max(len(p) for p in paths)
        resampled = [resample_uniform(p, m, n_max) for p, m in zip(paths, run.models)]
        tick = time.perf_counter()
        rows = []
        for _ in range(max(0, n_max - 1)):
            rows.append(tuple(1 if len(rp) > 1 else 0 for rp in resampled))
        candidate = _candidate_from_move_rows(rows, len(resampled))
        events = collision_check(
            candidate, resampled, run.models, run.resolution, conservative=True
        )
        run.attempts += 1
        run.coord_time += time.perf_counter() - tick
        if not events:
            return Solution(resampled, candidate, run.stats(True))
        if run.out_of_time():
            return Failure(run.stats(False))
        try:
            new_paths = []
            for rm in roadmaps:
                if run.out_of_time():
                    return Failure(run.stats(False))
                new_paths.append(rm.plan(rm.start_id, rm.goal_ids, run.rng, params.perturb))
        except NoPathError:
            return Failure(run.stats(False))
        paths = new_paths
        run.queries += 1


def priority_solve(scenario, params: StacParams) -> Solution | Failure:
    """Baseline: random priority orders over fresh path sets, no feedback."""
    run = _Run(scenario, params)
    roadmaps = run.build_roadmaps()
    if roadmaps is None:
        return Failure(run.stats(False))
    try:
        paths = run.initial_paths(roadmaps)
    except NoPathError:
        return Failure(run.stats(False))
    if paths is None:
        return Failure(run.stats(False))

    while True:
        cache = SweepCache(paths, run.models, run.resolution, conservative=True)
        for _ in range(params.n_ra):
            if run.out_of_time():
                return Failure(run.stats(False))
            tick = time.perf_counter()
            candidate = schedule_priority(paths, run.rng)
            events = collision_check(candidate, paths, run.models, run.resolution, cache)
            run.attempts += 1
            run.coord_time += time.perf_counter() - tick
            if not events:
                return Solution(paths, candidate, run.stats(True))
        try:
            new_paths = []
            for rm in roadmaps:
                if run.out_of_time():
                    return Failure(run.stats(False))
                new_paths.append(rm.plan(rm.start_id, rm.goal_ids, run.rng, params.perturb))
        except NoPathError:
            return Failure(run.stats(False))
        paths = new_paths
        run.queries += 1


def brute_force_schedule(
    paths: list[Path],
    models: list[RobotModel],
    resolution: float,
    cap: int = 12,
) -> CandidateSolution | None:
    """Exhaustively try every move placement; first valid schedule or None.

    Only intended as a test oracle on tiny instances; raises
    CapExceededError when the combined path length exceeds ``cap``.
    """
    total = sum(len(p) for p in paths)
    if total > cap:
        raise CapExceededError(f"combined path length {total} exceeds cap {cap}")
    num_transitions = total - 1
    cache = SweepCache(paths, models, resolution, conservative=True)
    per_robot = [
        itertools.combinations(range(num_transitions), len(p) - 1) for p in paths
    ]
    seen: set[tuple] = set()
    for assignment in itertools.product(*per_robot):
        rows = []
        for t in range(num_transitions):
            rows.append(tuple(1 if t in moves else 0 for moves in assignment))
        candidate = _candidate_from_move_rows(rows, len(paths))
        if candidate.progress in seen:
            continue
        seen.add(candidate.progress)
        if not collision_check(candidate, paths, models, resolution, cache):
            return candidate
    return None


def validate_solution(
    paths: list[Path],
    candidate: CandidateSolution,
    models: list[RobotModel],
    resolution: float,
    starts=None,
    goal_sets=None,
) -> list[str]:
    """Independent solution audit; returns a list of violations (empty = valid).

    Re-runs the collision check at twice the sweep resolution and checks
    monotone progress, the schedule length bound, and endpoint conditions.
    """
    problems = []
    lengths = [len(p) for p in paths]
    first, last = candidate.progress[0], candidate.progress[-1]
    if any(v != 0 for v in first):
        problems.append(f"initial progress row is not all zero: {first}")
    for r, (v, n) in enumerate(zip(last, lengths)):
        if v != n - 1:
            problems.append(f"robot {r} ends at index {v}, path has {n} vertices")
    for t in range(candidate.num_timesteps - 1):
        deltas = [b - a for a, b in zip(candidate.progress[t], candidate.progress[t + 1])]
        if any(d not in (0, 1) for d in deltas):
            problems.append(f"non-unit progress increment at transition {t}: {deltas}")
        if all(d == 0 for d in deltas):
            problems.append(f"all-stop (trivial) transition at {t}")
    if not (max(lengths) <= candidate.num_timesteps <= sum(lengths)):
        problems.append(
            f"schedule length {candidate.num_timesteps} outside "
            f"[{max(lengths)}, {sum(lengths)}]"
        )
    if starts is not None:
        for r, (path, start) in enumerate(zip(paths, starts)):
            if models[r].distance(path.configs[0], start) != 0.0:
                problems.append(f"robot {r} path does not begin at its start")
    if goal_sets is not None:
        for r, (path, goals) in enumerate(zip(paths, goal_sets)):
            if all(models[r].distance(path.configs[-1], g) != 0.0 for g in goals):
                problems.append(f"robot {r} path does not end in its goal set")
    events = collision_check(candidate, paths, models, resolution / 2.0)
    if events:
        problems.append(f"{len(events)} collision events at double resolution")
    return problems


def solve(scenario, planner: str, params: StacParams) -> Solution | Failure:
    """Dispatch by planner name: 'stac', 'sync', or 'priority'."""
    if planner == "stac":
        return stac_solve(scenario, params)
    if planner == "sync":
        return synchronous_solve(scenario, params)
    if planner == "priority":
        return priority_solve(scenario, params)
    raise ValueError(f"unknown planner '{planner}'")
