"""Coordination-space scheduling over fixed per-robot paths.

A candidate solution discretizes time so that on every transition each
robot either advances to its next path vertex or stops. The stop
sampler places each robot's moves uniformly at random among the shared
transitions; the priority sampler runs robots to their goals in a random
sequential order. Transitions where every robot stops are trivial and
removed. Collision checking sweeps the cached edge interpolations with
a displacement-bounded sample spacing and memoizes pairwise results,
since rescheduling reuses the same paths many times.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .geometry import BodyGeometry, RobotModel, bodies_collide, forward_kinematics
from .roadmap import Path


@dataclass(frozen=True)
class CandidateSolution:
    """Per-robot monotone path-progress indices for each timestep."""

    progress: tuple[tuple[int, ...], ...]

    @property
    def num_timesteps(self) -> int:
        return len(self.progress)

    @property
    def num_robots(self) -> int:
        return len(self.progress[0])

    def moves(self, transition: int) -> tuple[bool, ...]:
        row, nxt = self.progress[transition], self.progress[transition + 1]
        return tuple(b > a for a, b in zip(row, nxt))


@dataclass(frozen=True)
class CollisionEvent:
    """One robot-robot conflict on one transition.

    ``edge_i``/``edge_j`` give each robot's current path-edge index and
    are absent for stopped robots (statically overlapping stopped pairs
    are attributed to the most recently traversed edges instead).
    """

    transition: int
    robot_pair: tuple[int, int]
    edge_i: int | None
    edge_j: int | None
    lam: float


def _candidate_from_move_rows(rows: list[tuple[int, ...]], num_robots: int) -> CandidateSolution:
    """Build progress indices from per-transition move flags, dropping all-stop rows."""
    progress = [tuple([0] * num_robots)]
    for flags in rows:
        if not any(flags):
            continue
        progress.append(tuple(p + f for p, f in zip(progress[-1], flags)))
    return CandidateSolution(tuple(progress))


def schedule(paths: list[Path], rng) -> CandidateSolution:
    """Sample a schedule by placing random stops between path vertices.

    Time is discretized into L = sum of path lengths steps; each robot
    receives a uniformly random subset of the L - 1 transitions as its
    moves (equivalently, L - |p| stops), consuming its edges in order.
    """
    lengths = [len(p) for p in paths]
    num_transitions = sum(lengths) - 1
    rows: list[list[int]] = [[0] * len(paths) for _ in range(num_transitions)]
    for r, length in enumerate(lengths):
        for t in rng.sample(range(num_transitions), length - 1):
            rows[t][r] = 1
    return _candidate_from_move_rows([tuple(row) for row in rows], len(paths))


def schedule_priority(paths: list[Path], rng) -> CandidateSolution:
    """Robots traverse their full paths sequentially in a random order."""
    order = list(range(len(paths)))
    rng.shuffle(order)
    rows: list[tuple[int, ...]] = []
    for r in order:
        for _ in range(len(paths[r]) - 1):
            flags = [0] * len(paths)
            flags[r] = 1
            rows.append(tuple(flags))
    return _candidate_from_move_rows(rows, len(paths))


def default_resolution(models: list[RobotModel]) -> float:
    """Conservative sweep spacing: half the smallest body radius."""
    return min(m.min_body_radius for m in models) / 2.0


class SweepCache:
    """Memoized pairwise motion sweeps for one fixed set of paths.

    Valid only while the given paths stay unchanged; the planner creates
    a fresh cache per scheduling round.

    In conservative mode a transition only counts as clear when every
    sample keeps a spare clearance of half the relative displacement per
    sample step. That bounds the distance dip between samples, so a
    candidate accepted conservatively stays collision-free under any
    finer resampling (exact continuous checking stays out of scope).
    """

    def __init__(
        self,
        paths: list[Path],
        models: list[RobotModel],
        resolution: float,
        conservative: bool = False,
    ):
        if resolution <= 0.0:
            raise ValueError("resolution must be positive")
        self.paths = paths
        self.models = models
        self.resolution = resolution
        self.conservative = conservative
        self._arcs: dict[tuple[int, int], tuple[list[float], float]] = {}
        self._bodies: dict[tuple, BodyGeometry] = {}
        self._pairs: dict[tuple, tuple[bool, float]] = {}

    def _arc_table(self, r: int, e: int) -> tuple[list[float], float]:
        key = (r, e)
        table = self._arcs.get(key)
        if table is None:
            wps = self.paths[r].edge_waypoints[e]
            model = self.models[r]
            cum = [0.0]
            for a, b in zip(wps, wps[1:]):
                cum.append(cum[-1] + model.distance(a, b))
            table = (cum, cum[-1])
            self._arcs[key] = table
        return table

    def _body_on_edge(self, r: int, e: int, lam: float) -> BodyGeometry:
        key = (r, e, lam)
        body = self._bodies.get(key)
        if body is None:
            cum, total = self._arc_table(r, e)
            wps = self.paths[r].edge_waypoints[e]
            if total == 0.0:
                q = wps[0]
            else:
                s = lam * total
                k = min(bisect_right(cum, s), len(cum) - 1) - 1
                seg = cum[k + 1] - cum[k]
                t = (s - cum[k]) / seg if seg > 0.0 else 0.0
                q = self.models[r].interpolate(wps[k], wps[k + 1], t)
            body = forward_kinematics(self.models[r], q)
            self._bodies[key] = body
        return body

    def _body_at_vertex(self, r: int, v: int) -> BodyGeometry:
        key = (r, v)
        body = self._bodies.get(key)
        if body is None:
            body = forward_kinematics(self.models[r], self.paths[r].configs[v])
            self._bodies[key] = body
        return body

    def _swept_amount(self, r: int, e: int) -> float:
        _, total = self._arc_table(r, e)
        return total * self.models[r].point_speed_factor

    def sweep_pair(
        self, i: int, pi: int, move_i: bool, j: int, pj: int, move_j: bool
    ) -> tuple[bool, float]:
        """First collision between robots i and j over one transition.

        ``pi``/``pj`` are the robots' progress indices at the transition
        start; a moving robot traverses that path edge, a stopped robot
        holds that vertex. Returns (collides, first colliding fraction).
        """
        key = (i, pi, move_i, j, pj, move_j)
        cached = self._pairs.get(key)
        if cached is not None:
            return cached

        if not move_i and not move_j:
            hit = bodies_collide(self._body_at_vertex(i, pi), self._body_at_vertex(j, pj))
            result = (hit, 0.0)
        else:
            swept_i = self._swept_amount(i, pi) if move_i else 0.0
            swept_j = self._swept_amount(j, pj) if move_j else 0.0
            n = max(1, math.ceil(max(swept_i, swept_j) / self.resolution))
            margin = 0.5 * (swept_i + swept_j) / n if self.conservative else 0.0
            result = (False, 0.0)
            for k in range(n + 1):
                lam = k / n
                body_i = self._body_on_edge(i, pi, lam) if move_i else self._body_at_vertex(i, pi)
                body_j = self._body_on_edge(j, pj, lam) if move_j else self._body_at_vertex(j, pj)
                if bodies_collide(body_i, body_j, margin):
                    result = (True, lam)
                    break
        self._pairs[key] = result
        return result


def collision_check(
    candidate: CandidateSolution,
    paths: list[Path],
    models: list[RobotModel],
    resolution: float,
    cache: SweepCache | None = None,
    conservative: bool = False,
) -> list[CollisionEvent]:
    """All pairwise conflicts in a candidate; empty means valid solution.

    One event is reported per (transition, robot pair) that collides at
    any synchronized sweep sample, carrying the first colliding fraction
    and each moving robot's path-edge index. With ``conservative`` set
    (or a conservative cache), between-sample near-misses count as
    conflicts too, so an empty result certifies the continuous motion.
    """
    if cache is None:
        cache = SweepCache(paths, models, resolution, conservative)
    events: list[CollisionEvent] = []
    num_robots = len(paths)
    for t in range(candidate.num_timesteps - 1):
        row = candidate.progress[t]
        moves = candidate.moves(t)
        for i in range(num_robots):
            for j in range(i + 1, num_robots):
                hit, lam = cache.sweep_pair(i, row[i], moves[i], j, row[j], moves[j])
                if not hit:
                    continue
                edge_i = row[i] if moves[i] else (row[i] - 1 if row[i] > 0 else None)
                edge_j = row[j] if moves[j] else (row[j] - 1 if row[j] > 0 else None)
                if not moves[i] and not moves[j]:
                    # Statically overlapping stopped pair: attribute to the
                    # most recently traversed edges so feedback still flows.
                    events.append(CollisionEvent(t, (i, j), edge_i, edge_j, lam))
                else:
                    events.append(
                        CollisionEvent(
                            t,
                            (i, j),
                            edge_i if moves[i] else None,
                            edge_j if moves[j] else None,
                            lam,
                        )
                    )
    return events
