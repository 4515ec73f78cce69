"""Per-robot constrained probabilistic roadmaps.

A roadmap samples configurations, projects them onto the robot's
constraint manifold, validates them against the world, and connects
nearby vertices with cached constraint-satisfying interpolations. Path
queries run Dijkstra with optional random edge-weight perturbation so
repeated queries return diverse near-shortest paths from one persistent
roadmap.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import (
    DiscontinuityError,
    ManifoldConstraint,
    NonConvergenceError,
    Unconstrained,
    constrained_interpolate,
    evaluate,
    project,
)
from .geometry import (
    Configuration,
    Disc,
    RobotModel,
    World,
    robot_world_collision,
    swept_disc_collision,
)


class NoPathError(RuntimeError):
    """Start and goal lie in different roadmap components."""


class InvalidConfigurationError(ValueError):
    """Configuration violates the constraint or collides with the world."""


@dataclass(frozen=True)
class RoadmapParams:
    num_samples: int = 300
    k_nearest: int = 8
    step: float = 0.05

    def __post_init__(self) -> None:
        if self.num_samples < 0 or self.k_nearest < 1 or self.step <= 0.0:
            raise ValueError(f"invalid roadmap parameters: {self}")


@dataclass(frozen=True)
class Edge:
    length: float
    waypoints: tuple[Configuration, ...]  # oriented from the lower vertex id


@dataclass
class Path:
    """Vertex sequence through a roadmap; repeats are permitted.

    ``edge_waypoints[k]`` caches the validated interpolation from
    ``configs[k]`` to ``configs[k + 1]`` oriented along the traversal.
    """

    vertex_ids: list[int]
    configs: list[Configuration]
    cost: float
    edge_waypoints: list[tuple[Configuration, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.configs)

    @property
    def num_edges(self) -> int:
        return len(self.configs) - 1


class Roadmap:
    """Constrained PRM for a single robot."""

    def __init__(
        self,
        world: World,
        model: RobotModel,
        constraint: ManifoldConstraint,
        params: RoadmapParams,
    ) -> None:
        self.world = world
        self.model = model
        self.constraint = constraint
        self.params = params
        self.vertices: list[Configuration] = []
        self.adj: list[dict[int, float]] = []
        self.edges: dict[tuple[int, int], Edge] = {}
        self.start_id: int = 0
        self.goal_ids: list[int] = []

    # -- construction -----------------------------------------------------

    def config_is_valid(self, q: Configuration) -> bool:
        residual = evaluate(self.constraint, self.model, q)
        if residual.size and np.abs(residual).max() > self.constraint.tolerance:
            return False
        return not robot_world_collision(self.model, q, self.world)

    def _add_vertex(self, q: Configuration) -> int:
        self.vertices.append(q)
        self.adj.append({})
        return len(self.vertices) - 1

    def _add_edge(self, i: int, j: int, waypoints: tuple[Configuration, ...]) -> None:
        lo, hi = (i, j) if i < j else (j, i)
        if lo == hi or (lo, hi) in self.edges:
            return
        length = sum(
            self.model.distance(a, b) for a, b in zip(waypoints, waypoints[1:])
        )
        oriented = waypoints if i < j else tuple(reversed(waypoints))
        self.edges[(lo, hi)] = Edge(length, oriented)
        self.adj[i][j] = length
        self.adj[j][i] = length

    def _try_edge(self, i: int, j: int) -> tuple[Configuration, ...] | None:
        a, b = self.vertices[i], self.vertices[j]
        if isinstance(self.model, Disc) and isinstance(self.constraint, Unconstrained):
            # A straight disc motion is exactly a capsule; test it whole.
            if swept_disc_collision((a[0], a[1]), (b[0], b[1]), self.model.radius, self.world):
                return None
            return tuple(
                constrained_interpolate(self.constraint, self.model, a, b, self.params.step)
            )
        try:
            waypoints = constrained_interpolate(self.constraint, self.model, a, b, self.params.step)
        except (NonConvergenceError, DiscontinuityError):
            return None
        for q in waypoints[1:-1]:
            if robot_world_collision(self.model, q, self.world):
                return None
        return tuple(waypoints)

    def insert_vertex(self, q: Configuration, k_nearest: int | None = None) -> int:
        """Add a validated vertex and connect it to its nearest neighbours."""
        if not self.config_is_valid(q):
            raise InvalidConfigurationError("configuration is constraint-violating or in collision")
        k = self.params.k_nearest if k_nearest is None else k_nearest
        neighbours = sorted(
            (self.model.distance(q, v), vid)
            for vid, v in enumerate(self.vertices)
        )
        new_id = self._add_vertex(q)
        for dist, vid in neighbours[:k]:
            if dist == 0.0:
                continue
            waypoints = self._try_edge(new_id, vid)
            if waypoints is not None:
                self._add_edge(new_id, vid, waypoints)
        return new_id

    # -- queries ----------------------------------------------------------

    def plan(
        self, start_id: int, goal_ids: list[int], rng=None, perturb: float = 0.0
    ) -> Path:
        """Shortest path under randomly perturbed edge weights.

        Each undirected edge weight is scaled by an independent factor
        drawn uniformly from [1, 1 + perturb]; perturb = 0 is the plain
        deterministic shortest path.
        """
        goals = set(goal_ids)
        if start_id in goals:
            q = self.vertices[start_id]
            return Path([start_id], [q], 0.0, [])

        factors: dict[tuple[int, int], float] = {}
        if perturb > 0.0:
            if rng is None:
                raise ValueError("perturbed planning requires an rng")
            for key in sorted(self.edges):
                factors[key] = rng.uniform(1.0, 1.0 + perturb)

        dist = {start_id: 0.0}
        prev: dict[int, int] = {}
        heap = [(0.0, start_id)]
        settled: set[int] = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in settled:
                continue
            settled.add(u)
            if goals <= settled:
                break
            for v, length in self.adj[u].items():
                key = (u, v) if u < v else (v, u)
                w = length * factors.get(key, 1.0)
                nd = d + w
                if v not in dist or nd < dist[v]:
                    dist[v] = nd
                    prev[v] = u
                    heapq.heappush(heap, (nd, v))

        reachable = [g for g in goals if g in dist]
        if not reachable:
            raise NoPathError(f"no route from vertex {start_id} to goals {sorted(goals)}")
        best = min(reachable, key=lambda g: (dist[g], g))
        ids = [best]
        while ids[-1] != start_id:
            ids.append(prev[ids[-1]])
        ids.reverse()
        return self.make_path(ids)

    def make_path(self, vertex_ids: list[int]) -> Path:
        """Assemble a Path along existing roadmap edges."""
        configs = [self.vertices[i] for i in vertex_ids]
        waypoints = []
        cost = 0.0
        for u, v in zip(vertex_ids, vertex_ids[1:]):
            waypoints.append(self.edge_waypoints(u, v))
            cost += self.edges[(u, v) if u < v else (v, u)].length
        return Path(list(vertex_ids), configs, cost, waypoints)

    def edge_waypoints(self, u: int, v: int) -> tuple[Configuration, ...]:
        edge = self.edges.get((u, v) if u < v else (v, u))
        if edge is None:
            raise KeyError(f"no roadmap edge between {u} and {v}")
        return edge.waypoints if u < v else tuple(reversed(edge.waypoints))

    def path_is_valid(self, path: Path) -> bool:
        """Check the structural path invariants against this roadmap."""
        if len(path) < 1 or len(path.configs) != len(path.vertex_ids):
            return False
        for u, v in zip(path.vertex_ids, path.vertex_ids[1:]):
            if ((u, v) if u < v else (v, u)) not in self.edges:
                return False
        return all(
            self.vertices[i] == q for i, q in zip(path.vertex_ids, path.configs)
        )


def build_roadmap(
    world: World,
    model: RobotModel,
    constraint: ManifoldConstraint,
    start: Configuration,
    goals: list[Configuration],
    params: RoadmapParams,
    rng,
    deadline: float | None = None,
    clock=None,
) -> Roadmap:
    """Sample, project, validate, and connect a roadmap.

    The start and every goal configuration are always inserted. Sampling
    stops early when ``deadline`` (per ``clock()``) passes; the roadmap is
    still returned and under-connection surfaces later as plan failure.
    """
    if clock is None:
        clock = time.monotonic
    rm = Roadmap(world, model, constraint, params)
    rm.start_id = rm.insert_vertex(start)
    rm.goal_ids = []
    for goal in goals:
        existing = next(
            (vid for vid, v in enumerate(rm.vertices) if model.distance(goal, v) == 0.0), None
        )
        rm.goal_ids.append(existing if existing is not None else rm.insert_vertex(goal))

    accepted = 0
    attempts = 0
    max_attempts = 50 * params.num_samples
    while accepted < params.num_samples and attempts < max_attempts:
        if deadline is not None and clock() > deadline:
            break
        attempts += 1
        raw = model.sample_uniform(rng, world)
        try:
            q = project(constraint, model, raw)
        except NonConvergenceError:
            continue
        if not rm.config_is_valid(q):
            continue
        rm.insert_vertex(q)
        accepted += 1
    return rm
