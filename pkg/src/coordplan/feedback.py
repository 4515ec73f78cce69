"""Collision accounting and experience-driven replanning.

Each robot keeps one conflict counter per path edge during a scheduling
round. When rescheduling gives up, the normalized counters and the path
join the robot's collision history; future replans pick a history
element by weighted sampling, extract a contested path region with a
counter-biased random walk, and splice a detour through a freshly
sampled configuration around that region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constraints import NonConvergenceError, project
from .roadmap import NoPathError, Path, Roadmap
from .scheduler import CollisionEvent


@dataclass
class CollisionRecord:
    """Per-path-edge conflict counters; one slot per edge."""

    counts: list[int]

    @classmethod
    def for_path(cls, path: Path) -> CollisionRecord:
        return cls([0] * path.num_edges)


def record_collision(
    records: list[CollisionRecord], events: list[CollisionEvent]
) -> list[CollisionRecord]:
    """Increment each robot's counter for every event edge it was moving on."""
    for event in events:
        i, j = event.robot_pair
        if event.edge_i is not None:
            records[i].counts[event.edge_i] += 1
        if event.edge_j is not None:
            records[j].counts[event.edge_j] += 1
    return records


def normalize(record: CollisionRecord) -> list[float]:
    """Add-one-smoothed share of collisions per edge; positive, sums to 1."""
    smoothed = [c + 1 for c in record.counts]
    total = sum(smoothed)
    return [s / total for s in smoothed]


@dataclass
class HistoryElement:
    """A past path with its normalized collision record.

    The root element (null path) stands for planning from scratch.
    """

    path: Path | None
    normalized: list[float] | None
    cost: float
    selections: int = 0


class CollisionHistory:
    """Archive of (path, normalized record) elements; element 0 is the root."""

    def __init__(self) -> None:
        self.elements: list[HistoryElement] = [HistoryElement(None, None, 0.0)]

    def add(self, path: Path, normalized: list[float]) -> HistoryElement:
        element = HistoryElement(path, normalized, path.cost)
        self.elements.append(element)
        return element

    def __len__(self) -> int:
        return len(self.elements)


def select_element(
    history: CollisionHistory, rng, p_root: float, a: float = 1.0, b: float = 0.5
) -> HistoryElement:
    """Weighted draw from the history.

    The root is taken with probability ``p_root``; otherwise element e is
    drawn with probability proportional to exp(-a * cost(e) / min_cost -
    b * selections(e)), preferring cheap, rarely reused paths. The chosen
    element's selection counter is incremented.
    """
    non_root = history.elements[1:]
    if not non_root or rng.random() < p_root:
        chosen = history.elements[0]
    else:
        min_cost = min(e.cost for e in non_root)
        exponents = []
        for e in non_root:
            relative_cost = e.cost / min_cost if min_cost > 0.0 else 1.0
            exponents.append(-a * relative_cost - b * e.selections)
        # Shift by the max exponent so heavily reused histories cannot
        # underflow every weight to zero; ratios are unchanged.
        top = max(exponents)
        weights = [math.exp(x - top) for x in exponents]
        chosen = rng.choices(non_root, weights=weights)[0]
    chosen.selections += 1
    return chosen


def walk_steps(num_edges: int) -> int:
    """Default random-walk length for a record with the given edge count."""
    return max(3, math.ceil(num_edges / 4))


def random_walk_region(normalized: list[float], k: int, rng) -> tuple[int, int]:
    """Counter-biased random walk over edge indices.

    Starts uniformly, walks k steps (left with probability proportional
    to the left neighbour's record, forced inward at the ends), and
    returns the lowest and highest edge index visited. The region spans
    path vertices edge_lo .. edge_hi + 1.
    """
    m = len(normalized)
    if m == 0:
        raise ValueError("empty collision record")
    idx = rng.randrange(m)
    lo = hi = idx
    if m == 1:
        return (0, 0)
    for _ in range(k):
        if idx == 0:
            idx = 1
        elif idx == m - 1:
            idx = m - 2
        else:
            left, right = normalized[idx - 1], normalized[idx + 1]
            idx = idx - 1 if rng.random() < left / (left + right) else idx + 1
        lo = min(lo, idx)
        hi = max(hi, idx)
    return (lo, hi)


def plan_with_experience(
    roadmap: Roadmap,
    history: CollisionHistory,
    rng,
    p_root: float = 0.2,
    a: float = 1.0,
    b: float = 0.5,
    perturb: float = 0.3,
    detour_retries: int = 30,
) -> Path:
    """Replan using the collision history.

    Root selection (or any detour failure) falls back to a fresh
    perturbed roadmap query. Otherwise a contested region (c1, c2) of the
    selected path is bypassed through a newly sampled detour vertex and
    the result is spliced into a copy of that path; spliced paths may
    revisit vertices, which keeps every path reachable.
    """
    element = select_element(history, rng, p_root, a, b)
    path = element.path
    if path is None or path.num_edges < 1:
        return roadmap.plan(roadmap.start_id, roadmap.goal_ids, rng, perturb)

    lo, hi = random_walk_region(element.normalized, walk_steps(path.num_edges), rng)
    c1_pos, c2_pos = lo, hi + 1
    c1, c2 = path.vertex_ids[c1_pos], path.vertex_ids[c2_pos]

    for _ in range(detour_retries):
        raw = roadmap.model.sample_uniform(rng, roadmap.world)
        try:
            detour = project(roadmap.constraint, roadmap.model, raw)
        except NonConvergenceError:
            continue
        if not roadmap.config_is_valid(detour):
            continue
        detour_id = roadmap.insert_vertex(detour)
        try:
            to_detour = roadmap.plan(c1, [detour_id], rng, perturb)
            from_detour = roadmap.plan(detour_id, [c2], rng, perturb)
        except NoPathError:
            continue
        spliced = (
            path.vertex_ids[:c1_pos]
            + to_detour.vertex_ids
            + from_detour.vertex_ids[1:]
            + path.vertex_ids[c2_pos + 1 :]
        )
        return roadmap.make_path(spliced)

    return roadmap.plan(roadmap.start_id, roadmap.goal_ids, rng, perturb)
