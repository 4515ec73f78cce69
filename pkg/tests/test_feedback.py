"""Collision records, history sampling, random walk, and detour replanning."""

import math
import random
from collections import Counter

import pytest

from coordplan.constraints import Unconstrained
from coordplan.feedback import (
    CollisionHistory,
    CollisionRecord,
    HistoryElement,
    normalize,
    plan_with_experience,
    random_walk_region,
    record_collision,
    select_element,
    walk_steps,
)
from coordplan.geometry import Disc, Rect, World
from coordplan.roadmap import RoadmapParams, build_roadmap
from coordplan.scheduler import CollisionEvent

DISC = Disc(0.2)


def test_record_collision_stopped_robot_not_counted():
    # One robot stopped, the other moving on its second edge: only the
    # mover's counter ticks, e.g. from 25 to 26.
    records = [CollisionRecord([0, 0]), CollisionRecord([0, 25, 0])]
    events = [CollisionEvent(3, (0, 1), None, 1, 0.5)]
    record_collision(records, events)
    assert records[0].counts == [0, 0]
    assert records[1].counts == [0, 26, 0]


def test_record_collision_empty_events():
    records = [CollisionRecord([1, 2]), CollisionRecord([3])]
    record_collision(records, [])
    assert records[0].counts == [1, 2] and records[1].counts == [3]


def test_record_collision_replay_oracle():
    rng = random.Random(31)
    for _ in range(200):
        sizes = [rng.randint(1, 5) for _ in range(3)]
        records = [CollisionRecord([0] * s) for s in sizes]
        events = []
        for _ in range(rng.randint(0, 12)):
            i, j = sorted(rng.sample(range(3), 2))
            edge_i = rng.choice([None, rng.randrange(sizes[i])])
            edge_j = rng.choice([None, rng.randrange(sizes[j])])
            events.append(CollisionEvent(rng.randrange(6), (i, j), edge_i, edge_j, rng.random()))
        record_collision(records, events)
        expected = [[0] * s for s in sizes]
        present_edges = 0
        for e in events:
            if e.edge_i is not None:
                expected[e.robot_pair[0]][e.edge_i] += 1
                present_edges += 1
            if e.edge_j is not None:
                expected[e.robot_pair[1]][e.edge_j] += 1
                present_edges += 1
        assert [r.counts for r in records] == expected
        assert sum(sum(r.counts) for r in records) == present_edges


def test_normalize_examples():
    assert normalize(CollisionRecord([0, 0, 0])) == pytest.approx([1 / 3] * 3)
    assert normalize(CollisionRecord([9, 0])) == pytest.approx([10 / 11, 1 / 11])
    assert normalize(CollisionRecord([3, 3, 3, 3])) == pytest.approx([0.25] * 4)


def test_normalize_properties_random():
    rng = random.Random(32)
    for _ in range(300):
        counts = [rng.randint(0, 50) for _ in range(rng.randint(1, 8))]
        result = normalize(CollisionRecord(counts))
        assert all(v > 0 for v in result)
        assert sum(result) == pytest.approx(1.0, abs=1e-12)
        assert all(
            result[i] <= result[j] + 1e-15
            for i in range(len(counts))
            for j in range(len(counts))
            if counts[i] <= counts[j]
        )


def _fixed_history(costs_selections):
    history = CollisionHistory()
    for cost, selections in costs_selections:
        element = HistoryElement(None, [1.0], cost, selections)
        history.elements.append(element)
    return history


def test_select_element_root_only():
    history = CollisionHistory()
    rng = random.Random(33)
    for _ in range(50):
        assert select_element(history, rng, p_root=0.0) is history.elements[0]


def test_select_element_frequency_matches_weight_ratio():
    # Equal costs, selections (0, 5), b = 0.5: the fresh element wins with
    # probability 1 / (1 + exp(-2.5)).
    expected = 1.0 / (1.0 + math.exp(-2.5))
    history = _fixed_history([(2.0, 0), (2.0, 5)])
    rng = random.Random(34)
    hits = 0
    draws = 100_000
    for _ in range(draws):
        chosen = select_element(history, rng, p_root=0.0, a=1.0, b=0.5)
        if chosen is history.elements[1]:
            hits += 1
        chosen.selections -= 1  # keep the weights fixed for the measurement
    assert hits / draws == pytest.approx(expected, abs=0.01)


def test_select_element_degenerate_weights_uniform():
    history = _fixed_history([(1.0, 0), (5.0, 3), (9.0, 7)])
    rng = random.Random(35)
    counts = Counter()
    draws = 100_000
    for _ in range(draws):
        chosen = select_element(history, rng, p_root=0.0, a=0.0, b=0.0)
        counts[id(chosen)] += 1
        chosen.selections -= 1
    for element in history.elements[1:]:
        assert counts[id(element)] / draws == pytest.approx(1 / 3, abs=0.01)


def test_select_element_root_probability():
    history = _fixed_history([(1.0, 0)])
    rng = random.Random(36)
    hits = sum(
        select_element(history, rng, p_root=0.3) is history.elements[0] for _ in range(100_000)
    )
    assert hits / 100_000 == pytest.approx(0.3, abs=0.01)


def test_select_element_increments_selections():
    history = _fixed_history([(1.0, 0)])
    rng = random.Random(37)
    select_element(history, rng, p_root=0.0)
    assert history.elements[1].selections == 1


def exact_region_distribution(record, k):
    """Enumerate the random walk exactly: P(region == (lo, hi))."""
    m = len(record)
    states = {(s, s, s): 1.0 / m for s in range(m)}
    for _ in range(k):
        nxt = {}
        for (idx, lo, hi), p in states.items():
            if m == 1:
                moves = [(0, 1.0)]
            elif idx == 0:
                moves = [(1, 1.0)]
            elif idx == m - 1:
                moves = [(m - 2, 1.0)]
            else:
                left, right = record[idx - 1], record[idx + 1]
                moves = [(idx - 1, left / (left + right)), (idx + 1, right / (left + right))]
            for j, q in moves:
                key = (j, min(lo, j), max(hi, j))
                nxt[key] = nxt.get(key, 0.0) + p * q
        states = nxt
    regions = {}
    for (idx, lo, hi), p in states.items():
        regions[(lo, hi)] = regions.get((lo, hi), 0.0) + p
    return regions


def test_walk_single_edge():
    rng = random.Random(38)
    for _ in range(20):
        assert random_walk_region([1.0], 5, rng) == (0, 0)


def test_walk_zero_steps_uniform_start():
    rng = random.Random(39)
    counts = Counter()
    draws = 100_000
    for _ in range(draws):
        region = random_walk_region([0.2] * 5, 0, rng)
        assert region[0] == region[1]
        counts[region[0]] += 1
    for edge in range(5):
        assert counts[edge] / draws == pytest.approx(0.2, abs=0.01)


def test_walk_matches_exact_enumeration():
    record = [1.0, 1.0, 100.0, 1.0, 1.0]
    k = 4
    exact = exact_region_distribution(record, k)
    exact_contains_2 = sum(p for (lo, hi), p in exact.items() if lo <= 2 <= hi)
    rng = random.Random(40)
    draws = 100_000
    hits = Counter()
    contains_2 = 0
    for _ in range(draws):
        region = random_walk_region(record, k, rng)
        hits[region] += 1
        if region[0] <= 2 <= region[1]:
            contains_2 += 1
    assert contains_2 / draws == pytest.approx(exact_contains_2, abs=0.01)
    for region, p in exact.items():
        assert hits[region] / draws == pytest.approx(p, abs=0.01)


def test_every_edge_reachable_by_walk():
    rng = random.Random(41)
    for m in range(1, 7):
        for _ in range(5):
            record = [rng.uniform(0.01, 10.0) for _ in range(m)]
            exact = exact_region_distribution(record, walk_steps(m))
            for edge in range(m):
                covered = sum(p for (lo, hi), p in exact.items() if lo <= edge <= hi)
                assert covered > 0.0


def _empty_world_roadmap(seed, num_samples=40, k_nearest=8):
    rng = random.Random(seed)
    world = World(Rect(0, 0, 4, 4))
    rm = build_roadmap(
        world,
        DISC,
        Unconstrained(),
        DISC.config((0.5, 2.0)),
        [DISC.config((3.5, 2.0))],
        RoadmapParams(num_samples, k_nearest, 0.1),
        rng,
    )
    return rm, rng


def test_plan_with_experience_root_only_equals_plan():
    # With only the root element no selection draw happens, so the call
    # is exactly one perturbed roadmap query.
    rm_a, _ = _empty_world_roadmap(seed=50)
    rm_b, _ = _empty_world_roadmap(seed=50)
    got = plan_with_experience(rm_a, CollisionHistory(), random.Random(7), perturb=0.3)
    expected = rm_b.plan(rm_b.start_id, rm_b.goal_ids, random.Random(7), perturb=0.3)
    assert got.vertex_ids == expected.vertex_ids


def test_plan_with_experience_splice_structure(monkeypatch):
    rm, _ = _empty_world_roadmap(seed=51, num_samples=0)
    chain = [rm.insert_vertex(DISC.config((x, 2.0))) for x in (1.2, 2.0, 2.8)]
    base = rm.make_path([rm.start_id, *chain, rm.goal_ids[0]])
    assert base.num_edges == 4
    history = CollisionHistory()
    history.add(base, normalize(CollisionRecord([0] * base.num_edges)))
    monkeypatch.setattr("coordplan.feedback.random_walk_region", lambda *_: (1, 1))
    old_vertex_count = len(rm.vertices)
    spliced = plan_with_experience(rm, history, random.Random(52), p_root=0.0)
    # region edge 1 spans path positions 1..2; prefix and suffix survive
    assert spliced.vertex_ids[:2] == base.vertex_ids[:2]
    assert spliced.vertex_ids[-3:] == base.vertex_ids[2:]
    new_ids = [v for v in spliced.vertex_ids if v >= old_vertex_count]
    assert new_ids  # the detour vertex appears
    assert spliced.configs[0] == base.configs[0]
    assert spliced.configs[-1] == base.configs[-1]


def test_plan_with_experience_detour_failure_falls_back():
    # Free space is a sliver: uniform detour samples virtually never land
    # in it, so all 30 retries fail and the root behaviour is returned.
    rng = random.Random(53)
    world = World(Rect(0, 0, 10, 10), (Rect(0.0, 0.301, 10.0, 10.0),))
    disc = Disc(0.15)
    rm = build_roadmap(
        world,
        disc,
        Unconstrained(),
        disc.config((0.5, 0.15)),
        [disc.config((9.5, 0.15))],
        RoadmapParams(0, 8, 0.1),
        rng,
    )
    base = rm.plan(rm.start_id, rm.goal_ids)
    history = CollisionHistory()
    history.add(base, [1.0])
    path = plan_with_experience(rm, history, rng, p_root=0.0)
    assert path.vertex_ids[0] == rm.start_id
    assert path.vertex_ids[-1] in rm.goal_ids


def test_repeated_replanning_reaches_extra_vertex():
    # With loops allowed, repeated experience-based replanning must
    # eventually route through any roadmap vertex.
    found_count = 0
    for seed in range(100):
        rng = random.Random(seed)
        world = World(Rect(0, 0, 4, 4))
        rm = build_roadmap(
            world,
            DISC,
            Unconstrained(),
            DISC.config((0.5, 2.0)),
            [DISC.config((3.5, 2.0))],
            RoadmapParams(0, 2, 0.1),
            rng,
        )
        extra = rm.insert_vertex(DISC.config((2.0, 2.6)))
        history = CollisionHistory()
        history.add(rm.plan(rm.start_id, rm.goal_ids), [1.0])
        for _ in range(500):
            path = plan_with_experience(rm, history, rng)
            if extra in path.vertex_ids:
                found_count += 1
                break
    assert found_count >= 95


def test_walk_steps_policy():
    assert walk_steps(1) == 3
    assert walk_steps(12) == 3
    assert walk_steps(13) == 4
    assert walk_steps(40) == 10
