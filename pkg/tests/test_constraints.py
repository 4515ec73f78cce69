"""Constraint residuals, Jacobians, projection, and interpolation tests."""

import math
import random

import numpy as np
import pytest

from coordplan.constraints import (
    DiscontinuityError,
    EndEffectorLine,
    NonConvergenceError,
    Unconstrained,
    constrained_interpolate,
    evaluate,
    jacobian,
    project,
)
from coordplan.geometry import Disc, PlanarArm

ARM1 = PlanarArm(base=(0.0, 0.0), link_lengths=(1.0,), link_radius=0.05)
ARM2 = PlanarArm(base=(0.0, 0.0), link_lengths=(1.0, 1.0), link_radius=0.05)
ARM3 = PlanarArm(base=(0.2, -0.1), link_lengths=(0.8, 0.6, 0.5), link_radius=0.04)
LINE = EndEffectorLine(line_y=0.0)


def test_evaluate_unconstrained_empty():
    assert evaluate(Unconstrained(), ARM2, ARM2.config([0.1, 0.2])).size == 0


def test_evaluate_chain_on_line():
    residual = evaluate(LINE, ARM2, ARM2.config([0.0, 0.0]))
    assert residual == pytest.approx([0.0])


def test_evaluate_off_line_by_direct_fk():
    # ee_y = sin(pi/6) + sin(pi/6) = 1.0 with the line at y = 0.
    residual = evaluate(LINE, ARM2, ARM2.config([math.pi / 6, 0.0]))
    assert residual == pytest.approx([1.0])


def test_evaluate_heading_term_wraps():
    con = EndEffectorLine(line_y=0.0, fix_heading=math.pi)
    q = ARM2.config([-math.pi / 2, -math.pi / 2])  # heading -pi wraps to pi
    residual = evaluate(con, ARM2, q)
    assert residual.shape == (2,)
    assert residual[1] == pytest.approx(0.0, abs=1e-12)


def test_jacobian_shapes_and_unit_circle():
    assert jacobian(Unconstrained(), ARM3, ARM3.config([0, 0, 0])).shape == (0, 3)
    jac = jacobian(LINE, ARM1, ARM1.config([0.0]))
    assert jac.shape == (1, 1)
    assert jac[0, 0] == pytest.approx(1.0)  # d(ee_y)/dtheta = cos(0)


def _fd_jacobian(constraint, model, q, h=1e-6):
    rows = []
    values = list(q.values)
    for j in range(len(values)):
        hi = values.copy()
        lo = values.copy()
        hi[j] += h
        lo[j] -= h
        rows.append(
            (evaluate(constraint, model, model.config(hi)) - evaluate(constraint, model, model.config(lo)))
            / (2 * h)
        )
    return np.array(rows).T


@pytest.mark.parametrize("heading", [None, 0.7])
def test_jacobian_matches_finite_differences(heading):
    con = EndEffectorLine(line_y=0.3, fix_heading=heading)
    rng = random.Random(21)
    checked = 0
    while checked < 100:
        q = ARM3.config([rng.uniform(-2.8, 2.8) for _ in range(3)])
        if heading is not None and abs(evaluate(con, ARM3, q)[1]) > 2.9:
            continue  # keep finite differences away from the angle wrap
        analytic = jacobian(con, ARM3, q)
        numeric = _fd_jacobian(con, ARM3, q)
        scale = max(1.0, float(np.abs(analytic).max()))
        assert np.abs(analytic - numeric).max() / scale <= 1e-5
        checked += 1


def test_project_fixed_point():
    q = ARM2.config([0.3, -0.6])
    q = project(LINE, ARM2, q)  # land on the manifold first
    assert project(LINE, ARM2, q).values == q.values


def test_project_reaches_tolerance():
    q = project(LINE, ARM2, ARM2.config([0.3, -0.1]))
    assert abs(evaluate(LINE, ARM2, q)[0]) <= 1e-6


def test_project_unreachable_line():
    con = EndEffectorLine(line_y=5.0)  # reach is 2
    with pytest.raises(NonConvergenceError):
        project(con, ARM2, ARM2.config([0.1, 0.1]))


def test_project_idempotent_random():
    rng = random.Random(22)
    for _ in range(200):
        raw = ARM3.config([rng.uniform(-math.pi, math.pi) for _ in range(3)])
        try:
            once = project(LINE, ARM3, raw)
        except NonConvergenceError:
            continue
        twice = project(LINE, ARM3, once)
        assert twice.values == once.values
        assert abs(evaluate(LINE, ARM3, twice)[0]) <= 1e-6


def test_unconstrained_interpolation_is_linear():
    disc = Disc(0.2)
    a, b = disc.config([0.0, 0.0]), disc.config([1.0, 0.0])
    seq = constrained_interpolate(Unconstrained(), disc, a, b, 0.25)
    assert len(seq) == 5
    assert [q[0] for q in seq] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert constrained_interpolate(Unconstrained(), disc, a, a, 0.25) == [a]


def test_same_point_single_element():
    q = project(LINE, ARM2, ARM2.config([0.3, -0.6]))
    assert constrained_interpolate(LINE, ARM2, q, q, 0.05) == [q]


def test_constrained_interpolation_residual_audit():
    qa = project(LINE, ARM2, ARM2.config([0.3, -0.6]))
    qb = project(LINE, ARM2, ARM2.config([-0.3, 0.6]))
    seq = constrained_interpolate(LINE, ARM2, qa, qb, 0.05)
    assert seq[0] == qa and seq[-1] == qb
    for q in seq:
        assert abs(evaluate(LINE, ARM2, q)[0]) <= 1e-6
    for a, b in zip(seq, seq[1:]):
        assert ARM2.distance(a, b) <= 0.05 + 1e-9


def test_branch_jump_raises_discontinuity():
    # (0.3, -0.6) lies on the theta2 = -2 * theta1 solution branch while
    # (0.5, pi) lies on the folded-arm branch; walking between them stalls.
    qa = project(LINE, ARM2, ARM2.config([0.3, -0.6]))
    qc = ARM2.config([0.5, math.pi])
    assert abs(evaluate(LINE, ARM2, qc)[0]) <= 1e-9
    with pytest.raises(DiscontinuityError):
        constrained_interpolate(LINE, ARM2, qa, qc, 0.05)


def test_projection_residuals_random_batch():
    rng = random.Random(23)
    line = EndEffectorLine(line_y=0.4)
    successes = 0
    for _ in range(400):
        raw = ARM3.config([rng.uniform(-math.pi, math.pi) for _ in range(3)])
        try:
            q = project(line, ARM3, raw)
        except NonConvergenceError:
            continue
        assert abs(evaluate(line, ARM3, q)[0]) <= 1e-6
        successes += 1
    assert successes >= 300  # the line is well inside the reachable annulus
