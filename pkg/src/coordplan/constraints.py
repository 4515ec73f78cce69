"""Manifold constraints: residuals, Jacobians, projection, interpolation.

The supported constraint family keeps a planar arm's end effector on a
horizontal line, optionally with a fixed heading. Projection is a damped
Newton iteration on the least-squares step; constrained interpolation
walks from one on-manifold configuration to another by repeated
interpolate-then-project.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Configuration, Disc, PlanarArm, RobotModel, forward_kinematics, wrap_angle


class NonConvergenceError(RuntimeError):
    """Projection failed to reach the constraint tolerance."""


class DiscontinuityError(RuntimeError):
    """Constrained interpolation jumped between manifold branches."""


@dataclass(frozen=True)
class Unconstrained:
    tolerance: float = 1e-6
    max_newton_iters: int = 50

    @property
    def codim(self) -> int:
        return 0


@dataclass(frozen=True)
class EndEffectorLine:
    """Keep the end effector on the horizontal line y = line_y."""

    line_y: float
    fix_heading: float | None = None
    tolerance: float = 1e-6
    max_newton_iters: int = 50

    def __post_init__(self) -> None:
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")

    @property
    def codim(self) -> int:
        return 1 if self.fix_heading is None else 2


ManifoldConstraint = Unconstrained | EndEffectorLine


def evaluate(constraint: ManifoldConstraint, model: RobotModel, q: Configuration) -> np.ndarray:
    """Constraint residual at q; zero vector means on-manifold."""
    if isinstance(constraint, Unconstrained):
        return np.zeros(0)
    body = forward_kinematics(model, q)
    residual = [body.ee_position[1] - constraint.line_y]
    if constraint.fix_heading is not None:
        residual.append(wrap_angle(body.ee_heading - constraint.fix_heading))
    return np.array(residual)


def jacobian(constraint: ManifoldConstraint, model: RobotModel, q: Configuration) -> np.ndarray:
    """Analytic residual Jacobian, shape (codim, dof)."""
    if isinstance(constraint, Unconstrained):
        return np.zeros((0, model.dof))
    if isinstance(model, Disc):
        rows = [[0.0, 1.0]]
        if constraint.fix_heading is not None:
            rows.append([0.0, 0.0])
        return np.array(rows)

    # d(ee_y)/dtheta_j = sum over links at or beyond j of L_m * cos(phi_m).
    phi = 0.0
    link_cos = []
    for theta, length in zip(q.values, model.link_lengths):
        phi += theta
        link_cos.append(length * math.cos(phi))
    suffix = np.cumsum(link_cos[::-1])[::-1]
    rows = [suffix]
    if constraint.fix_heading is not None:
        rows.append(np.ones(model.dof))
    return np.array(rows)


def _arm_line_residual(model: PlanarArm, constraint: EndEffectorLine, values):
    phi = 0.0
    ee_y = model.base[1]
    for theta, length in zip(values, model.link_lengths):
        phi += theta
        ee_y += length * math.sin(phi)
    r1 = ee_y - constraint.line_y
    if constraint.fix_heading is None:
        return abs(r1), r1, None
    r2 = wrap_angle(phi - constraint.fix_heading)
    return max(abs(r1), abs(r2)), r1, r2


def _project_arm_line(constraint: EndEffectorLine, model: PlanarArm, q: Configuration):
    """Scalar Newton projection for the arm-on-line case (the hot path)."""
    values = list(q.values)
    norm, r1, r2 = _arm_line_residual(model, constraint, values)
    for _ in range(constraint.max_newton_iters):
        if norm <= constraint.tolerance:
            return model.config(values)
        # suffix sums of L_m cos(phi_m) form the ee_y Jacobian row
        phi = 0.0
        link_cos = []
        for theta, length in zip(values, model.link_lengths):
            phi += theta
            link_cos.append(length * math.cos(phi))
        row = list(link_cos)
        for j in range(len(row) - 2, -1, -1):
            row[j] += row[j + 1]
        if r2 is None:
            denom = sum(s * s for s in row)
            if denom <= 1e-14:
                raise NonConvergenceError("singular constraint Jacobian")
            scale = r1 / denom
            step = [s * scale for s in row]
        else:
            # normal equations for J = [row; ones]
            a = sum(s * s for s in row)
            b = sum(row)
            c = float(len(row))
            det = a * c - b * b
            if abs(det) <= 1e-14:
                raise NonConvergenceError("singular constraint Jacobian")
            y1 = (c * r1 - b * r2) / det
            y2 = (-b * r1 + a * r2) / det
            step = [s * y1 + y2 for s in row]
        alpha = 1.0
        for _ in range(7):
            candidate = [v - alpha * s for v, s in zip(values, step)]
            cand_norm, cand_r1, cand_r2 = _arm_line_residual(model, constraint, candidate)
            if cand_norm < norm:
                break
            alpha *= 0.5
        else:
            raise NonConvergenceError("projection stalled")
        values, norm, r1, r2 = candidate, cand_norm, cand_r1, cand_r2
    if norm <= constraint.tolerance:
        return model.config(values)
    raise NonConvergenceError(f"residual {norm:.3e} after {constraint.max_newton_iters} iterations")


def project(constraint: ManifoldConstraint, model: RobotModel, q: Configuration) -> Configuration:
    """Project q onto the constraint manifold with damped Newton steps."""
    if isinstance(constraint, Unconstrained):
        return q
    if isinstance(model, PlanarArm):
        return _project_arm_line(constraint, model, q)
    residual = evaluate(constraint, model, q)
    norm = np.abs(residual).max()
    for _ in range(constraint.max_newton_iters):
        if norm <= constraint.tolerance:
            return q
        jac = jacobian(constraint, model, q)
        try:
            step = jac.T @ np.linalg.solve(jac @ jac.T, residual)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError("singular constraint Jacobian") from exc
        values = np.asarray(q.values)
        alpha = 1.0
        for _ in range(7):
            candidate = model.config(values - alpha * step)
            cand_residual = evaluate(constraint, model, candidate)
            cand_norm = np.abs(cand_residual).max()
            if cand_norm < norm:
                break
            alpha *= 0.5
        else:
            raise NonConvergenceError("projection stalled")
        q, residual, norm = candidate, cand_residual, cand_norm
    if norm <= constraint.tolerance:
        return q
    raise NonConvergenceError(f"residual {norm:.3e} after {constraint.max_newton_iters} iterations")


def constrained_interpolate(
    constraint: ManifoldConstraint,
    model: RobotModel,
    q_a: Configuration,
    q_b: Configuration,
    step: float,
) -> list[Configuration]:
    """On-manifold sequence from q_a to q_b with hops of at most ``step``.

    Both endpoints must already satisfy the constraint. Raises
    DiscontinuityError when projection jumps across branches or stops
    making progress toward q_b.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    dist = model.distance(q_a, q_b)
    if dist == 0.0:
        return [q_a]
    if isinstance(constraint, Unconstrained):
        n = max(1, math.ceil(dist / step))
        return [model.interpolate(q_a, q_b, k / n) for k in range(n + 1)]

    sequence = [q_a]
    current = q_a
    remaining = dist
    max_hops = 4 * math.ceil(dist / step) + 16
    while remaining > step:
        if len(sequence) > max_hops:
            raise DiscontinuityError("interpolation failed to reach the target")
        t = step / remaining
        projected = None
        for _ in range(5):
            candidate = project(constraint, model, model.interpolate(current, q_b, t))
            hop = model.distance(current, candidate)
            if hop > 2.0 * step:
                raise DiscontinuityError(f"projection jumped {hop:.4f} > {2 * step:.4f}")
            if hop <= step:
                projected = candidate
                break
            t *= 0.5
        if projected is None:
            raise DiscontinuityError("projection hop could not be reduced below the step size")
        new_remaining = model.distance(projected, q_b)
        if new_remaining >= remaining:
            raise DiscontinuityError("projection stopped progressing toward the target")
        sequence.append(projected)
        current, remaining = projected, new_remaining
    sequence.append(q_b)
    return sequence
