"""2D robot bodies, forward kinematics, and exact collision primitives.

Robots are either discs or planar serial arms whose links (and optional
end-effector stick) are capsules: segments with a half-width radius. All
collision predicates are closed-form distance tests with strict
inequalities and zero tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class DimensionError(ValueError):
    """Configuration length does not match the robot's DoF."""


def wrap_angle(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return math.pi - (math.pi - x) % TWO_PI


@dataclass(frozen=True)
class Configuration:
    """A point in one robot's configuration space (meters or radians)."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError(f"non-finite configuration values: {self.values}")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]


@dataclass(frozen=True)
class Capsule:
    """Segment with a radius; p0 == p1 degenerates to a disc."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, used for the world bounds and obstacles."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"degenerate rectangle: {self}")

    def contains_point(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("circle radius must be positive")


Obstacle = Rect | Circle


@dataclass(frozen=True)
class World:
    """Workspace bounds plus static obstacles."""

    bounds: Rect
    obstacles: tuple[Obstacle, ...] = ()

    def __post_init__(self) -> None:
        for i, obs in enumerate(self.obstacles):
            if not _obstacle_touches(obs, self.bounds):
                raise ValueError(f"obstacle {i} lies outside the world bounds")


def _obstacle_touches(obs: Obstacle, bounds: Rect) -> bool:
    if isinstance(obs, Rect):
        return not (
            obs.x_max < bounds.x_min
            or obs.x_min > bounds.x_max
            or obs.y_max < bounds.y_min
            or obs.y_min > bounds.y_max
        )
    dx = _clamp(obs.cx, bounds.x_min, bounds.x_max) - obs.cx
    dy = _clamp(obs.cy, bounds.y_min, bounds.y_max) - obs.cy
    return math.hypot(dx, dy) <= obs.radius


@dataclass(frozen=True)
class Disc:
    """Holonomic disc robot; configuration is its (x, y) center."""

    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("disc radius must be positive")

    @property
    def dof(self) -> int:
        return 2

    @property
    def min_body_radius(self) -> float:
        return self.radius

    @property
    def point_speed_factor(self) -> float:
        # Workspace displacement per unit of configuration-space distance.
        return 1.0

    def config(self, values) -> Configuration:
        values = tuple(float(v) for v in values)
        if len(values) != 2:
            raise DimensionError(f"disc expects 2 values, got {len(values)}")
        return Configuration(values)

    def distance(self, a: Configuration, b: Configuration) -> float:
        return math.hypot(b[0] - a[0], b[1] - a[1])

    def interpolate(self, a: Configuration, b: Configuration, t: float) -> Configuration:
        return Configuration((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))

    def sample_uniform(self, rng, world: World) -> Configuration:
        b = world.bounds
        return Configuration((rng.uniform(b.x_min, b.x_max), rng.uniform(b.y_min, b.y_max)))


@dataclass(frozen=True)
class PlanarArm:
    """Fixed-base planar serial arm; configuration is the joint angles.

    Link m points along the running sum of the first m joint angles. The
    end effector sits at the tip of the last link and may carry a stick of
    length ``ee_stick_length`` aligned with the arm heading.
    """

    base: tuple[float, float]
    link_lengths: tuple[float, ...]
    link_radius: float
    ee_stick_length: float = 0.0

    def __post_init__(self) -> None:
        if not self.link_lengths or any(l <= 0.0 for l in self.link_lengths):
            raise ValueError("link lengths must be positive")
        if self.link_radius <= 0.0:
            raise ValueError("link radius must be positive")
        if self.ee_stick_length < 0.0:
            raise ValueError("stick length must be non-negative")

    @property
    def dof(self) -> int:
        return len(self.link_lengths)

    @property
    def min_body_radius(self) -> float:
        return self.link_radius

    @property
    def point_speed_factor(self) -> float:
        # |dq_j| moves any body point by at most the reach beyond joint j;
        # Cauchy-Schwarz turns the per-joint bound into a factor on ||dq||.
        reach = 0.0
        total = 0.0
        for length in reversed(self.link_lengths):
            reach += length
            total += (reach + self.ee_stick_length) ** 2
        return math.sqrt(total)

    def config(self, values) -> Configuration:
        values = tuple(float(v) for v in values)
        if len(values) != self.dof:
            raise DimensionError(f"arm expects {self.dof} values, got {len(values)}")
        return Configuration(tuple(wrap_angle(v) for v in values))

    def distance(self, a: Configuration, b: Configuration) -> float:
        return math.sqrt(sum(wrap_angle(y - x) ** 2 for x, y in zip(a.values, b.values)))

    def interpolate(self, a: Configuration, b: Configuration, t: float) -> Configuration:
        return Configuration(
            tuple(wrap_angle(x + t * wrap_angle(y - x)) for x, y in zip(a.values, b.values))
        )

    def sample_uniform(self, rng, world: World) -> Configuration:
        return Configuration(
            tuple(wrap_angle(rng.uniform(-math.pi, math.pi)) for _ in range(self.dof))
        )


RobotModel = Disc | PlanarArm


@dataclass(frozen=True)
class BodyGeometry:
    """Forward-kinematics result: body capsules plus the end-effector pose."""

    capsules: tuple[Capsule, ...]
    ee_position: tuple[float, float]
    ee_heading: float


def forward_kinematics(model: RobotModel, q: Configuration) -> BodyGeometry:
    """Compute the robot's body capsules and end-effector pose at q."""
    if len(q) != model.dof:
        raise DimensionError(f"expected {model.dof} values, got {len(q)}")
    if isinstance(model, Disc):
        p = (q[0], q[1])
        return BodyGeometry((Capsule(p, p, model.radius),), p, 0.0)

    x, y = model.base
    phi = 0.0
    capsules = []
    for theta, length in zip(q.values, model.link_lengths):
        phi += theta
        nx = x + length * math.cos(phi)
        ny = y + length * math.sin(phi)
        capsules.append(Capsule((x, y), (nx, ny), model.link_radius))
        x, y = nx, ny
    heading = wrap_angle(phi)
    if model.ee_stick_length > 0.0:
        tip = (x + model.ee_stick_length * math.cos(phi), y + model.ee_stick_length * math.sin(phi))
        capsules.append(Capsule((x, y), tip, model.link_radius))
    return BodyGeometry(tuple(capsules), (x, y), heading)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def point_segment_distance(
    p: tuple[float, float], a: tuple[float, float], b: tuple[float, float]
) -> float:
    abx, aby = b[0] - a[0], b[1] - a[1]
    apx, apy = p[0] - a[0], p[1] - a[1]
    denom = abx * abx + aby * aby
    if denom <= 0.0:
        return math.hypot(apx, apy)
    t = _clamp((apx * abx + apy * aby) / denom, 0.0, 1.0)
    return math.hypot(apx - t * abx, apy - t * aby)


def segment_segment_distance(
    p1: tuple[float, float],
    q1: tuple[float, float],
    p2: tuple[float, float],
    q2: tuple[float, float],
) -> float:
    """Minimum distance between two segments (either may be degenerate)."""
    d1x, d1y = q1[0] - p1[0], q1[1] - p1[1]
    d2x, d2y = q2[0] - p2[0], q2[1] - p2[1]
    rx, ry = p1[0] - p2[0], p1[1] - p2[1]
    a = d1x * d1x + d1y * d1y
    e = d2x * d2x + d2y * d2y
    f = d2x * rx + d2y * ry

    if a <= 0.0 and e <= 0.0:
        return math.hypot(rx, ry)
    if a <= 0.0:
        s = 0.0
        t = _clamp(f / e, 0.0, 1.0)
    else:
        c = d1x * rx + d1y * ry
        if e <= 0.0:
            t = 0.0
            s = _clamp(-c / a, 0.0, 1.0)
        else:
            b = d1x * d2x + d1y * d2y
            denom = a * e - b * b
            s = _clamp((b * f - c * e) / denom, 0.0, 1.0) if denom > 0.0 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = _clamp(-c / a, 0.0, 1.0)
            elif t > 1.0:
                t = 1.0
                s = _clamp((b - c) / a, 0.0, 1.0)
    cx = p1[0] + s * d1x - (p2[0] + t * d2x)
    cy = p1[1] + s * d1y - (p2[1] + t * d2y)
    return math.hypot(cx, cy)


def _segment_rect_distance(a: tuple[float, float], b: tuple[float, float], rect: Rect) -> float:
    """Distance from a segment to a solid axis-aligned rectangle."""
    if rect.contains_point(*a) or rect.contains_point(*b):
        return 0.0
    corners = (
        (rect.x_min, rect.y_min),
        (rect.x_max, rect.y_min),
        (rect.x_max, rect.y_max),
        (rect.x_min, rect.y_max),
    )
    best = math.inf
    for i in range(4):
        d = segment_segment_distance(a, b, corners[i], corners[(i + 1) % 4])
        if d < best:
            best = d
    return best


def _capsule_hits_obstacle(cap: Capsule, obs: Obstacle) -> bool:
    if isinstance(obs, Rect):
        return _segment_rect_distance(cap.p0, cap.p1, obs) < cap.radius
    return point_segment_distance((obs.cx, obs.cy), cap.p0, cap.p1) < obs.radius + cap.radius


def _capsule_in_bounds(cap: Capsule, bounds: Rect) -> bool:
    r = cap.radius
    for x, y in (cap.p0, cap.p1):
        if x < bounds.x_min + r or x > bounds.x_max - r:
            return False
        if y < bounds.y_min + r or y > bounds.y_max - r:
            return False
    return True


def swept_disc_collision(
    p0: tuple[float, float], p1: tuple[float, float], radius: float, world: World
) -> bool:
    """Exact world test for a disc sweeping the straight segment p0-p1."""
    cap = Capsule(p0, p1, radius)
    if not _capsule_in_bounds(cap, world.bounds):
        return True
    for obs in world.obstacles:
        if _capsule_hits_obstacle(cap, obs):
            return True
    return False


def robot_world_collision(model: RobotModel, q: Configuration, world: World) -> bool:
    """True iff any body capsule hits an obstacle or leaves the bounds."""
    if isinstance(model, Disc):
        # Point-vs-world tests; avoids building the body geometry.
        x, y, r = q[0], q[1], model.radius
        b = world.bounds
        if x < b.x_min + r or x > b.x_max - r or y < b.y_min + r or y > b.y_max - r:
            return True
        for obs in world.obstacles:
            if isinstance(obs, Rect):
                dx = max(obs.x_min - x, 0.0, x - obs.x_max)
                dy = max(obs.y_min - y, 0.0, y - obs.y_max)
                if dx * dx + dy * dy < r * r:
                    return True
            else:
                rr = r + obs.radius
                if (x - obs.cx) ** 2 + (y - obs.cy) ** 2 < rr * rr:
                    return True
        return False
    # Arm: walk the joint points directly instead of building capsules.
    r = model.link_radius
    b = world.bounds
    pts = [model.base]
    x, y = model.base
    phi = 0.0
    for theta, length in zip(q.values, model.link_lengths):
        phi += theta
        x += length * math.cos(phi)
        y += length * math.sin(phi)
        pts.append((x, y))
    if model.ee_stick_length > 0.0:
        pts.append(
            (x + model.ee_stick_length * math.cos(phi), y + model.ee_stick_length * math.sin(phi))
        )
    for px, py in pts:
        if px < b.x_min + r or px > b.x_max - r or py < b.y_min + r or py > b.y_max - r:
            return True
    for obs in world.obstacles:
        if isinstance(obs, Rect):
            for p0, p1 in zip(pts, pts[1:]):
                if _segment_rect_distance(p0, p1, obs) < r:
                    return True
        else:
            rr = r + obs.radius
            for p0, p1 in zip(pts, pts[1:]):
                if point_segment_distance((obs.cx, obs.cy), p0, p1) < rr:
                    return True
    return False


def robot_robot_collision(
    model_i: RobotModel,
    q_i: Configuration,
    model_j: RobotModel,
    q_j: Configuration,
) -> bool:
    """True iff any capsule of robot i intersects any capsule of robot j."""
    return bodies_collide(forward_kinematics(model_i, q_i), forward_kinematics(model_j, q_j))


def bodies_collide(body_i: BodyGeometry, body_j: BodyGeometry, inflate: float = 0.0) -> bool:
    """Capsule-set intersection test on precomputed forward kinematics.

    ``inflate`` enlarges the required clearance; sweeps use it to rule
    out contacts between their samples.
    """
    for a in body_i.capsules:
        for b in body_j.capsules:
            if segment_segment_distance(a.p0, a.p1, b.p0, b.p1) < a.radius + b.radius + inflate:
                return True
    return False
