"""Computational-geometry kernel.

2.5D world model: obstacles are planar footprints extruded over a height
interval, the target is a 3D point.  Provides the collision-line-length
criterion (perimeter of the footprint intersection), occlusion tests for
sight lines and view cones, and central finite-difference gradients of
scalar criteria with respect to a planar pose.

All functions are pure; identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

from shapely.geometry import Polygon as _ShapelyPolygon

from .errors import InputError, NumericalError

Vec2 = tuple[float, float]
Vec3 = tuple[float, float, float]
Polygon = tuple[Vec2, ...]

_EPS = 1e-12
TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    w = math.fmod(a, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    elif w > math.pi:
        w -= TWO_PI
    return w


def as_polygon(points: Sequence[Sequence[float]]) -> Polygon:
    return tuple((float(p[0]), float(p[1])) for p in points)


def signed_area(poly: Polygon) -> float:
    acc = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return 0.5 * acc


def validate_footprint(poly: Polygon, name: str = "polygon", check_simple: bool = True) -> None:
    """Reject polygons that are degenerate or self-intersecting."""
    if len(poly) < 3:
        raise InputError(f"{name}: needs at least 3 vertices, got {len(poly)}")
    if abs(signed_area(poly)) <= _EPS:
        raise InputError(f"{name}: area is zero")
    if check_simple and not _ShapelyPolygon(poly).is_valid:
        raise InputError(f"{name}: not a simple polygon")


@dataclass(frozen=True)
class PlanarPose:
    """Trunk placement in the floor plane; theta is kept in (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class Prism:
    """Planar footprint extruded from z_min to z_max."""

    footprint: Polygon
    z_min: float
    z_max: float

    def __post_init__(self):
        object.__setattr__(self, "footprint", as_polygon(self.footprint))
        validate_footprint(self.footprint, "prism footprint")
        if not self.z_min < self.z_max:
            raise InputError(f"prism: z_min {self.z_min} must be < z_max {self.z_max}")


@dataclass(frozen=True)
class Scene:
    """Obstacle prisms, a 3D target point and the planar working area."""

    obstacles: tuple[Prism, ...]
    target: Vec3
    bounds: tuple[float, float, float, float]  # x0, y0, x1, y1

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "target", tuple(float(c) for c in self.target))
        object.__setattr__(self, "bounds", tuple(float(c) for c in self.bounds))
        x0, y0, x1, y1 = self.bounds
        if not (x0 < x1 and y0 < y1):
            raise InputError("scene bounds: empty rectangle")
        tx, ty = self.target[0], self.target[1]
        if not (x0 <= tx <= x1 and y0 <= ty <= y1):
            raise InputError("scene target lies outside bounds in plan view")
        for p in self.obstacles:
            if signed_area(p.footprint) < 0:
                raise InputError("obstacle footprint must be counter-clockwise")


@dataclass(frozen=True)
class GradientStep:
    """Central-difference step sizes for (x, y) and theta."""

    delta_xy: float = 1e-3
    delta_theta: float = 1e-3

    def __post_init__(self):
        if not (self.delta_xy > 0 and self.delta_theta > 0):
            raise InputError("gradient steps must be strictly positive")


# ---------------------------------------------------------------------------
# collision line length

def _poly_bbox(poly: Polygon) -> tuple[float, float, float, float]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), min(ys), max(xs), max(ys)


def _bbox_disjoint(a, b) -> bool:
    return a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1]


def _perimeter_of(geom) -> float:
    """Boundary length of the area-bearing parts of a shapely geometry."""
    t = geom.geom_type
    if t == "Polygon":
        return geom.length if geom.area > 0.0 else 0.0
    if t in ("MultiPolygon", "GeometryCollection"):
        return sum(_perimeter_of(g) for g in geom.geoms)
    return 0.0  # points / lines: tangential contact, not interpenetration


def _pair_perimeter(footprint_a: Polygon, footprint_b: Polygon) -> float:
    if _bbox_disjoint(_poly_bbox(footprint_a), _poly_bbox(footprint_b)):
        return 0.0
    inter = _ShapelyPolygon(footprint_a).intersection(_ShapelyPolygon(footprint_b))
    return _perimeter_of(inter)


def collision_length(footprint_a: Polygon, footprint_b: Polygon) -> float:
    """Perimeter of the intersection region of two simple polygons.

    Zero exactly when the interiors are disjoint; shared boundary without
    interpenetration counts as zero.
    """
    footprint_a = as_polygon(footprint_a)
    footprint_b = as_polygon(footprint_b)
    validate_footprint(footprint_a, "footprint A")
    validate_footprint(footprint_b, "footprint B")
    return _pair_perimeter(footprint_a, footprint_b)


def total_collision_length(
    footprint: Polygon, scene: Scene, z_range: tuple[float, float]
) -> float:
    """Sum of collision lengths against every obstacle overlapping z_range."""
    footprint = as_polygon(footprint)
    # rigid transforms of an already-simple footprint stay simple, so only
    # the cheap degeneracy checks run on this hot path
    validate_footprint(footprint, "footprint", check_simple=False)
    z_lo, z_hi = z_range
    fb = _poly_bbox(footprint)
    total = 0.0
    for obs in scene.obstacles:
        if min(z_hi, obs.z_max) <= max(z_lo, obs.z_min):
            continue  # height ranges touch at most
        if _bbox_disjoint(fb, _poly_bbox(obs.footprint)):
            continue
        total += _pair_perimeter(footprint, obs.footprint)
    return total


# ---------------------------------------------------------------------------
# occlusion

@lru_cache(maxsize=256)
def _footprint_info(poly: Polygon):
    """Cached per-footprint data: bbox, edges, convexity flag."""
    n = len(poly)
    edges = tuple((poly[i], poly[(i + 1) % n]) for i in range(n))
    convex = True
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        cx, cy = poly[(i + 2) % n]
        if (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) < -_EPS:
            convex = False
            break
    return _poly_bbox(poly), edges, convex


def _convex_inside_interval(p0: Vec2, p1: Vec2, edges) -> tuple[float, float] | None:
    """Parameter interval of p0->p1 strictly inside a convex CCW polygon."""
    t_lo, t_hi = 0.0, 1.0
    for (ax, ay), (bx, by) in edges:
        ex, ey = bx - ax, by - ay
        f0 = ex * (p0[1] - ay) - ey * (p0[0] - ax)
        f1 = ex * (p1[1] - ay) - ey * (p1[0] - ax)
        if f0 <= _EPS and f1 <= _EPS:
            return None  # outside or grazing this edge everywhere
        if f0 > 0.0 and f1 > 0.0:
            continue
        t_cross = f0 / (f0 - f1)
        if f0 > f1:  # leaving the half-plane
            t_hi = min(t_hi, t_cross)
        else:
            t_lo = max(t_lo, t_cross)
        if t_lo >= t_hi:
            return None
    return (t_lo, t_hi)


def _point_in_polygon_strict(pt: Vec2, edges) -> bool:
    px, py = pt
    for (ax, ay), (bx, by) in edges:
        ex, ey = bx - ax, by - ay
        ln2 = ex * ex + ey * ey
        t = ((px - ax) * ex + (py - ay) * ey) / ln2
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        dx, dy = px - (ax + t * ex), py - (ay + t * ey)
        if dx * dx + dy * dy <= _EPS * _EPS:
            return False  # on the boundary: not strictly inside
    inside = False
    for (ax, ay), (bx, by) in edges:
        if (ay > py) != (by > py):
            x_cross = ax + (py - ay) / (by - ay) * (bx - ax)
            if px < x_cross:
                inside = not inside
    return inside


def _concave_inside_intervals(p0: Vec2, p1: Vec2, edges) -> list[tuple[float, float]]:
    """Strict-interior parameter intervals for a general simple polygon."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    ts = [0.0, 1.0]
    for (ax, ay), (bx, by) in edges:
        ex, ey = bx - ax, by - ay
        denom = dx * ey - dy * ex
        rx, ry = ax - p0[0], ay - p0[1]
        if abs(denom) < _EPS:
            # parallel; if collinear, the edge endpoints split the segment
            if abs(rx * dy - ry * dx) < _EPS:
                ln2 = dx * dx + dy * dy
                if ln2 > 0:
                    for qx, qy in ((ax, ay), (bx, by)):
                        t = ((qx - p0[0]) * dx + (qy - p0[1]) * dy) / ln2
                        if -_EPS < t < 1.0 + _EPS:
                            ts.append(min(1.0, max(0.0, t)))
            continue
        t = (rx * ey - ry * ex) / denom
        s = (rx * dy - ry * dx) / denom
        if -_EPS <= s <= 1.0 + _EPS and -_EPS < t < 1.0 + _EPS:
            ts.append(min(1.0, max(0.0, t)))
    ts.sort()
    out: list[tuple[float, float]] = []
    for i in range(len(ts) - 1):
        a, b = ts[i], ts[i + 1]
        if b - a <= _EPS:
            continue
        mid = 0.5 * (a + b)
        if _point_in_polygon_strict((p0[0] + mid * dx, p0[1] + mid * dy), edges):
            if out and abs(out[-1][1] - a) <= _EPS:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    if not intervals:
        return []
    intervals.sort()
    merged = [intervals[0]]
    for a, b in intervals[1:]:
        la, lb = merged[-1]
        if a <= lb:
            merged[-1] = (la, max(lb, b))
        else:
            merged.append((a, b))
    return merged


def _prism_intervals(s: Vec3, t: Vec3, prism: Prism) -> list[tuple[float, float]]:
    z0, z1 = s[2], t[2]
    dz = z1 - z0
    if abs(dz) < _EPS:
        # near-horizontal: classify by the midpoint so the test is
        # symmetric under swapping the endpoints
        if not (prism.z_min < 0.5 * (z0 + z1) < prism.z_max):
            return []
        z_lo, z_hi = 0.0, 1.0
    else:
        ta = (prism.z_min - z0) / dz
        tb = (prism.z_max - z0) / dz
        z_lo, z_hi = (ta, tb) if ta < tb else (tb, ta)
        z_lo, z_hi = max(0.0, z_lo), min(1.0, z_hi)
        if z_lo >= z_hi:
            return []
    bbox, edges, convex = _footprint_info(prism.footprint)
    # clip the plan-view projection against the footprint bbox first
    sx, sy = s[0], s[1]
    tx, ty = t[0], t[1]
    if (max(sx, tx) < bbox[0] or min(sx, tx) > bbox[2]
            or max(sy, ty) < bbox[1] or min(sy, ty) > bbox[3]):
        return []
    p0, p1 = (sx, sy), (tx, ty)
    if convex:
        iv = _convex_inside_interval(p0, p1, edges)
        xy_intervals = [iv] if iv else []
    else:
        xy_intervals = _concave_inside_intervals(p0, p1, edges)
    out = []
    for a, b in xy_intervals:
        lo, hi = max(a, z_lo), min(b, z_hi)
        if hi - lo > _EPS:
            out.append((lo, hi))
    return out


def segment_occluded(s: Vec3, t: Vec3, scene: Scene) -> float:
    """Length of the parts of segment s->t lying strictly inside any prism."""
    s = (float(s[0]), float(s[1]), float(s[2]))
    t = (float(t[0]), float(t[1]), float(t[2]))
    length = math.dist(s, t)
    if length <= _EPS:
        raise InputError("segment endpoints coincide")
    intervals: list[tuple[float, float]] = []
    for prism in scene.obstacles:
        intervals.extend(_prism_intervals(s, t, prism))
    covered = sum(b - a for a, b in _merge_intervals(intervals))
    return covered * length


@lru_cache(maxsize=64)
def _fan_offsets(half_angle: float, n_rays: int) -> tuple[tuple[float, float], ...]:
    """(polar, azimuth) angles of the deterministic ray fan.

    Axis ray first, then concentric rings of up to 8 equally spaced rays;
    ring k of K sits at polar angle half_angle * k / K.
    """
    offsets = [(0.0, 0.0)]
    m = n_rays - 1
    if m > 0:
        rings = (m + 7) // 8
        per_ring = [8] * (rings - 1) + [m - 8 * (rings - 1)]
        for k, count in enumerate(per_ring, start=1):
            polar = half_angle * k / rings
            for j in range(count):
                offsets.append((polar, TWO_PI * j / count))
    return tuple(offsets)


def cone_rays(axis: Vec3, half_angle: float, n_rays: int) -> tuple[Vec3, ...]:
    """Unit directions of the ray fan spanning the cone around axis."""
    ax, ay, az = axis
    norm = math.sqrt(ax * ax + ay * ay + az * az)
    if norm <= _EPS:
        raise InputError("cone axis has zero length")
    ax, ay, az = ax / norm, ay / norm, az / norm
    # deterministic orthonormal basis in the plane normal to the axis
    if abs(az) <= 0.9:
        rx, ry, rz = 0.0, 0.0, 1.0
    else:
        rx, ry, rz = 1.0, 0.0, 0.0
    ux, uy, uz = ay * rz - az * ry, az * rx - ax * rz, ax * ry - ay * rx
    un = math.sqrt(ux * ux + uy * uy + uz * uz)
    ux, uy, uz = ux / un, uy / un, uz / un
    vx, vy, vz = ay * uz - az * uy, az * ux - ax * uz, ax * uy - ay * ux
    rays = []
    for polar, azim in _fan_offsets(half_angle, n_rays):
        cp, sp = math.cos(polar), math.sin(polar)
        ca, sa = math.cos(azim), math.sin(azim)
        rays.append((
            cp * ax + sp * (ca * ux + sa * vx),
            cp * ay + sp * (ca * uy + sa * vy),
            cp * az + sp * (ca * uz + sa * vz),
        ))
    return tuple(rays)


def cone_occlusion(
    apex: Vec3,
    axis: Vec3,
    half_angle: float,
    range_: float,
    n_rays: int,
    scene: Scene,
) -> float:
    """Mean occluded length over the deterministic ray fan of the view cone."""
    if not 0.0 < half_angle < 0.5 * math.pi:
        raise InputError(f"cone half angle {half_angle} outside (0, pi/2)")
    if n_rays < 1:
        raise InputError("cone needs at least one ray")
    if range_ <= _EPS:
        return 0.0
    if not scene.obstacles:
        return 0.0
    total = 0.0
    for d in cone_rays(axis, half_angle, n_rays):
        end = (apex[0] + d[0] * range_, apex[1] + d[1] * range_, apex[2] + d[2] * range_)
        total += segment_occluded(apex, end, scene)
    return total / n_rays


# ---------------------------------------------------------------------------
# finite differences

Criterion = Callable[[PlanarPose], float]


def fd_gradient(
    criterion: Criterion, pose: PlanarPose, step: GradientStep
) -> tuple[float, float, float]:
    """Central-difference gradient of a scalar criterion at a planar pose."""
    dxy, dth = step.delta_xy, step.delta_theta
    samples = (
        criterion(PlanarPose(pose.x + dxy, pose.y, pose.theta)),
        criterion(PlanarPose(pose.x - dxy, pose.y, pose.theta)),
        criterion(PlanarPose(pose.x, pose.y + dxy, pose.theta)),
        criterion(PlanarPose(pose.x, pose.y - dxy, pose.theta)),
        criterion(PlanarPose(pose.x, pose.y, pose.theta + dth)),
        criterion(PlanarPose(pose.x, pose.y, pose.theta - dth)),
    )
    for v in samples:
        if not math.isfinite(v):
            raise NumericalError(f"criterion returned non-finite value {v}")
    return (
        (samples[0] - samples[1]) / (2.0 * dxy),
        (samples[2] - samples[3]) / (2.0 * dxy),
        (samples[4] - samples[5]) / (2.0 * dth),
    )
