"""Embodiment kinematics: trunk pose, head joints with ergonomic limits,
eye point, vision axis and the adaptive view-cone state.

The same state type models both embodiments: a walking manikin and a
wheeled base carrying a pan/tilt camera mast. They differ only in joint
limits (and labels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateDirectionError, InputError
from .geometry import (
    Polygon,
    PlanarPose,
    Scene,
    Vec3,
    as_polygon,
    validate_footprint,
    wrap_angle,
)

MANIKIN = "manikin"
ROBOT = "robot"

DEG = math.pi / 180.0

# plausible adult ranges for the head; wide pan/tilt for the camera mast
MANIKIN_LIMITS_DEG = {"alpha": (-45.0, 45.0), "beta": (-40.0, 40.0), "theta": (-60.0, 60.0)}
ROBOT_LIMITS_DEG = {"alpha": (-90.0, 90.0), "beta": (0.0, 0.0), "theta": (-170.0, 170.0)}

CONE_MIN_DEFAULT = 2.0 * DEG
CONE_MAX_DEFAULT = 25.0 * DEG
CONE_STEP_DEFAULT = 0.5 * DEG


@dataclass(frozen=True)
class JointLimits:
    """Per-joint [min, max] intervals in radians; 0 must be legal.

    The camera-mast roll joint is fixed, so a degenerate [0, 0] interval
    is allowed.
    """

    alpha: tuple[float, float]
    beta: tuple[float, float]
    theta: tuple[float, float]

    def __post_init__(self):
        for name in ("alpha", "beta", "theta"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InputError(f"joint limit {name}: min {lo} > max {hi}")
            if not (lo <= 0.0 <= hi):
                raise InputError(f"joint limit {name}: neutral 0 outside [{lo}, {hi}]")


def manikin_limits() -> JointLimits:
    return JointLimits(
        alpha=tuple(v * DEG for v in MANIKIN_LIMITS_DEG["alpha"]),
        beta=tuple(v * DEG for v in MANIKIN_LIMITS_DEG["beta"]),
        theta=tuple(v * DEG for v in MANIKIN_LIMITS_DEG["theta"]),
    )


def robot_limits() -> JointLimits:
    return JointLimits(
        alpha=tuple(v * DEG for v in ROBOT_LIMITS_DEG["alpha"]),
        beta=tuple(v * DEG for v in ROBOT_LIMITS_DEG["beta"]),
        theta=tuple(v * DEG for v in ROBOT_LIMITS_DEG["theta"]),
    )


@dataclass(frozen=True)
class HeadJoints:
    """Head rotations relative to the trunk frame: pitch, roll, yaw."""

    alpha: float = 0.0
    beta: float = 0.0
    theta: float = 0.0


@dataclass(frozen=True)
class BodyState:
    trunk: PlanarPose
    head: HeadJoints
    cone_half_angle: float
    cone_limits: tuple[float, float] = (CONE_MIN_DEFAULT, CONE_MAX_DEFAULT)
    embodiment: str = MANIKIN
    footprint: Polygon = as_polygon([(-0.2, -0.2), (0.2, -0.2), (0.2, 0.2), (-0.2, 0.2)])
    eye_height: float = 1.6
    eye_forward_offset: float = 0.1
    joint_limits: JointLimits | None = None

    def __post_init__(self):
        object.__setattr__(self, "footprint", as_polygon(self.footprint))
        validate_footprint(self.footprint, "body footprint")
        if self.embodiment not in (MANIKIN, ROBOT):
            raise InputError(f"unknown embodiment {self.embodiment!r}")
        if self.joint_limits is None:
            limits = manikin_limits() if self.embodiment == MANIKIN else robot_limits()
            object.__setattr__(self, "joint_limits", limits)
        lo, hi = self.cone_limits
        if not (0.0 < lo <= hi < 0.5 * math.pi):
            raise InputError(f"cone limits ({lo}, {hi}) must satisfy 0 < min <= max < pi/2")
        if not (lo <= self.cone_half_angle <= hi):
            raise InputError("cone aperture outside its limits")
        if clamp_to_limits(self.head, self.joint_limits) != self.head:
            raise InputError("head joints outside joint limits")


def clamp_to_limits(head: HeadJoints, limits: JointLimits) -> HeadJoints:
    def clip(v: float, lim: tuple[float, float]) -> float:
        return min(max(v, lim[0]), lim[1])

    return HeadJoints(
        alpha=clip(head.alpha, limits.alpha),
        beta=clip(head.beta, limits.beta),
        theta=clip(head.theta, limits.theta),
    )


# --- low-level forms used for finite-difference probes -----------------------

def eye_point_at(trunk: PlanarPose, forward_offset: float, height: float) -> Vec3:
    return (
        trunk.x + forward_offset * math.cos(trunk.theta),
        trunk.y + forward_offset * math.sin(trunk.theta),
        height,
    )


def vision_axis_at(trunk_theta: float, alpha: float, head_theta: float) -> Vec3:
    ca = math.cos(alpha)
    bearing = trunk_theta + head_theta
    return (ca * math.cos(bearing), ca * math.sin(bearing), math.sin(alpha))


def footprint_at(footprint: Polygon, pose: PlanarPose) -> Polygon:
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return tuple(
        (pose.x + c * vx - s * vy, pose.y + s * vx + c * vy) for vx, vy in footprint
    )


# --- state-level operations ---------------------------------------------------

def eye_point(state: BodyState) -> Vec3:
    """Cone vertex: trunk point raised to eye height, pushed forward."""
    return eye_point_at(state.trunk, state.eye_forward_offset, state.eye_height)


def vision_axis(state: BodyState) -> Vec3:
    """Gaze direction from trunk heading plus head pitch and yaw.

    Roll (beta) spins the view about its own axis and does not move it.
    """
    return vision_axis_at(state.trunk.theta, state.head.alpha, state.head.theta)


def direction_to(state: BodyState, point: Vec3) -> Vec3:
    """Unit vector from the eye to an aim point."""
    e = eye_point(state)
    dx, dy, dz = point[0] - e[0], point[1] - e[1], point[2] - e[2]
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    if n <= 1e-12:
        raise DegenerateDirectionError("aim point coincides with the eye")
    return (dx / n, dy / n, dz / n)


def target_direction(state: BodyState, scene: Scene) -> Vec3:
    return direction_to(state, scene.target)


def misalignment_to(state: BodyState, point: Vec3) -> float:
    """Angle between the vision axis and the eye-to-point direction."""
    u = direction_to(state, point)
    v = vision_axis(state)
    dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    return math.acos(min(1.0, max(-1.0, dot)))


def misalignment(state: BodyState, scene: Scene) -> float:
    return misalignment_to(state, scene.target)


def world_footprint(state: BodyState) -> Polygon:
    """Local footprint placed into the world by the trunk pose."""
    return footprint_at(state.footprint, state.trunk)


def body_z_range(state: BodyState) -> tuple[float, float]:
    """Height interval the body occupies for collision checks."""
    return (0.0, state.eye_height)


def gaze_angles_for(state: BodyState, point: Vec3) -> tuple[float, float]:
    """Head (alpha, theta) that would point the vision axis at the aim point.

    The returned values are unclamped; when the plan-view direction is
    degenerate (aim straight above or below the eye) the current yaw is kept.
    """
    u = direction_to(state, point)
    alpha = math.asin(min(1.0, max(-1.0, u[2])))
    horiz = math.hypot(u[0], u[1])
    if horiz <= 1e-12:
        return alpha, state.head.theta
    theta = wrap_angle(math.atan2(u[1], u[0]) - state.trunk.theta)
    return alpha, theta
