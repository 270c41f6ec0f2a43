"""The five elementary agents.

Each agent observes an immutable snapshot and emits a raw contribution
toward its own goal; it never sees another agent's output. Raw values are
normalized by the blackboard constants when applied, so agents are free to
emit goal-sized errors and criterion gradients.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass
from pathlib import Path

from . import body as bd
from .blackboard_types import Contribution, WorldState
from .errors import DegenerateDirectionError, InputError
from .geometry import (
    GradientStep,
    PlanarPose,
    cone_occlusion,
    fd_gradient,
    total_collision_length,
    wrap_angle,
)

ATTRACTION = "attraction"
REPULSION = "repulsion"
HEAD = "head"
VISIBILITY = "visibility"
OPERATOR = "operator"

_PLAN_DEAD_BAND = 1e-9


class Agent:
    """Contract: a name plus a pure observe-and-act step."""

    id: str

    def step(self, snapshot: WorldState) -> Contribution:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# attraction

def attraction_step(snapshot: WorldState, agent_id: str = ATTRACTION) -> Contribution:
    """Pull the trunk toward the aim point and face its direction."""
    state = snapshot.body
    aim = snapshot.aim_point()
    dx = aim[0] - state.trunk.x
    dy = aim[1] - state.trunk.y
    if math.hypot(dx, dy) <= _PLAN_DEAD_BAND:
        return Contribution.zero(agent_id, snapshot.tick)
    try:
        u = bd.direction_to(state, aim)
    except DegenerateDirectionError:
        return Contribution.zero(agent_id, snapshot.tick)
    horiz = math.hypot(u[0], u[1])
    if horiz <= 1e-12:
        d_theta = 0.0  # aim straight above the eye: bearing undefined
    else:
        d_theta = wrap_angle(math.atan2(u[1], u[0]) - state.trunk.theta)
    return Contribution(
        agent_id=agent_id, d_xy=(dx, dy), d_theta=d_theta, tick=snapshot.tick
    )


class AttractionAgent(Agent):
    def __init__(self, agent_id: str = ATTRACTION):
        self.id = agent_id

    def step(self, snapshot: WorldState) -> Contribution:
        return attraction_step(snapshot, self.id)


# ---------------------------------------------------------------------------
# repulsion

def repulsion_step(
    snapshot: WorldState, step: GradientStep, agent_id: str = REPULSION
) -> Contribution:
    """Descend the collision-line-length criterion of the trunk footprint."""
    state = snapshot.body
    scene = snapshot.scene
    z_range = bd.body_z_range(state)
    footprint = state.footprint

    def criterion(pose: PlanarPose) -> float:
        return total_collision_length(bd.footprint_at(footprint, pose), scene, z_range)

    center = criterion(state.trunk)
    g = fd_gradient(criterion, state.trunk, step)
    if center == 0.0 and g == (0.0, 0.0, 0.0):
        return Contribution.zero(agent_id, snapshot.tick)
    return Contribution(
        agent_id=agent_id, d_xy=(-g[0], -g[1]), d_theta=-g[2], tick=snapshot.tick
    )


class RepulsionAgent(Agent):
    def __init__(self, step: GradientStep | None = None, agent_id: str = REPULSION):
        self.id = agent_id
        self.step_sizes = step or GradientStep()

    def step(self, snapshot: WorldState) -> Contribution:
        return repulsion_step(snapshot, self.step_sizes, self.id)


# ---------------------------------------------------------------------------
# head orientation

def head_orientation_step(snapshot: WorldState, agent_id: str = HEAD) -> Contribution:
    """Turn the head so the vision axis lines up with the aim direction.

    Desired angles are clamped to the joint limits before differencing, so
    a blocked gaze pins at the limit instead of winding up. Roll is never
    driven.
    """
    state = snapshot.body
    try:
        alpha_star, theta_star = bd.gaze_angles_for(state, snapshot.aim_point())
    except DegenerateDirectionError:
        return Contribution.zero(agent_id, snapshot.tick)
    limits = state.joint_limits
    alpha_star = min(max(alpha_star, limits.alpha[0]), limits.alpha[1])
    theta_star = min(max(theta_star, limits.theta[0]), limits.theta[1])
    return Contribution(
        agent_id=agent_id,
        d_head=(alpha_star - state.head.alpha, theta_star - state.head.theta),
        tick=snapshot.tick,
    )


class HeadOrientationAgent(Agent):
    def __init__(self, agent_id: str = HEAD):
        self.id = agent_id

    def step(self, snapshot: WorldState) -> Contribution:
        return head_orientation_step(snapshot, self.id)


# ---------------------------------------------------------------------------
# visibility

def adapt_cone(
    snapshot: WorldState, widen_step: float = bd.CONE_STEP_DEFAULT, agent_id: str = VISIBILITY
) -> Contribution:
    """Widen the cone while the gaze is inside it, narrow it otherwise."""
    state = snapshot.body
    try:
        off = bd.misalignment_to(state, snapshot.aim_point())
    except DegenerateDirectionError:
        return Contribution.zero(agent_id, snapshot.tick)
    d_cone = widen_step if off < state.cone_half_angle else -widen_step
    return Contribution(agent_id=agent_id, d_cone=d_cone, tick=snapshot.tick)


def visibility_step(
    snapshot: WorldState,
    step: GradientStep,
    n_rays: int = 25,
    agent_id: str = VISIBILITY,
) -> Contribution:
    """Descend the view-cone occlusion, moving trunk and head.

    The criterion is the mean occluded length of a deterministic ray fan
    around the vision axis, truncated at the aim distance.
    """
    state = snapshot.body
    scene = snapshot.scene
    aim = snapshot.aim_point()
    eps = state.cone_half_angle
    offset, height = state.eye_forward_offset, state.eye_height

    def occlusion(trunk: PlanarPose, alpha: float, head_theta: float) -> float:
        eye = bd.eye_point_at(trunk, offset, height)
        rng = math.dist(eye, aim)
        if rng <= 1e-9:
            return 0.0
        axis = bd.vision_axis_at(trunk.theta, alpha, head_theta)
        return cone_occlusion(eye, axis, eps, rng, n_rays, scene)

    head = state.head

    def trunk_criterion(pose: PlanarPose) -> float:
        return occlusion(pose, head.alpha, head.theta)

    center = trunk_criterion(state.trunk)
    g = fd_gradient(trunk_criterion, state.trunk, step)
    dth = step.delta_theta
    g_alpha = (
        occlusion(state.trunk, head.alpha + dth, head.theta)
        - occlusion(state.trunk, head.alpha - dth, head.theta)
    ) / (2.0 * dth)
    g_htheta = (
        occlusion(state.trunk, head.alpha, head.theta + dth)
        - occlusion(state.trunk, head.alpha, head.theta - dth)
    ) / (2.0 * dth)
    if center == 0.0 and g == (0.0, 0.0, 0.0) and g_alpha == 0.0 and g_htheta == 0.0:
        return Contribution.zero(agent_id, snapshot.tick)
    return Contribution(
        agent_id=agent_id,
        d_xy=(-g[0], -g[1]),
        d_theta=-g[2],
        d_head=(-g_alpha, -g_htheta),
        tick=snapshot.tick,
    )


class VisibilityAgent(Agent):
    """Cone-occlusion descent plus the aperture widen/shrink rule."""

    def __init__(
        self,
        step: GradientStep | None = None,
        n_rays: int = 25,
        widen_step: float = bd.CONE_STEP_DEFAULT,
        agent_id: str = VISIBILITY,
    ):
        self.id = agent_id
        self.step_sizes = step or GradientStep()
        self.n_rays = n_rays
        self.widen_step = widen_step

    def step(self, snapshot: WorldState) -> Contribution:
        c = visibility_step(snapshot, self.step_sizes, self.n_rays, self.id)
        cone = adapt_cone(snapshot, self.widen_step, self.id)
        return Contribution(
            agent_id=self.id,
            d_xy=c.d_xy,
            d_theta=c.d_theta,
            d_head=c.d_head,
            d_cone=cone.d_cone,
            tick=snapshot.tick,
        )


# ---------------------------------------------------------------------------
# operator

@dataclass(frozen=True)
class SteerSample:
    tick: int
    vx: float
    vy: float
    omega: float


class OperatorScript:
    """Scripted steering: `tick vx vy omega` lines, `#` starts a comment."""

    def __init__(self, entries: list[SteerSample]):
        ticks = [e.tick for e in entries]
        if ticks != sorted(ticks):
            raise InputError("operator script ticks must be non-decreasing")
        self.entries = list(entries)
        self._ticks = ticks

    @classmethod
    def parse(cls, text: str) -> "OperatorScript":
        entries = []
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise InputError(f"script line {ln}: expected `tick vx vy omega`")
            try:
                entries.append(
                    SteerSample(int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]))
                )
            except ValueError as exc:
                raise InputError(f"script line {ln}: {exc}") from exc
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> "OperatorScript":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def latest(self, tick: int, window: int) -> SteerSample | None:
        """Most recent sample at or before `tick`, no older than `window` ticks."""
        i = bisect.bisect_right(self._ticks, tick)
        if i == 0:
            return None
        sample = self.entries[i - 1]
        if tick - sample.tick >= window:
            return None
        return sample


class LiveSteerQueue:
    """Thread-safe live input: most recent sample wins, stale ones drop out."""

    def __init__(self):
        self._lock = threading.Lock()
        self._sample: SteerSample | None = None

    def push(self, sample: SteerSample) -> None:
        with self._lock:
            if self._sample is None or sample.tick >= self._sample.tick:
                self._sample = sample

    def latest(self, tick: int, window: int) -> SteerSample | None:
        with self._lock:
            s = self._sample
        if s is None or s.tick > tick or tick - s.tick >= window:
            return None
        return s


def operator_step(
    snapshot: WorldState,
    source: OperatorScript | LiveSteerQueue | None,
    window: int,
    agent_id: str = OPERATOR,
) -> Contribution:
    """Relay the human's latest steering sample as a raw contribution."""
    if source is None:
        return Contribution.zero(agent_id, snapshot.tick)
    sample = source.latest(snapshot.tick, window)
    if sample is None:
        return Contribution.zero(agent_id, snapshot.tick)
    return Contribution(
        agent_id=agent_id,
        d_xy=(sample.vx, sample.vy),
        d_theta=sample.omega,
        tick=snapshot.tick,
    )


class OperatorAgent(Agent):
    """Steering relay.

    Carries an optional script plus a live queue the scheduler feeds from
    incoming steer commands; a fresh live sample beats the script. The
    staleness window is the agent's own firing period (the scheduler keeps
    it in sync with the configured rate).
    """

    def __init__(
        self,
        script: OperatorScript | None = None,
        window: int = 1,
        agent_id: str = OPERATOR,
    ):
        self.id = agent_id
        self.script = script
        self.live = LiveSteerQueue()
        self.window = window

    def step(self, snapshot: WorldState) -> Contribution:
        sample = self.live.latest(snapshot.tick, self.window)
        if sample is None and self.script is not None:
            sample = self.script.latest(snapshot.tick, self.window)
        if sample is None:
            return Contribution.zero(self.id, snapshot.tick)
        return Contribution(
            agent_id=self.id,
            d_xy=(sample.vx, sample.vy),
            d_theta=sample.omega,
            tick=snapshot.tick,
        )
