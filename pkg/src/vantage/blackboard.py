"""The shared blackboard: the only medium between agents.

Agents read immutable snapshots and propose contributions; the scheduler
applies one batch per tick. Contributions are summed component-wise before
any clamping, so the outcome does not depend on the order of the batch.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field, replace

from .blackboard_types import Contribution, NormalizationConstants, WorldState
from .body import BodyState, HeadJoints, clamp_to_limits
from .errors import InputError, ProtocolError
from .geometry import PlanarPose, Scene, Vec3, wrap_angle

__all__ = [
    "Blackboard",
    "Contribution",
    "NormalizationConstants",
    "WorldState",
    "normalize",
    "apply_contributions",
    "state_digest",
]

_DEAD_BAND = 1e-9  # metres; sub-epsilon raw translations count as zero
_MAG_TOL = 1e-12


def _clip_signed(v: float, bound: float) -> float:
    return min(bound, max(-bound, v))


def normalize(raw: Contribution, k: NormalizationConstants) -> Contribution:
    """Rescale a raw contribution to the fixed per-firing magnitudes.

    Translation becomes exactly delta_pos long (direction kept); every
    angular component is clamped into [-delta_or, +delta_or]. Zero stays
    zero, and the operation is idempotent. Components below the dead band
    are treated as zero so that finite-difference noise cannot keep a
    settled state drifting (which would defeat stall detection).
    """
    dx, dy = raw.d_xy
    values = (dx, dy, raw.d_theta, raw.d_head[0], raw.d_head[1], raw.d_cone)
    if not all(math.isfinite(v) for v in values):
        raise InputError(f"non-finite contribution from {raw.agent_id!r}")
    mag = math.hypot(dx, dy)
    if mag <= _DEAD_BAND:
        d_xy = (0.0, 0.0)
    elif abs(mag - k.delta_pos) <= _MAG_TOL:
        d_xy = (dx, dy)  # already at the target magnitude
    else:
        if abs(dx) <= _DEAD_BAND:
            dx = 0.0
        if abs(dy) <= _DEAD_BAND:
            dy = 0.0
        scale = k.delta_pos / math.hypot(dx, dy)
        d_xy = (dx * scale, dy * scale)

    def angular(v: float) -> float:
        return 0.0 if abs(v) <= _DEAD_BAND else _clip_signed(v, k.delta_or)

    return replace(
        raw,
        d_xy=d_xy,
        d_theta=angular(raw.d_theta),
        d_head=(angular(raw.d_head[0]), angular(raw.d_head[1])),
        d_cone=angular(raw.d_cone),
    )


def apply_contributions(
    state: WorldState, contributions: list[Contribution], known_agents: frozenset[str]
) -> WorldState:
    """Merge one tick's normalized contributions into a new state.

    Components are summed with exact accumulation (math.fsum) and clamped
    afterwards, which makes the result independent of list order.
    """
    for c in contributions:
        if c.agent_id not in known_agents:
            raise ProtocolError(f"contribution from unknown agent {c.agent_id!r}")
        if c.tick != state.tick:
            raise ProtocolError(
                f"contribution from {c.agent_id!r} carries tick {c.tick}, expected {state.tick}"
            )
    body = state.body
    sum_x = math.fsum(c.d_xy[0] for c in contributions)
    sum_y = math.fsum(c.d_xy[1] for c in contributions)
    sum_th = math.fsum(c.d_theta for c in contributions)
    sum_alpha = math.fsum(c.d_head[0] for c in contributions)
    sum_htheta = math.fsum(c.d_head[1] for c in contributions)
    sum_cone = math.fsum(c.d_cone for c in contributions)
    trunk = PlanarPose(
        body.trunk.x + sum_x,
        body.trunk.y + sum_y,
        wrap_angle(body.trunk.theta + sum_th),
    )
    head = clamp_to_limits(
        HeadJoints(
            alpha=body.head.alpha + sum_alpha,
            beta=body.head.beta,
            theta=body.head.theta + sum_htheta,
        ),
        body.joint_limits,
    )
    lo, hi = body.cone_limits
    cone = min(hi, max(lo, body.cone_half_angle + sum_cone))
    new_body = replace(body, trunk=trunk, head=head, cone_half_angle=cone)
    return replace(state, body=new_body, tick=state.tick + 1)


def _f(v: float) -> str:
    return format(v, ".17g")


def state_digest(state: WorldState) -> str:
    """64-bit hash of the canonically serialized mutable state.

    The tick counter is excluded so that a motionless board keeps a stable
    digest (this is what stall detection watches).
    """
    b = state.body
    it = state.intermediate_target
    parts = [
        b.embodiment,
        _f(b.trunk.x), _f(b.trunk.y), _f(b.trunk.theta),
        _f(b.head.alpha), _f(b.head.beta), _f(b.head.theta),
        _f(b.cone_half_angle),
        "none" if it is None else ",".join(_f(c) for c in it),
    ]
    payload = ";".join(parts).encode("ascii")
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


@dataclass
class Blackboard:
    """Single-writer shared state with lock-protected snapshot reads."""

    scene: Scene
    _state: WorldState = field(init=False)
    _agents: frozenset[str] = frozenset()
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __init__(self, body: BodyState, scene: Scene, agent_ids=()):
        self.scene = scene
        self._state = WorldState(body=body, scene=scene, tick=0, intermediate_target=None)
        self._agents = frozenset(agent_ids)
        self._lock = threading.Lock()

    @property
    def agent_ids(self) -> frozenset[str]:
        return self._agents

    def snapshot(self) -> WorldState:
        with self._lock:
            return self._state

    def apply(self, contributions: list[Contribution]) -> WorldState:
        with self._lock:
            self._state = apply_contributions(self._state, contributions, self._agents)
            return self._state

    def set_intermediate_target(self, p: Vec3 | None) -> None:
        with self._lock:
            target = None if p is None else tuple(float(c) for c in p)
            self._state = replace(self._state, intermediate_target=target)
