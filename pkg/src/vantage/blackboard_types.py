"""Value types shared by the blackboard, agents and scheduler."""

from __future__ import annotations

from dataclasses import dataclass

from .body import BodyState
from .errors import InputError
from .geometry import Scene, Vec2, Vec3


@dataclass(frozen=True)
class WorldState:
    """One immutable version of the shared state."""

    body: BodyState
    scene: Scene
    tick: int
    intermediate_target: Vec3 | None = None

    def aim_point(self) -> Vec3:
        """Where target-seeking agents currently aim."""
        return self.intermediate_target if self.intermediate_target is not None else self.scene.target


@dataclass(frozen=True)
class Contribution:
    """One agent's proposed increment on the state variables it drives."""

    agent_id: str
    d_xy: Vec2 = (0.0, 0.0)
    d_theta: float = 0.0
    d_head: tuple[float, float] = (0.0, 0.0)  # (d_alpha, d_head_theta)
    d_cone: float = 0.0
    tick: int = 0

    def is_zero(self) -> bool:
        return (
            self.d_xy == (0.0, 0.0)
            and self.d_theta == 0.0
            and self.d_head == (0.0, 0.0)
            and self.d_cone == 0.0
        )

    @classmethod
    def zero(cls, agent_id: str, tick: int) -> "Contribution":
        return cls(agent_id=agent_id, tick=tick)


@dataclass(frozen=True)
class NormalizationConstants:
    """Fixed per-firing magnitudes: metres per move, radians per turn."""

    delta_pos: float = 0.05
    delta_or: float = 0.05

    def __post_init__(self):
        if not (self.delta_pos > 0 and self.delta_or > 0):
            raise InputError("normalization constants must be positive")
