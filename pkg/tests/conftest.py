import math

import pytest

from vantage.agents import Agent
from vantage.blackboard_types import Contribution
from vantage.body import BodyState, HeadJoints
from vantage.geometry import PlanarPose, Prism, Scene


class NullAgent(Agent):
    """Fires on schedule, contributes nothing."""

    def __init__(self, agent_id: str):
        self.id = agent_id

    def step(self, snapshot):
        return Contribution.zero(self.id, snapshot.tick)


def square(cx: float, cy: float, half: float, angle: float = 0.0):
    c, s = math.cos(angle), math.sin(angle)
    pts = [(-half, -half), (half, -half), (half, half), (-half, half)]
    return tuple((cx + c * x - s * y, cy + s * x + c * y) for x, y in pts)


def box_prism(x0, y0, x1, y1, z0=0.0, z1=2.0) -> Prism:
    return Prism(footprint=((x0, y0), (x1, y0), (x1, y1), (x0, y1)), z_min=z0, z_max=z1)


def make_scene(obstacles=(), target=(1.0, 0.0, 1.5), bounds=(-10.0, -10.0, 10.0, 10.0)) -> Scene:
    return Scene(obstacles=tuple(obstacles), target=target, bounds=bounds)


def make_body(x=0.0, y=0.0, theta=0.0, alpha=0.0, beta=0.0, head_theta=0.0,
              cone=None, **kw) -> BodyState:
    from vantage.body import CONE_MIN_DEFAULT

    return BodyState(
        trunk=PlanarPose(x, y, theta),
        head=HeadJoints(alpha=alpha, beta=beta, theta=head_theta),
        cone_half_angle=CONE_MIN_DEFAULT if cone is None else cone,
        **kw,
    )


@pytest.fixture
def empty_scene() -> Scene:
    return make_scene()
