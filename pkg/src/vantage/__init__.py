"""vantage: human-in-the-loop blackboard multi-agent placement planner.

Rate-scheduled elementary agents cooperate through a shared blackboard to
walk a manikin (or a camera-mast robot) to a spot from which a target is
reachable and visible through a cluttered 2.5D scene, under joint limits
and an adaptive view cone. A human operator steers alongside the agents,
live over a websocket console or scripted for headless runs.
"""

from .blackboard import Blackboard, normalize, state_digest
from .blackboard_types import Contribution, NormalizationConstants, WorldState
from .body import BodyState, HeadJoints, JointLimits
from .errors import (
    DegenerateDirectionError,
    InputError,
    NumericalError,
    ProtocolError,
    ScenarioError,
)
from .geometry import (
    GradientStep,
    PlanarPose,
    Prism,
    Scene,
    collision_length,
    cone_occlusion,
    fd_gradient,
    segment_occluded,
    total_collision_length,
)
from .scheduler import (
    AgentConfig,
    Command,
    ConvergenceConfig,
    RunConfig,
    RunResult,
    Scheduler,
    TickTrace,
    convergence_flags,
    replay,
)

__version__ = "0.1.0"
