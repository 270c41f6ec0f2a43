"""Scenario files: load, validate, save, build, and extract run metrics.

The on-disk format is YAML (key/value with nested sections). Lengths are
metres; every angle in a file is in degrees (converted to radians when the
scenario is built). `load` materializes all defaults, so a loaded scenario
is the canonical form and `load(save(s)) == s` holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from . import body as bd
from .agents import (
    Agent,
    AttractionAgent,
    HeadOrientationAgent,
    OperatorAgent,
    OperatorScript,
    RepulsionAgent,
    VisibilityAgent,
)
from .blackboard import Blackboard
from .blackboard_types import NormalizationConstants
from .errors import ScenarioError
from .geometry import GradientStep, PlanarPose, Prism, Scene, signed_area
from .scheduler import (
    AgentConfig,
    Command,
    ConvergenceConfig,
    RunConfig,
    Scheduler,
    TickTrace,
)

DEG = math.pi / 180.0

AGENT_KINDS = ("attraction", "repulsion", "head", "visibility", "operator")


# ---------------------------------------------------------------------------
# file model (values exactly as authored, angles in degrees)

@dataclass(frozen=True)
class ObstacleSpec:
    footprint: tuple[tuple[float, float], ...]
    z: tuple[float, float]


@dataclass(frozen=True)
class SceneSpec:
    bounds: tuple[float, float, float, float]
    target: tuple[float, float, float]
    obstacles: tuple[ObstacleSpec, ...] = ()


@dataclass(frozen=True)
class BodySpec:
    embodiment: str = "manikin"
    footprint: tuple[tuple[float, float], ...] = (
        (-0.2, -0.2), (0.2, -0.2), (0.2, 0.2), (-0.2, 0.2))
    eye_height: float = 1.6
    eye_forward_offset: float = 0.1
    start: tuple[float, float, float] = (0.0, 0.0, 0.0)  # x, y, theta_deg
    head: tuple[float, float, float] = (0.0, 0.0, 0.0)   # alpha, beta, theta degrees
    cone_initial_deg: float = 2.0
    cone_min_deg: float = 2.0
    cone_max_deg: float = 25.0
    cone_widen_step_deg: float = 0.5
    limits_deg: tuple[tuple[float, float], ...] | None = None  # alpha, beta, theta


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    id: str
    rate: int = 1
    active: bool = True
    rays: int = 25
    script: str | None = None


@dataclass(frozen=True)
class RunSpec:
    delta_pos: float = 0.05
    delta_or_deg: float = 3.0
    gradient_xy: float = 1e-3
    gradient_theta_deg: float = 0.06
    distance_tol: float = 0.2
    visibility_tol: float = 1e-6
    align_tol_deg: float = 1.0
    stall_ticks: int = 200
    max_ticks: int = 5000
    tick_rate: float = 30.0


@dataclass(frozen=True)
class TargetEvent:
    tick: int
    point: tuple[float, float, float] | None  # None clears


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    scene: SceneSpec
    body: BodySpec
    agents: tuple[AgentSpec, ...]
    run: RunSpec
    intermediate_targets: tuple[TargetEvent, ...] = ()
    base_dir: Path | None = field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# parsing with exhaustive error collection

def _num(obj, path, errors, default=None) -> float | None:
    if obj is None and default is not None:
        return default
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        errors.append(f"{path}: expected a number, got {obj!r}")
        return None
    return float(obj)


def _int(obj, path, errors, default=None) -> int | None:
    if obj is None and default is not None:
        return default
    if isinstance(obj, bool) or not isinstance(obj, int):
        errors.append(f"{path}: expected an integer, got {obj!r}")
        return None
    return obj


def _vec(obj, n, path, errors) -> tuple | None:
    if not isinstance(obj, (list, tuple)) or len(obj) != n:
        errors.append(f"{path}: expected {n} numbers")
        return None
    out = []
    for i, v in enumerate(obj):
        x = _num(v, f"{path}[{i}]", errors)
        if x is None:
            return None
        out.append(x)
    return tuple(out)


def _polygon(obj, path, errors) -> tuple | None:
    if not isinstance(obj, list):
        errors.append(f"{path}: expected a list of [x, y] vertices")
        return None
    pts = []
    for i, p in enumerate(obj):
        v = _vec(p, 2, f"{path}[{i}]", errors)
        if v is None:
            return None
        pts.append(v)
    if len(pts) < 3:
        errors.append(f"{path}: polygon needs at least 3 vertices, got {len(pts)}")
        return None
    poly = tuple(pts)
    if abs(signed_area(poly)) <= 1e-12:
        errors.append(f"{path}: polygon area is zero")
        return None
    if signed_area(poly) < 0:
        poly = tuple(reversed(poly))  # normalize orientation to CCW
    from shapely.geometry import Polygon as _SP
    if not _SP(poly).is_valid:
        errors.append(f"{path}: polygon is self-intersecting")
        return None
    return poly


def _parse_scene(obj, errors) -> SceneSpec | None:
    if not isinstance(obj, dict):
        errors.append("scene: missing or not a mapping")
        return None
    bounds = _vec(obj.get("bounds"), 4, "scene.bounds", errors)
    target = _vec(obj.get("target"), 3, "scene.target", errors)
    obstacles = []
    for i, o in enumerate(obj.get("obstacles") or []):
        if not isinstance(o, dict):
            errors.append(f"scene.obstacles[{i}]: expected a mapping")
            continue
        fp = _polygon(o.get("footprint"), f"scene.obstacles[{i}].footprint", errors)
        z = _vec(o.get("z"), 2, f"scene.obstacles[{i}].z", errors)
        if z is not None and z[0] >= z[1]:
            errors.append(f"scene.obstacles[{i}].z: z_min must be < z_max")
            z = None
        if fp is not None and z is not None:
            obstacles.append(ObstacleSpec(footprint=fp, z=z))
    if bounds is not None:
        if not (bounds[0] < bounds[2] and bounds[1] < bounds[3]):
            errors.append("scene.bounds: empty rectangle")
            bounds = None
    if bounds is not None and target is not None:
        if not (bounds[0] <= target[0] <= bounds[2] and bounds[1] <= target[1] <= bounds[3]):
            errors.append("scene.target: lies outside bounds in plan view")
    if bounds is None or target is None:
        return None
    return SceneSpec(bounds=bounds, target=target, obstacles=tuple(obstacles))


def _parse_body(obj, errors) -> BodySpec | None:
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        errors.append("body: not a mapping")
        return None
    defaults = BodySpec(
        embodiment=str(obj.get("embodiment", "manikin")),
    )
    if defaults.embodiment not in (bd.MANIKIN, bd.ROBOT):
        errors.append(f"body.embodiment: must be 'manikin' or 'robot', got {defaults.embodiment!r}")
    footprint = defaults.footprint
    if "footprint" in obj:
        fp = _polygon(obj["footprint"], "body.footprint", errors)
        if fp is not None:
            footprint = fp
    eye_height = _num(obj.get("eye_height"), "body.eye_height", errors, defaults.eye_height)
    if eye_height is not None and eye_height <= 0:
        errors.append("body.eye_height: must be positive")
    offset = _num(obj.get("eye_forward_offset"), "body.eye_forward_offset", errors,
                  defaults.eye_forward_offset)
    start = defaults.start
    if "start" in obj:
        s = obj["start"]
        if isinstance(s, dict):
            sx = _num(s.get("x"), "body.start.x", errors, 0.0)
            sy = _num(s.get("y"), "body.start.y", errors, 0.0)
            st = _num(s.get("theta_deg"), "body.start.theta_deg", errors, 0.0)
            if None not in (sx, sy, st):
                start = (sx, sy, st)
        else:
            errors.append("body.start: expected mapping {x, y, theta_deg}")
    head = defaults.head
    if "head" in obj:
        h = obj["head"]
        if isinstance(h, dict):
            ha = _num(h.get("alpha_deg"), "body.head.alpha_deg", errors, 0.0)
            hb = _num(h.get("beta_deg"), "body.head.beta_deg", errors, 0.0)
            ht = _num(h.get("theta_deg"), "body.head.theta_deg", errors, 0.0)
            if None not in (ha, hb, ht):
                head = (ha, hb, ht)
        else:
            errors.append("body.head: expected mapping {alpha_deg, beta_deg, theta_deg}")
    cone = obj.get("cone") or {}
    if not isinstance(cone, dict):
        errors.append("body.cone: expected a mapping")
        cone = {}
    c_min = _num(cone.get("min_deg"), "body.cone.min_deg", errors, defaults.cone_min_deg)
    c_max = _num(cone.get("max_deg"), "body.cone.max_deg", errors, defaults.cone_max_deg)
    c_init = _num(cone.get("initial_deg"), "body.cone.initial_deg", errors, c_min)
    c_step = _num(cone.get("widen_step_deg"), "body.cone.widen_step_deg", errors,
                  defaults.cone_widen_step_deg)
    if None not in (c_min, c_max, c_init):
        if not (0.0 < c_min <= c_max < 90.0):
            errors.append("body.cone: need 0 < min_deg <= max_deg < 90")
        elif not (c_min <= c_init <= c_max):
            errors.append("body.cone.initial_deg: outside [min_deg, max_deg]")
    limits = None
    if "limits" in obj:
        lm = obj["limits"]
        if not isinstance(lm, dict):
            errors.append("body.limits: expected a mapping")
        else:
            rows = []
            for joint in ("alpha_deg", "beta_deg", "theta_deg"):
                iv = _vec(lm.get(joint), 2, f"body.limits.{joint}", errors)
                if iv is None:
                    rows = None
                    break
                if iv[0] > iv[1] or not (iv[0] <= 0.0 <= iv[1]):
                    errors.append(f"body.limits.{joint}: need min <= 0 <= max")
                    rows = None
                    break
                rows.append(iv)
            if rows is not None:
                limits = tuple(rows)
    return BodySpec(
        embodiment=defaults.embodiment,
        footprint=footprint,
        eye_height=eye_height if eye_height else defaults.eye_height,
        eye_forward_offset=offset if offset is not None else defaults.eye_forward_offset,
        start=start,
        head=head,
        cone_initial_deg=c_init if c_init is not None else defaults.cone_initial_deg,
        cone_min_deg=c_min if c_min is not None else defaults.cone_min_deg,
        cone_max_deg=c_max if c_max is not None else defaults.cone_max_deg,
        cone_widen_step_deg=c_step if c_step is not None else defaults.cone_widen_step_deg,
        limits_deg=limits,
    )


def _parse_agents(obj, errors) -> tuple[AgentSpec, ...]:
    if obj is None:
        errors.append("agents: at least one agent is required")
        return ()
    if not isinstance(obj, list):
        errors.append("agents: expected a list")
        return ()
    specs = []
    seen = set()
    for i, a in enumerate(obj):
        if not isinstance(a, dict):
            errors.append(f"agents[{i}]: expected a mapping")
            continue
        kind = a.get("kind")
        if kind not in AGENT_KINDS:
            errors.append(f"agents[{i}].kind: must be one of {AGENT_KINDS}, got {kind!r}")
            continue
        agent_id = str(a.get("id", kind))
        if agent_id in seen:
            errors.append(f"agents[{i}].id: duplicate agent id {agent_id!r}")
            continue
        seen.add(agent_id)
        rate = _int(a.get("rate"), f"agents[{i}].rate", errors, 1)
        if rate is not None and rate < 1:
            errors.append(f"agents[{i}].rate: rate must be >= 1, got {rate}")
            rate = 1
        active = a.get("active", True)
        if not isinstance(active, bool):
            errors.append(f"agents[{i}].active: expected true/false")
            active = True
        rays = _int(a.get("rays"), f"agents[{i}].rays", errors, 25)
        if rays is not None and rays < 1:
            errors.append(f"agents[{i}].rays: must be >= 1")
            rays = 25
        script = a.get("script")
        if script is not None and not isinstance(script, str):
            errors.append(f"agents[{i}].script: expected a file name")
            script = None
        specs.append(AgentSpec(kind=kind, id=agent_id, rate=rate or 1, active=active,
                               rays=rays or 25, script=script))
    return tuple(specs)


def _parse_run(obj, errors) -> RunSpec:
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        errors.append("run: not a mapping")
        return RunSpec()
    d = RunSpec()
    delta_pos = _num(obj.get("delta_pos"), "run.delta_pos", errors, d.delta_pos)
    delta_or = _num(obj.get("delta_or_deg"), "run.delta_or_deg", errors, d.delta_or_deg)
    for nm, v in (("run.delta_pos", delta_pos), ("run.delta_or_deg", delta_or)):
        if v is not None and v <= 0:
            errors.append(f"{nm}: must be positive")
    grad = obj.get("gradient") or {}
    gxy = _num(grad.get("delta_xy"), "run.gradient.delta_xy", errors, d.gradient_xy)
    gth = _num(grad.get("delta_theta_deg"), "run.gradient.delta_theta_deg", errors,
               d.gradient_theta_deg)
    conv = obj.get("convergence") or {}
    dist = _num(conv.get("distance"), "run.convergence.distance", errors, d.distance_tol)
    vis = _num(conv.get("visibility"), "run.convergence.visibility", errors, d.visibility_tol)
    align = _num(conv.get("align_deg"), "run.convergence.align_deg", errors, d.align_tol_deg)
    stall = _int(conv.get("stall_ticks"), "run.convergence.stall_ticks", errors, d.stall_ticks)
    for nm, v in (("run.gradient.delta_xy", gxy), ("run.gradient.delta_theta_deg", gth),
                  ("run.convergence.distance", dist), ("run.convergence.visibility", vis),
                  ("run.convergence.align_deg", align)):
        if v is not None and v <= 0:
            errors.append(f"{nm}: must be positive")
    if stall is not None and stall < 1:
        errors.append("run.convergence.stall_ticks: must be >= 1")
    max_ticks = _int(obj.get("max_ticks"), "run.max_ticks", errors, d.max_ticks)
    if max_ticks is not None and max_ticks < 1:
        errors.append("run.max_ticks: must be >= 1")
    tick_rate = _num(obj.get("tick_rate"), "run.tick_rate", errors, d.tick_rate)
    if tick_rate is not None and tick_rate <= 0:
        errors.append("run.tick_rate: must be positive")
    return RunSpec(
        delta_pos=delta_pos or d.delta_pos,
        delta_or_deg=delta_or or d.delta_or_deg,
        gradient_xy=gxy or d.gradient_xy,
        gradient_theta_deg=gth or d.gradient_theta_deg,
        distance_tol=dist or d.distance_tol,
        visibility_tol=vis or d.visibility_tol,
        align_tol_deg=align or d.align_tol_deg,
        stall_ticks=stall or d.stall_ticks,
        max_ticks=max_ticks or d.max_ticks,
        tick_rate=tick_rate or d.tick_rate,
    )


def _parse_targets(obj, errors) -> tuple[TargetEvent, ...]:
    if obj is None:
        return ()
    if not isinstance(obj, list):
        errors.append("intermediate_targets: expected a list")
        return ()
    events = []
    for i, e in enumerate(obj):
        if not isinstance(e, dict):
            errors.append(f"intermediate_targets[{i}]: expected a mapping")
            continue
        tick = _int(e.get("tick"), f"intermediate_targets[{i}].tick", errors)
        if tick is None or tick < 0:
            errors.append(f"intermediate_targets[{i}].tick: must be a non-negative integer")
            continue
        if e.get("clear"):
            events.append(TargetEvent(tick=tick, point=None))
            continue
        pt = _vec(e.get("point"), 3, f"intermediate_targets[{i}].point", errors)
        if pt is not None:
            events.append(TargetEvent(tick=tick, point=pt))
    return tuple(events)


def loads(text: str, name_hint: str = "scenario", base_dir: Path | None = None) -> ScenarioFile:
    try:
        obj = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError([f"parse error{where}: {getattr(exc, 'problem', exc)}"]) from exc
    if not isinstance(obj, dict):
        raise ScenarioError(["scenario: top level must be a mapping"])
    errors: list[str] = []
    name = str(obj.get("name", name_hint))
    scene = _parse_scene(obj.get("scene"), errors)
    body = _parse_body(obj.get("body"), errors)
    agents = _parse_agents(obj.get("agents"), errors)
    run = _parse_run(obj.get("run"), errors)
    targets = _parse_targets(obj.get("intermediate_targets"), errors)
    # cross checks that need several sections
    if body is not None and body.limits_deg is not None:
        for (lo, hi), joint in zip(body.limits_deg, ("alpha", "beta", "theta")):
            v = dict(zip(("alpha", "beta", "theta"), body.head))[joint]
            if not (lo <= v <= hi):
                errors.append(f"body.head.{joint}_deg: initial value {v} outside limits [{lo}, {hi}]")
    for a in agents:
        if a.script is not None and base_dir is not None:
            if not (base_dir / a.script).exists():
                errors.append(f"agent {a.id!r}: script file {a.script!r} not found")
    if errors or scene is None or body is None:
        if not errors:
            errors.append("scenario: incomplete")
        raise ScenarioError(errors)
    return ScenarioFile(
        name=name, scene=scene, body=body, agents=agents, run=run,
        intermediate_targets=targets, base_dir=base_dir,
    )


# ---------------------------------------------------------------------------
# locate / load / save

def bundled_dir() -> Path:
    return Path(resources.files("vantage") / "scenarios")


def bundled_names() -> list[str]:
    return sorted(p.stem for p in bundled_dir().glob("*.yaml"))


def resolve(source: str | Path) -> Path:
    p = Path(source)
    if p.exists():
        return p
    candidate = bundled_dir() / f"{source}.yaml"
    if candidate.exists():
        return candidate
    raise ScenarioError([f"scenario {source!r}: no such file or bundled scenario"])


def load(source: str | Path) -> ScenarioFile:
    path = resolve(source)
    return loads(path.read_text(encoding="utf-8"), name_hint=path.stem, base_dir=path.parent)


def to_obj(sf: ScenarioFile) -> dict:
    return {
        "name": sf.name,
        "scene": {
            "bounds": list(sf.scene.bounds),
            "target": list(sf.scene.target),
            "obstacles": [
                {"footprint": [list(p) for p in o.footprint], "z": list(o.z)}
                for o in sf.scene.obstacles
            ],
        },
        "body": {
            "embodiment": sf.body.embodiment,
            "footprint": [list(p) for p in sf.body.footprint],
            "eye_height": sf.body.eye_height,
            "eye_forward_offset": sf.body.eye_forward_offset,
            "start": {"x": sf.body.start[0], "y": sf.body.start[1], "theta_deg": sf.body.start[2]},
            "head": {"alpha_deg": sf.body.head[0], "beta_deg": sf.body.head[1],
                     "theta_deg": sf.body.head[2]},
            "cone": {
                "initial_deg": sf.body.cone_initial_deg,
                "min_deg": sf.body.cone_min_deg,
                "max_deg": sf.body.cone_max_deg,
                "widen_step_deg": sf.body.cone_widen_step_deg,
            },
            **(
                {"limits": {
                    "alpha_deg": list(sf.body.limits_deg[0]),
                    "beta_deg": list(sf.body.limits_deg[1]),
                    "theta_deg": list(sf.body.limits_deg[2]),
                }}
                if sf.body.limits_deg is not None else {}
            ),
        },
        "agents": [
            {
                "kind": a.kind, "id": a.id, "rate": a.rate, "active": a.active,
                **({"rays": a.rays} if a.kind == "visibility" else {}),
                **({"script": a.script} if a.script is not None else {}),
            }
            for a in sf.agents
        ],
        "run": {
            "delta_pos": sf.run.delta_pos,
            "delta_or_deg": sf.run.delta_or_deg,
            "gradient": {"delta_xy": sf.run.gradient_xy,
                         "delta_theta_deg": sf.run.gradient_theta_deg},
            "convergence": {
                "distance": sf.run.distance_tol,
                "visibility": sf.run.visibility_tol,
                "align_deg": sf.run.align_tol_deg,
                "stall_ticks": sf.run.stall_ticks,
            },
            "max_ticks": sf.run.max_ticks,
            "tick_rate": sf.run.tick_rate,
        },
        "intermediate_targets": [
            ({"tick": e.tick, "clear": True} if e.point is None
             else {"tick": e.tick, "point": list(e.point)})
            for e in sf.intermediate_targets
        ],
    }


def dumps(sf: ScenarioFile) -> str:
    return yaml.safe_dump(to_obj(sf), sort_keys=True, default_flow_style=None)


def save(sf: ScenarioFile, path: str | Path) -> None:
    Path(path).write_text(dumps(sf), encoding="utf-8")


# ---------------------------------------------------------------------------
# build into runtime objects

@dataclass
class Session:
    """One runnable instance of a scenario. Build a fresh one per run."""

    name: str
    scenario: ScenarioFile
    board: Blackboard
    agents: list[Agent]
    configs: list[AgentConfig]
    run_config: RunConfig
    schedule: list[tuple[int, Command]]

    def make_scheduler(self, workers: int = 1, with_schedule: bool = True) -> Scheduler:
        sched = Scheduler(self.board, self.agents, self.configs, self.run_config,
                          workers=workers)
        if with_schedule:
            sched.schedule_commands(self.schedule)
        return sched


def build(sf: ScenarioFile) -> Session:
    scene = Scene(
        obstacles=tuple(Prism(footprint=o.footprint, z_min=o.z[0], z_max=o.z[1])
                        for o in sf.scene.obstacles),
        target=sf.scene.target,
        bounds=sf.scene.bounds,
    )
    limits = None
    if sf.body.limits_deg is not None:
        limits = bd.JointLimits(
            alpha=tuple(v * DEG for v in sf.body.limits_deg[0]),
            beta=tuple(v * DEG for v in sf.body.limits_deg[1]),
            theta=tuple(v * DEG for v in sf.body.limits_deg[2]),
        )
    body_state = bd.BodyState(
        trunk=PlanarPose(sf.body.start[0], sf.body.start[1], sf.body.start[2] * DEG),
        head=bd.HeadJoints(alpha=sf.body.head[0] * DEG, beta=sf.body.head[1] * DEG,
                           theta=sf.body.head[2] * DEG),
        cone_half_angle=sf.body.cone_initial_deg * DEG,
        cone_limits=(sf.body.cone_min_deg * DEG, sf.body.cone_max_deg * DEG),
        embodiment=sf.body.embodiment,
        footprint=sf.body.footprint,
        eye_height=sf.body.eye_height,
        eye_forward_offset=sf.body.eye_forward_offset,
        joint_limits=limits,
    )
    gradient = GradientStep(delta_xy=sf.run.gradient_xy,
                            delta_theta=sf.run.gradient_theta_deg * DEG)
    run_config = RunConfig(
        normalization=NormalizationConstants(delta_pos=sf.run.delta_pos,
                                             delta_or=sf.run.delta_or_deg * DEG),
        gradient=gradient,
        convergence=ConvergenceConfig(
            d_tol=sf.run.distance_tol,
            visibility_tol=sf.run.visibility_tol,
            align_tol=sf.run.align_tol_deg * DEG,
            stall_ticks=sf.run.stall_ticks,
        ),
        max_ticks=sf.run.max_ticks,
        tick_rate=sf.run.tick_rate,
    )
    widen = sf.body.cone_widen_step_deg * DEG
    agents: list[Agent] = []
    configs: list[AgentConfig] = []
    for spec in sf.agents:
        if spec.kind == "attraction":
            agent: Agent = AttractionAgent(agent_id=spec.id)
        elif spec.kind == "repulsion":
            agent = RepulsionAgent(step=gradient, agent_id=spec.id)
        elif spec.kind == "head":
            agent = HeadOrientationAgent(agent_id=spec.id)
        elif spec.kind == "visibility":
            agent = VisibilityAgent(step=gradient, n_rays=spec.rays, widen_step=widen,
                                    agent_id=spec.id)
        else:
            script = None
            if spec.script is not None:
                base = sf.base_dir or Path.cwd()
                script = OperatorScript.load(base / spec.script)
            agent = OperatorAgent(script=script, window=spec.rate, agent_id=spec.id)
        agents.append(agent)
        configs.append(AgentConfig(agent_id=spec.id, rate=spec.rate, active=spec.active))
    board = Blackboard(body=body_state, scene=scene, agent_ids=[a.id for a in agents])
    schedule = [
        (e.tick, Command(kind="intermediate-target", point=e.point))
        for e in sf.intermediate_targets
    ]
    return Session(
        name=sf.name, scenario=sf, board=board, agents=agents, configs=configs,
        run_config=run_config, schedule=schedule,
    )


# ---------------------------------------------------------------------------
# metrics

@dataclass(frozen=True)
class RunMetrics:
    outcome: str
    ticks: int
    path_length: float
    max_head_deviation: tuple[float, float, float]  # |alpha|, |beta|, |theta| radians
    final_cone: float
    collision_ticks: int

    def to_obj(self) -> dict:
        return {
            "outcome": self.outcome,
            "ticks": self.ticks,
            "path_length_m": self.path_length,
            "max_head_deviation_rad": list(self.max_head_deviation),
            "final_cone_rad": self.final_cone,
            "collision_ticks": self.collision_ticks,
        }

    def to_text(self) -> str:
        a, b, t = self.max_head_deviation
        return "\n".join([
            f"outcome            {self.outcome}",
            f"ticks              {self.ticks}",
            f"path length        {self.path_length:.6f} m",
            f"max head deviation alpha {a:.4f}  beta {b:.4f}  theta {t:.4f} rad",
            f"final cone         {self.final_cone:.4f} rad",
            f"collision ticks    {self.collision_ticks}",
        ])


def reconstruct_states(trace: TickTrace, sf: ScenarioFile):
    """Yield the world state after every recorded tick, checked against the
    trace digests (an arithmetic replay: no agents are re-evaluated)."""
    from .blackboard import apply_contributions, state_digest
    from .blackboard_types import Contribution

    session = build(sf)
    state = session.board.snapshot()
    known = frozenset(a.id for a in session.agents)
    yield state
    for entry in trace.entries:
        for obj in entry.controls:
            if obj.get("kind") == "intermediate-target":
                pt = obj.get("point")
                state = replace(state, intermediate_target=None if pt is None else tuple(pt))
        batch = [
            Contribution(agent_id=f.agent_id, d_xy=f.norm.d_xy, d_theta=f.norm.d_theta,
                         d_head=f.norm.d_head, d_cone=f.norm.d_cone, tick=state.tick)
            for f in entry.firings
        ]
        state = apply_contributions(state, batch, known)
        if state_digest(state) != entry.digest:
            raise ScenarioError(
                [f"trace inconsistent with scenario at tick {entry.tick}: digest mismatch"])
        yield state


def metrics(trace: TickTrace, sf: ScenarioFile) -> RunMetrics:
    """Deterministic metrics from a trace, re-applying its contributions."""
    from . import geometry as geo

    states = reconstruct_states(trace, sf)
    state = next(states)
    path = 0.0
    dev = [abs(state.body.head.alpha), abs(state.body.head.beta), abs(state.body.head.theta)]
    collision_ticks = 0
    for nxt in states:
        path += math.hypot(nxt.body.trunk.x - state.body.trunk.x,
                           nxt.body.trunk.y - state.body.trunk.y)
        state = nxt
        dev[0] = max(dev[0], abs(state.body.head.alpha))
        dev[1] = max(dev[1], abs(state.body.head.beta))
        dev[2] = max(dev[2], abs(state.body.head.theta))
        coll = geo.total_collision_length(
            bd.world_footprint(state.body), state.scene, bd.body_z_range(state.body))
        if coll > 0.0:
            collision_ticks += 1
    return RunMetrics(
        outcome=trace.outcome or "unknown",
        ticks=len(trace.entries),
        path_length=path,
        max_head_deviation=(dev[0], dev[1], dev[2]),
        final_cone=state.body.cone_half_angle,
        collision_ticks=collision_ticks,
    )
