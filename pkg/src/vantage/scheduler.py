"""Deterministic tick loop with rates of activity, live retuning and a
replayable trace.

An agent with rate r fires on every tick t with t mod r == 0, so smaller
rates mean higher priority. Retuning commands (pause/work, rate, delta,
steering, intermediate targets) are queued and drained only at tick
boundaries; each tick records the commands it absorbed, every firing and
the resulting state digest, which is enough to replay a run bit-exactly.
"""

from __future__ import annotations

import json
import math
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from . import body as bd
from .agents import Agent, OperatorAgent, SteerSample
from .blackboard import Blackboard, normalize, state_digest
from .blackboard_types import Contribution, NormalizationConstants, WorldState
from .errors import InputError, ProtocolError
from .geometry import GradientStep, Vec3, segment_occluded, total_collision_length

CONVERGED = "converged"
STALLED = "stalled"
MAX_TICKS = "max_ticks"
ENDED = "ended"


@dataclass
class AgentConfig:
    """Activity rate (firing period in ticks) and pause/work flag."""

    agent_id: str
    rate: int = 1
    active: bool = True

    def __post_init__(self):
        if self.rate < 1:
            raise InputError(f"agent {self.agent_id!r}: rate must be >= 1, got {self.rate}")


@dataclass(frozen=True)
class ConvergenceConfig:
    d_tol: float = 0.2          # metres, plan view
    visibility_tol: float = 1e-6  # metres of occluded sight line
    align_tol: float = 0.01     # radians
    stall_ticks: int = 200

    def __post_init__(self):
        if not (self.d_tol > 0 and self.visibility_tol > 0 and self.align_tol > 0):
            raise InputError("convergence tolerances must be positive")
        if self.stall_ticks < 1:
            raise InputError("stall_ticks must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    normalization: NormalizationConstants = NormalizationConstants()
    gradient: GradientStep = GradientStep()
    convergence: ConvergenceConfig = ConvergenceConfig()
    max_ticks: int = 5000
    tick_rate: float = 30.0  # interactive pacing only; headless runs are unpaced


# ---------------------------------------------------------------------------
# commands

@dataclass(frozen=True)
class Command:
    """A retuning or input event, applied at a tick boundary."""

    kind: str  # rate | active | delta | steer | intermediate-target
    agent_id: str | None = None
    value: float | int | bool | None = None
    which: str | None = None            # for delta: "pos" | "or"
    steer: tuple[float, float, float] | None = None
    point: Vec3 | None = None

    def to_obj(self) -> dict:
        obj: dict = {"kind": self.kind}
        if self.agent_id is not None:
            obj["agent"] = self.agent_id
        if self.value is not None:
            obj["value"] = self.value
        if self.which is not None:
            obj["which"] = self.which
        if self.steer is not None:
            obj["steer"] = list(self.steer)
        if self.kind == "intermediate-target":
            obj["point"] = None if self.point is None else list(self.point)
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "Command":
        point = obj.get("point")
        steer = obj.get("steer")
        return cls(
            kind=obj["kind"],
            agent_id=obj.get("agent"),
            value=obj.get("value"),
            which=obj.get("which"),
            steer=None if steer is None else tuple(steer),
            point=None if point is None else tuple(point),
        )


# ---------------------------------------------------------------------------
# trace

@dataclass(frozen=True)
class Firing:
    agent_id: str
    raw: Contribution
    norm: Contribution


@dataclass(frozen=True)
class TickEntry:
    tick: int
    controls: tuple[dict, ...]
    firings: tuple[Firing, ...]
    errors: tuple[dict, ...]
    digest: str


def _contribution_obj(c: Contribution) -> dict:
    return {
        "xy": [c.d_xy[0], c.d_xy[1]],
        "theta": c.d_theta,
        "head": [c.d_head[0], c.d_head[1]],
        "cone": c.d_cone,
    }


def _contribution_from_obj(agent_id: str, tick: int, obj: dict) -> Contribution:
    return Contribution(
        agent_id=agent_id,
        d_xy=tuple(obj["xy"]),
        d_theta=obj["theta"],
        d_head=tuple(obj["head"]),
        d_cone=obj["cone"],
        tick=tick,
    )


@dataclass
class TickTrace:
    """Per-tick record of commands, firings and state digests."""

    entries: list[TickEntry] = field(default_factory=list)
    outcome: str | None = None

    def digests(self) -> list[str]:
        return [e.digest for e in self.entries]

    def write(self, path: str | Path, name: str = "") -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"kind": "header", "v": 1, "name": name}) + "\n")
            for e in self.entries:
                rec = {
                    "kind": "tick",
                    "tick": e.tick,
                    "controls": list(e.controls),
                    "firings": [
                        {"agent": f.agent_id, "raw": _contribution_obj(f.raw),
                         "norm": _contribution_obj(f.norm)}
                        for f in e.firings
                    ],
                    "errors": list(e.errors),
                    "digest": e.digest,
                }
                fh.write(json.dumps(rec) + "\n")
            if self.outcome is not None:
                fh.write(json.dumps({"kind": "end", "outcome": self.outcome}) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "TickTrace":
        trace = cls()
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                kind = rec.get("kind")
                if kind == "tick":
                    tick = rec["tick"]
                    firings = tuple(
                        Firing(
                            agent_id=f["agent"],
                            raw=_contribution_from_obj(f["agent"], tick, f["raw"]),
                            norm=_contribution_from_obj(f["agent"], tick, f["norm"]),
                        )
                        for f in rec["firings"]
                    )
                    trace.entries.append(
                        TickEntry(
                            tick=tick,
                            controls=tuple(rec.get("controls", [])),
                            firings=firings,
                            errors=tuple(rec.get("errors", [])),
                            digest=rec["digest"],
                        )
                    )
                elif kind == "end":
                    trace.outcome = rec.get("outcome")
        return trace


# ---------------------------------------------------------------------------
# convergence

@dataclass(frozen=True)
class ConvergenceFlags:
    distance_ok: bool
    visible: bool
    aligned: bool
    collision_free: bool
    distance: float
    occluded_length: float
    misalignment: float
    collision_length: float

    @property
    def converged(self) -> bool:
        return self.distance_ok and self.visible and self.aligned and self.collision_free


def convergence_flags(state: WorldState, conv: ConvergenceConfig) -> ConvergenceFlags:
    """Success test against the true scene target (never the intermediate one)."""
    b = state.body
    target = state.scene.target
    dist = math.hypot(target[0] - b.trunk.x, target[1] - b.trunk.y)
    eye = bd.eye_point(b)
    if math.dist(eye, target) <= 1e-9:
        occ = 0.0
        mis = 0.0
    else:
        occ = segment_occluded(eye, target, state.scene)
        mis = bd.misalignment(b, state.scene)
    coll = total_collision_length(bd.world_footprint(b), state.scene, bd.body_z_range(b))
    return ConvergenceFlags(
        distance_ok=dist <= conv.d_tol,
        visible=occ <= conv.visibility_tol,
        aligned=mis <= conv.align_tol,
        collision_free=coll == 0.0,
        distance=dist,
        occluded_length=occ,
        misalignment=mis,
        collision_length=coll,
    )


# ---------------------------------------------------------------------------
# scheduler

@dataclass
class RunResult:
    outcome: str
    ticks: int
    trace: TickTrace


class Scheduler:
    """Owns the write path: snapshots once per tick, fires due agents in
    registration order, applies the normalized batch in one transaction."""

    def __init__(
        self,
        board: Blackboard,
        agents: Iterable[Agent],
        configs: Iterable[AgentConfig],
        run_config: RunConfig = RunConfig(),
        workers: int = 1,
    ):
        self.board = board
        self.agents = list(agents)
        self.configs: dict[str, AgentConfig] = {}
        for cfg in configs:
            if cfg.agent_id in self.configs:
                raise InputError(f"duplicate agent config {cfg.agent_id!r}")
            self.configs[cfg.agent_id] = replace(cfg)
        agent_ids = [a.id for a in self.agents]
        if sorted(agent_ids) != sorted(self.configs):
            raise InputError("agent configs do not match registered agents")
        if set(agent_ids) - board.agent_ids:
            raise InputError("blackboard does not know every registered agent")
        self.run_config = run_config
        self.norm = run_config.normalization
        self.workers = max(1, int(workers))
        self.trace = TickTrace()
        self._commands: "queue.Queue[Command]" = queue.Queue()
        self._schedule: list[tuple[int, Command]] = []
        self._pool = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        for a in self.agents:
            if isinstance(a, OperatorAgent):
                a.window = self.configs[a.id].rate

    def schedule_commands(self, schedule: Iterable[tuple[int, Command]]) -> None:
        """Pre-plan commands to submit at given tick boundaries (live runs
        only; replay gets them from the trace instead)."""
        self._schedule = sorted(schedule, key=lambda item: item[0])

    # -- command surface ------------------------------------------------

    def submit(self, command: Command) -> None:
        if command.agent_id is not None and command.agent_id not in self.configs:
            raise ProtocolError(f"unknown agent {command.agent_id!r}")
        if command.kind == "rate" and int(command.value) < 1:
            raise InputError("rate must be >= 1")
        if command.kind == "delta" and float(command.value) <= 0:
            raise InputError("normalization constants must be positive")
        self._commands.put(command)

    def set_rate(self, agent_id: str, rate: int) -> None:
        self.submit(Command(kind="rate", agent_id=agent_id, value=int(rate)))

    def set_active(self, agent_id: str, flag: bool) -> None:
        self.submit(Command(kind="active", agent_id=agent_id, value=bool(flag)))

    def set_normalization(self, which: str, value: float) -> None:
        if which not in ("pos", "or"):
            raise InputError("normalization selector must be 'pos' or 'or'")
        self.submit(Command(kind="delta", which=which, value=float(value)))

    def steer(self, vx: float, vy: float, omega: float) -> None:
        self.submit(Command(kind="steer", steer=(float(vx), float(vy), float(omega))))

    def set_intermediate_target(self, p: Vec3 | None) -> None:
        self.submit(Command(kind="intermediate-target", point=p))

    # -- tick loop --------------------------------------------------------

    def _apply_command(self, cmd: Command, tick: int) -> None:
        if cmd.kind == "rate":
            self.configs[cmd.agent_id].rate = int(cmd.value)
            for a in self.agents:
                if a.id == cmd.agent_id and isinstance(a, OperatorAgent):
                    a.window = int(cmd.value)
        elif cmd.kind == "active":
            self.configs[cmd.agent_id].active = bool(cmd.value)
        elif cmd.kind == "delta":
            if cmd.which == "pos":
                self.norm = replace(self.norm, delta_pos=float(cmd.value))
            else:
                self.norm = replace(self.norm, delta_or=float(cmd.value))
        elif cmd.kind == "steer":
            vx, vy, om = cmd.steer
            for a in self.agents:
                if isinstance(a, OperatorAgent):
                    a.live.push(SteerSample(tick, vx, vy, om))
        elif cmd.kind == "intermediate-target":
            self.board.set_intermediate_target(cmd.point)
        else:
            raise ProtocolError(f"unknown command kind {cmd.kind!r}")

    def _drain_commands(self, tick: int) -> tuple[dict, ...]:
        applied = []
        while True:
            try:
                cmd = self._commands.get_nowait()
            except queue.Empty:
                break
            self._apply_command(cmd, tick)
            applied.append(cmd.to_obj())
        return tuple(applied)

    def tick(self) -> TickEntry:
        snap = self.board.snapshot()
        t = snap.tick
        while self._schedule and self._schedule[0][0] <= t:
            self.submit(self._schedule.pop(0)[1])
        controls = self._drain_commands(t)
        if controls:
            snap = self.board.snapshot()  # intermediate-target commands change state
        due = [
            a for a in self.agents
            if self.configs[a.id].active and t % self.configs[a.id].rate == 0
        ]
        errors: list[dict] = []

        def evaluate(agent: Agent) -> Contribution | Exception:
            try:
                return agent.step(snap)
            except Exception as exc:  # agent failure: contribute zero, record
                return exc

        if self._pool is not None and len(due) > 1:
            results = list(self._pool.map(evaluate, due))
        else:
            results = [evaluate(a) for a in due]

        firings: list[Firing] = []
        batch: list[Contribution] = []
        for agent, res in zip(due, results):
            if isinstance(res, Exception):
                errors.append({"agent": agent.id, "error": f"{type(res).__name__}: {res}"})
                raw = Contribution.zero(agent.id, t)
            else:
                raw = res
            norm = normalize(raw, self.norm)
            firings.append(Firing(agent_id=agent.id, raw=raw, norm=norm))
            batch.append(norm)
        new_state = self.board.apply(batch)
        entry = TickEntry(
            tick=t,
            controls=controls,
            firings=tuple(firings),
            errors=tuple(errors),
            digest=state_digest(new_state),
        )
        self.trace.entries.append(entry)
        return entry

    def run(
        self,
        stop_on_stall: bool = True,
        on_tick: Callable[[TickEntry, WorldState, ConvergenceFlags], None] | None = None,
        pace_seconds: float = 0.0,
        stop_event: threading.Event | None = None,
    ) -> RunResult:
        conv = self.run_config.convergence
        streak = 0
        prev_digest: str | None = None
        outcome = MAX_TICKS
        while True:
            state = self.board.snapshot()
            flags = convergence_flags(state, conv)
            if flags.converged:
                outcome = CONVERGED
                break
            if stop_event is not None and stop_event.is_set():
                outcome = ENDED
                break
            if stop_on_stall and streak >= conv.stall_ticks:
                outcome = STALLED
                break
            if state.tick >= self.run_config.max_ticks:
                outcome = MAX_TICKS
                break
            start = time.monotonic()
            entry = self.tick()
            if entry.digest == prev_digest:
                streak += 1
            else:
                streak = 0
            prev_digest = entry.digest
            if on_tick is not None:
                on_tick(entry, self.board.snapshot(), convergence_flags(self.board.snapshot(), conv))
            if pace_seconds > 0.0:
                remaining = pace_seconds - (time.monotonic() - start)
                if remaining > 0:
                    time.sleep(remaining)
        self.trace.outcome = outcome
        return RunResult(outcome=outcome, ticks=self.board.snapshot().tick, trace=self.trace)

    def shutdown(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)


# ---------------------------------------------------------------------------
# replay

@dataclass(frozen=True)
class ReplayVerdict:
    ok: bool
    ticks_checked: int
    first_divergence: int | None = None
    expected: str | None = None
    actual: str | None = None

    def message(self) -> str:
        if self.ok:
            return f"replay ok: {self.ticks_checked} ticks, zero divergences"
        return (
            f"divergence at tick {self.first_divergence}: "
            f"expected digest {self.expected}, got {self.actual}"
        )


def replay(trace: TickTrace, scheduler: Scheduler) -> ReplayVerdict:
    """Re-execute a recorded run on a fresh scheduler and compare digests.

    The scheduler must be built from the same scenario (initial state,
    agents, scripts); recorded commands are re-submitted at the boundaries
    where the original run absorbed them.
    """
    for i, expected in enumerate(trace.entries):
        for obj in expected.controls:
            scheduler.submit(Command.from_obj(obj))
        entry = scheduler.tick()
        if entry.digest != expected.digest:
            return ReplayVerdict(
                ok=False,
                ticks_checked=i + 1,
                first_divergence=expected.tick,
                expected=expected.digest,
                actual=entry.digest,
            )
    return ReplayVerdict(ok=True, ticks_checked=len(trace.entries))
