"""Interactive session host: paced scheduler plus a websocket protocol.

All messages are JSON text frames with a `v` schema field. The first
message a client receives is a full state snapshot (including the static
scene); afterwards it gets one `state` and one `trace-event` per tick and
an `ended` message when the run finishes. Exactly one client at a time
(the oldest connection) holds steering authority; messages from the
others are counted and ignored.
"""

from __future__ import annotations

import asyncio
import json
import math
import socket
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import body as bd
from . import scenario as scn
from .errors import InputError, ProtocolError
from .scheduler import ConvergenceFlags, Scheduler, TickEntry
from .blackboard_types import WorldState

PROTOCOL_VERSION = 1

_QUEUE_LIMIT = 256


@dataclass
class ClientHandle:
    id: str
    loop: asyncio.AbstractEventLoop
    queue: "asyncio.Queue[str | None]" = field(
        default_factory=lambda: asyncio.Queue(maxsize=_QUEUE_LIMIT))


def _offer(q: "asyncio.Queue[str | None]", payload: str | None) -> None:
    # drop the oldest snapshot rather than block the simulation
    if q.full():
        try:
            q.get_nowait()
        except asyncio.QueueEmpty:
            pass
    q.put_nowait(payload)


class SessionHost:
    """Owns the scheduler thread and fans state out to websocket clients."""

    def __init__(self, sf: scn.ScenarioFile, tick_rate: float | None = None):
        self.scenario = sf
        self.session = scn.build(sf)
        self.scheduler: Scheduler = self.session.make_scheduler()
        self.tick_rate = tick_rate if tick_rate is not None else sf.run.tick_rate
        self._lock = threading.Lock()
        self._clients: list[ClientHandle] = []
        self._next_client = 1
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.outcome: str | None = None
        self.malformed = 0
        self._stall_streak = 0
        self._last_digest: str | None = None
        self._last_state_obj: dict = self._state_obj(
            self.scheduler.board.snapshot(), None)

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="session", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        result = self.scheduler.run(
            stop_on_stall=False,
            on_tick=self._on_tick,
            pace_seconds=1.0 / self.tick_rate if self.tick_rate > 0 else 0.0,
            stop_event=self._stop,
        )
        self.outcome = result.outcome
        self._broadcast(json.dumps({
            "v": PROTOCOL_VERSION, "type": "ended",
            "outcome": result.outcome, "tick": result.ticks,
        }))

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    # -- state fan-out -----------------------------------------------------

    def _state_obj(self, state: WorldState, entry: TickEntry | None) -> dict:
        flags = None
        try:
            from .scheduler import convergence_flags
            flags = convergence_flags(state, self.scheduler.run_config.convergence)
        except Exception:
            pass
        b = state.body
        eye = bd.eye_point(b)
        axis = bd.vision_axis(b)
        agents = {}
        last_by_agent = {}
        if entry is not None:
            for f in entry.firings:
                last_by_agent[f.agent_id] = {
                    "xy": list(f.norm.d_xy), "theta": f.norm.d_theta,
                    "head": list(f.norm.d_head), "cone": f.norm.d_cone,
                }
        for a in self.scheduler.agents:
            cfg = self.scheduler.configs[a.id]
            agents[a.id] = {
                "rate": cfg.rate,
                "active": cfg.active,
                "last": last_by_agent.get(a.id),
            }
        obj = {
            "v": PROTOCOL_VERSION,
            "type": "state",
            "tick": state.tick,
            "body": {
                "x": b.trunk.x, "y": b.trunk.y, "theta": b.trunk.theta,
                "head": {"alpha": b.head.alpha, "beta": b.head.beta, "theta": b.head.theta},
                "cone": b.cone_half_angle,
                "cone_limits": list(b.cone_limits),
                "embodiment": b.embodiment,
                "footprint": [list(p) for p in bd.world_footprint(b)],
                "eye": list(eye),
                "axis": list(axis),
            },
            "delta": {"pos": self.scheduler.norm.delta_pos, "or": self.scheduler.norm.delta_or},
            "agents": agents,
            "intermediate_target": (
                None if state.intermediate_target is None else list(state.intermediate_target)),
            "outcome": self.outcome,
            "diagnostics": {"malformed": self.malformed, "clients": len(self._clients)},
        }
        if flags is not None:
            obj["flags"] = {
                "converged": flags.converged,
                "distance_ok": flags.distance_ok,
                "visible": flags.visible,
                "aligned": flags.aligned,
                "collision_free": flags.collision_free,
                "distance": flags.distance,
                "occluded_length": flags.occluded_length,
                "misalignment": flags.misalignment,
                "collision_length": flags.collision_length,
                "stalled": self._stall_streak >= self.scheduler.run_config.convergence.stall_ticks,
            }
        return obj

    def _scene_obj(self) -> dict:
        sc = self.session.board.scene
        return {
            "bounds": list(sc.bounds),
            "target": list(sc.target),
            "obstacles": [
                {"footprint": [list(p) for p in o.footprint], "z": [o.z_min, o.z_max]}
                for o in sc.obstacles
            ],
        }

    def _on_tick(self, entry: TickEntry, state: WorldState, flags: ConvergenceFlags) -> None:
        if entry.digest == self._last_digest:
            self._stall_streak += 1
        else:
            self._stall_streak = 0
        self._last_digest = entry.digest
        state_obj = self._state_obj(state, entry)
        with self._lock:
            self._last_state_obj = state_obj
            clients = list(self._clients)
        trace_obj = {
            "v": PROTOCOL_VERSION,
            "type": "trace-event",
            "tick": entry.tick,
            "controls": list(entry.controls),
            "firings": [
                {"agent": f.agent_id,
                 "norm": {"xy": list(f.norm.d_xy), "theta": f.norm.d_theta,
                          "head": list(f.norm.d_head), "cone": f.norm.d_cone}}
                for f in entry.firings
            ],
            "errors": list(entry.errors),
            "digest": entry.digest,
        }
        trace_payload = json.dumps(trace_obj)
        for i, c in enumerate(clients):
            payload = json.dumps({**state_obj, "authority": i == 0, "client": c.id})
            c.loop.call_soon_threadsafe(_offer, c.queue, payload)
            c.loop.call_soon_threadsafe(_offer, c.queue, trace_payload)

    def _broadcast(self, payload: str) -> None:
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            c.loop.call_soon_threadsafe(_offer, c.queue, payload)

    # -- client management -------------------------------------------------

    def attach(self, loop: asyncio.AbstractEventLoop) -> tuple[ClientHandle, str]:
        with self._lock:
            handle = ClientHandle(id=f"c{self._next_client}", loop=loop)
            self._next_client += 1
            self._clients.append(handle)
            authority = self._clients[0] is handle
            snapshot = dict(self._last_state_obj)
        snapshot.update({
            "scene": self._scene_obj(),
            "name": self.scenario.name,
            "authority": authority,
            "client": handle.id,
            "outcome": self.outcome,
        })
        return handle, json.dumps(snapshot)

    def detach(self, handle: ClientHandle) -> None:
        promoted: ClientHandle | None = None
        with self._lock:
            had_authority = self._clients and self._clients[0] is handle
            if handle in self._clients:
                self._clients.remove(handle)
            if had_authority and self._clients:
                promoted = self._clients[0]
            state_obj = dict(self._last_state_obj)
        if promoted is not None:
            payload = json.dumps({**state_obj, "authority": True, "client": promoted.id})
            promoted.loop.call_soon_threadsafe(_offer, promoted.queue, payload)

    def _has_authority(self, handle: ClientHandle) -> bool:
        with self._lock:
            return bool(self._clients) and self._clients[0] is handle

    # -- inbound messages ---------------------------------------------------

    def handle_message(self, handle: ClientHandle, text: str) -> None:
        try:
            obj = json.loads(text)
            if not isinstance(obj, dict) or obj.get("v") != PROTOCOL_VERSION:
                raise InputError("bad envelope")
            mtype = obj["type"]
            if not self._has_authority(handle):
                return  # observers may watch, not steer
            if mtype == "steer":
                vals = [float(obj["vx"]), float(obj["vy"]), float(obj["omega"])]
                if not all(math.isfinite(v) for v in vals):
                    raise InputError("non-finite steer")
                self.scheduler.steer(*vals)
            elif mtype == "pause":
                self.scheduler.set_active(str(obj["agent"]), False)
            elif mtype == "work":
                self.scheduler.set_active(str(obj["agent"]), True)
            elif mtype == "rate":
                self.scheduler.set_rate(str(obj["agent"]), int(obj["value"]))
            elif mtype == "delta":
                value = float(obj["value"])
                if not math.isfinite(value):
                    raise InputError("non-finite delta")
                self.scheduler.set_normalization(str(obj["which"]), value)
            elif mtype == "intermediate-target":
                target = obj.get("target")
                if target is None:
                    self.scheduler.set_intermediate_target(None)
                else:
                    pt = (float(target["x"]), float(target["y"]), float(target["z"]))
                    if not all(math.isfinite(c) for c in pt):
                        raise InputError("non-finite target")
                    self.scheduler.set_intermediate_target(pt)
            elif mtype == "end":
                self._stop.set()
            else:
                raise InputError(f"unknown message type {mtype!r}")
        except (KeyError, TypeError, ValueError, InputError, ProtocolError,
                json.JSONDecodeError):
            self.malformed += 1


def make_app(host: SessionHost, frontend_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="vantage session")

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        loop = asyncio.get_running_loop()
        handle, snapshot = host.attach(loop)

        async def pump():
            while True:
                payload = await handle.queue.get()
                if payload is None:
                    return
                await websocket.send_text(payload)

        pump_task = asyncio.create_task(pump())
        try:
            await websocket.send_text(snapshot)
            while True:
                text = await websocket.receive_text()
                host.handle_message(handle, text)
        except WebSocketDisconnect:
            pass
        finally:
            host.detach(handle)
            pump_task.cancel()

    if frontend_dir is not None and (frontend_dir / "index.html").exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")
    return app


def _default_frontend_dir() -> Path | None:
    # repository layout: frontend/ beside the installed package's repo root;
    # only mount it once the console is actually built
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "frontend"
        if (candidate / "index.html").exists() and (candidate / "dist" / "main.js").exists():
            return candidate
    return None


def serve_session(
    sf: scn.ScenarioFile,
    host: str = "127.0.0.1",
    port: int = 8700,
    tick_rate: float | None = None,
) -> None:
    """Run the paced session and serve the websocket protocol (and the
    console, when its build is present) until the run ends or SIGINT."""
    import uvicorn

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    finally:
        probe.close()
    session_host = SessionHost(sf, tick_rate=tick_rate)
    app = make_app(session_host, frontend_dir=_default_frontend_dir())
    session_host.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        session_host.stop()
