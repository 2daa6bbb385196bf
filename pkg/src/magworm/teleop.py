"""Teleoperation server: steps the engine in real-time-scaled batches, streams
decimated frames over a WebSocket, and applies magnet-pose commands at step
granularity. One controlling client; later clients join read-only. Recording
captures (step, pose) commands plus the canonical trajectory hash so a headless
replay reproduces the session exactly.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import math
import os
import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from magworm.engine import StaticPose, SimulationError, fresh_run_state, run, update_frame_hash
from magworm.mechanics import node_curvatures
from magworm.magnetics import dipole_field

FRAME_RATE_CAP = 60.0   # messages per second to each client
ENGINE_TICK = 1.0 / 120.0


@dataclass
class _Command:
    kind: str
    payload: dict
    seq: int


class TeleopSession:
    """Engine thread plus thread-safe command queue and latest-frame buffer."""

    def __init__(self, scenario, rt_factor: float = 1.0,
                 log_path: str = "command_log.json"):
        self.scenario = scenario
        self.world = scenario.world
        self.dt = self.world.config.dt
        self.stride = self.world.config.record_stride
        self.rt_factor = rt_factor
        self.log_path = log_path

        magnet = self.world.magnet
        if magnet is None:
            raise ValueError("teleoperation needs a scenario with a magnet")
        self.pose_pos = magnet.position.copy()
        self.pose_axis = magnet.moment_axis.copy()
        self.home_pos = magnet.position.copy()
        self.home_axis = magnet.moment_axis.copy()

        self.rs = fresh_run_state(self.world)
        self.paused = True
        self.recording = False
        self.record_cmds: list[dict] = []
        self._hash = None
        self.last_log: dict | None = None
        self.fatal: str | None = None
        self.running = True
        self.rt_actual = 0.0

        self._queue: deque[_Command] = deque()
        self._lock = threading.Lock()
        self.frame_seq = 0
        self.latest_frame: dict | None = None
        self._publish_frame()

        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    # -- client side -----------------------------------------------------------

    def submit(self, kind: str, payload: dict, seq: int) -> str | None:
        """Queue a validated command; returns an error string or None."""
        if self.fatal:
            return f"engine fault: {self.fatal}"
        if kind == "set_magnet":
            try:
                pos = np.asarray(payload["pos"], dtype=float).reshape(3)
                axis = np.asarray(payload["axis"], dtype=float).reshape(3)
            except (KeyError, ValueError, TypeError):
                return "set_magnet needs numeric pos[3] and axis[3]"
            if not np.isfinite(pos).all() or not np.isfinite(axis).all():
                return "set_magnet pose must be finite"
            if np.linalg.norm(axis) <= 0.0:
                return "set_magnet axis must be nonzero"
        elif kind == "record":
            if "on" not in payload or not isinstance(payload["on"], bool):
                return "record needs boolean 'on'"
        elif kind == "reset":
            if self.recording:
                return "stop recording before reset"
        elif kind in ("pause", "resume"):
            pass
        elif kind == "load_scenario":
            return "load_scenario is not supported on a live session; restart the server"
        else:
            return f"unknown command type {kind!r}"
        with self._lock:
            self._queue.append(_Command(kind, payload, seq))
        return None

    # -- engine side -------------------------------------------------------------

    def _drain(self):
        with self._lock:
            cmds = list(self._queue)
            self._queue.clear()
        for cmd in cmds:
            if cmd.kind == "set_magnet":
                self.pose_pos = np.asarray(cmd.payload["pos"], dtype=float).reshape(3)
                axis = np.asarray(cmd.payload["axis"], dtype=float).reshape(3)
                self.pose_axis = axis / np.linalg.norm(axis)
                if self.recording:
                    self.record_cmds.append({
                        "step": self.rs.steps_done,
                        "position": [float(v) for v in self.pose_pos],
                        "axis": [float(v) for v in self.pose_axis]})
                if self.paused:
                    self._publish_frame()
            elif cmd.kind == "pause":
                self.paused = True
                self._publish_frame()
            elif cmd.kind == "resume":
                self.paused = False
            elif cmd.kind == "reset":
                self._reset()
            elif cmd.kind == "record":
                self._set_recording(cmd.payload["on"])

    def _reset(self):
        self.rs = fresh_run_state(self.world)
        self.pose_pos = self.home_pos.copy()
        self.pose_axis = self.home_axis.copy()
        self._publish_frame()

    def _set_recording(self, on: bool):
        if on and not self.recording:
            self._reset()
            self.recording = True
            self.record_cmds = []
            self._hash = hashlib.sha256()
            update_frame_hash(self._hash, 0.0, self.rs.rod_state.positions,
                              self.pose_pos, self.pose_axis, self.rs.cargo_x)
        elif not on and self.recording:
            self.recording = False
            if self.rs.steps_done % self.stride != 0:
                update_frame_hash(self._hash, self.rs.steps_done * self.dt,
                                  self.rs.rod_state.positions, self.pose_pos,
                                  self.pose_axis, self.rs.cargo_x)
            self.last_log = {
                "scenario": self.scenario.name,
                "record_stride": self.stride,
                "dt": self.dt,
                "final_step": self.rs.steps_done,
                "commands": self.record_cmds,
                "hash": self._hash.hexdigest(),
            }
            try:
                with open(self.log_path, "w") as fh:
                    json.dump(self.last_log, fh, indent=2)
            except OSError:
                pass

    def _advance(self, n_steps: int):
        base = self.rs.steps_done
        ctrl = StaticPose(self.pose_pos, self.pose_axis)
        traj = run(self.world, ctrl, n_steps * self.dt, record_stride=self.stride,
                   start=self.rs)
        self.rs = traj.meta["final_run_state"]
        if self.recording:
            for k in range(1, traj.n_frames):
                step = int(round(traj.t[k] / self.dt))
                if step > base and step % self.stride == 0:
                    update_frame_hash(self._hash, traj.t[k], traj.x[k],
                                      traj.magnet_pos[k], traj.magnet_axis[k],
                                      traj.cargo_x[k])

    def _loop(self):
        last_wall = time.perf_counter()
        while self.running:
            self._drain()
            if self.paused or self.fatal:
                last_wall = time.perf_counter()
                time.sleep(0.005)
                continue
            tick_start = time.perf_counter()
            sim_budget = self.rt_factor * ENGINE_TICK
            n_steps = max(1, int(round(sim_budget / self.dt)))
            try:
                self._advance(n_steps)
            except SimulationError as exc:
                self.fatal = str(exc)
                self.recording = False
                self._publish_frame()
                continue
            self._publish_frame()
            elapsed = time.perf_counter() - tick_start
            self.rt_actual = (n_steps * self.dt) / max(elapsed, ENGINE_TICK)
            time.sleep(max(0.0, ENGINE_TICK - elapsed))
            last_wall = tick_start
        _ = last_wall

    def _publish_frame(self):
        st = self.rs.rod_state
        x = st.positions
        kappa = float(np.max(node_curvatures(x))) if x.shape[0] >= 3 else 0.0
        head_speed = float(np.linalg.norm(st.velocities[-1]))
        magnet = self.world.magnet.with_pose(self.pose_pos, self.pose_axis)
        try:
            b_head = float(np.linalg.norm(dipole_field(magnet, x[-1])))
        except ValueError:
            b_head = float("nan")
        self.latest_frame = {
            "type": "frame",
            "t": self.rs.steps_done * self.dt,
            "nodes": [[float(v) for v in row] for row in x],
            "magnet": {"pos": [float(v) for v in self.pose_pos],
                       "axis": [float(v) for v in self.pose_axis]},
            "cargo": [{"pos": [float(v) for v in self.rs.cargo_x[i]],
                       "vel": [float(v) for v in self.rs.cargo_v[i]]}
                      for i in range(self.rs.cargo_x.shape[0])],
            "metrics": {"kappa_max": kappa, "head_speed": head_speed,
                        "B_at_head": b_head, "rt_factor": self.rt_actual},
            "paused": self.paused,
            "recording": self.recording,
        }
        self.frame_seq += 1

    def scene_message(self) -> dict:
        scene = self.world.scene
        return {
            "type": "scene",
            "id": scene.name,
            "sdf_mesh": [[[float(p[0]), float(p[1])] for p in line]
                         for line in scene.outline],
            "body_radius": [float(r) for r in self.world.rod.body_radius],
        }

    def stop(self):
        self.running = False
        self._thread.join(timeout=2.0)


def replay_hash(scenario, log: dict) -> str:
    """Headless replay of a recorded command log; returns the trajectory hash."""
    from magworm.engine import ExternalController
    magnet = scenario.world.magnet
    cmds = [(int(c["step"]), np.array(c["position"], dtype=float),
             np.array(c["axis"], dtype=float)) for c in log["commands"]]
    ctrl = ExternalController(magnet.position, magnet.moment_axis, cmds)
    duration = int(log["final_step"]) * scenario.world.config.dt
    traj = run(scenario.world, ctrl, duration,
               record_stride=int(log.get("record_stride", scenario.world.config.record_stride)))
    return traj.hash_hex()


_FALLBACK_PAGE = """<!doctype html>
<html><head><title>magworm teleop</title></head>
<body><h3>magworm teleop server</h3>
<p>No UI bundle found. Build the frontend (frontend/ directory: npm install &&
npm run build) and pass --ui frontend/dist, or connect your own client to
<code>/ws</code>.</p></body></html>"""


def create_app(scenario, rt_factor: float = 1.0, ui_dir: str | None = None,
               log_path: str = "command_log.json"):
    session = TeleopSession(scenario, rt_factor=rt_factor, log_path=log_path)
    app = FastAPI(title="magworm teleop", on_shutdown=[session.stop])
    app.state.session = session
    controller_lock = {"holder": None}

    @app.get("/healthz")
    def healthz():
        return {"ok": session.fatal is None, "fatal": session.fatal}

    @app.get("/command-log")
    def command_log():
        if session.last_log is None:
            return JSONResponse({"error": "no recording finished yet"}, status_code=404)
        return session.last_log

    @app.post("/replay")
    async def replay(log: dict):
        if session.recording:
            return JSONResponse({"error": "stop recording before replaying"}, status_code=409)
        if log.get("scenario") not in (None, scenario.name):
            return JSONResponse({"error": f"log was recorded on scenario "
                                          f"{log.get('scenario')!r}, server runs "
                                          f"{scenario.name!r}"}, status_code=400)
        try:
            h = await asyncio.to_thread(replay_hash, scenario, log)
        except (KeyError, ValueError, TypeError) as exc:
            return JSONResponse({"error": f"malformed log: {exc}"}, status_code=400)
        return {"hash": h}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        is_controller = controller_lock["holder"] is None
        if is_controller:
            controller_lock["holder"] = ws
        await ws.send_text(json.dumps(session.scene_message()))
        await ws.send_text(json.dumps({"type": "role",
                                       "controlling": is_controller}))
        stop = asyncio.Event()

        async def sender():
            last_seq = -1
            fatal_sent = False
            while not stop.is_set():
                if session.fatal and not fatal_sent:
                    await ws.send_text(json.dumps({"type": "fatal", "msg": session.fatal}))
                    fatal_sent = True
                    stop.set()
                    break
                if session.frame_seq != last_seq and session.latest_frame is not None:
                    last_seq = session.frame_seq
                    await ws.send_text(json.dumps(session.latest_frame))
                await asyncio.sleep(1.0 / FRAME_RATE_CAP)

        async def receiver():
            counter = 0
            while not stop.is_set():
                try:
                    raw = await ws.receive_text()
                except WebSocketDisconnect:
                    stop.set()
                    return
                counter += 1
                try:
                    msg = json.loads(raw)
                    kind = msg.pop("type")
                except (json.JSONDecodeError, KeyError, AttributeError, TypeError):
                    await ws.send_text(json.dumps(
                        {"type": "err", "seq": counter, "msg": "malformed command"}))
                    continue
                seq = int(msg.pop("seq", counter))
                if not is_controller and kind != "ping":
                    await ws.send_text(json.dumps(
                        {"type": "err", "seq": seq, "msg": "read-only client"}))
                    continue
                err = session.submit(kind, msg, seq)
                if err is None:
                    await ws.send_text(json.dumps({"type": "ack", "seq": seq}))
                else:
                    await ws.send_text(json.dumps({"type": "err", "seq": seq, "msg": err}))

        try:
            recv_task = asyncio.create_task(receiver())
            send_task = asyncio.create_task(sender())
            await asyncio.wait({recv_task, send_task}, return_when=asyncio.FIRST_COMPLETED)
            stop.set()
            for task in (recv_task, send_task):
                task.cancel()
        finally:
            if controller_lock["holder"] is ws:
                controller_lock["holder"] = None

    ui = ui_dir
    if ui is None:
        cand = os.path.join(os.getcwd(), "frontend", "dist")
        ui = cand if os.path.isdir(cand) else None
    if ui is None:
        bundled = os.path.join(os.path.dirname(__file__), "data", "ui")
        ui = bundled if os.path.isdir(bundled) and os.listdir(bundled) else None
    if ui:
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    else:
        @app.get("/")
        def index():
            return HTMLResponse(_FALLBACK_PAGE)

    return app


def serve_teleop(scenario, port: int = 8000, rt_factor: float = 1.0,
                 ui_dir: str | None = None):
    """Blocking server entry point used by the CLI."""
    import uvicorn
    app = create_app(scenario, rt_factor=rt_factor, ui_dir=ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
