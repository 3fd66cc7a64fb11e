"""Realtime bridge for a live human partner.

Runs the training harness at true wall-clock cadence (one agent step per
control interval), streams render states to connected browser clients over
a websocket, and feeds the human's tilt targets into the partner channel.

Wire protocol (JSON text messages):

    server -> client  hello          {protocol_version, layout, control_axis,
                                      schedule}
    server -> client  config         {config, role}
    server -> client  state          {t_sim, ball, vel, tray, step_index,
                                      phase, block, last_reward}
    server -> client  episode_result {trial_id, reached, steps_used, score}
    server -> client  error          {code, text}
    client -> server  cmd            {tilt in [-1, 1], client_time}

Exactly one client controls the human axis (the first to connect; promoted
on disconnect); everyone else observes. Commands older than the staleness
window decay to zero at read time, so a vanished client levels the tray.

Three activities cooperate: the control loop (this module's pacing hooks
inside harness.train), the websocket I/O threads, and a 30 Hz broadcaster.
They share the latest-command cell and a state snapshot under one lock; the
control loop never blocks on I/O.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import threading
import time
from pathlib import Path

from websockets.http11 import Headers, Response
from websockets.sync.server import serve as ws_serve

from .config import RunConfig, config_to_dict
from .harness import TrainHooks, train
from .layout import default_layout, load_layout
from .partner import partner_axis

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
STALENESS_WINDOW = 1.0     # s without a fresh command before decay to zero
BROADCAST_HZ = 30.0
CADENCE_TOLERANCE = 0.02   # s deviation allowed per control step

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


class SessionStopped(Exception):
    """Raised inside the control loop when the operator stops the session."""


class CommandCell:
    """Latest-wins tilt target with staleness decay, thread safe."""

    def __init__(self, staleness: float = STALENESS_WINDOW, clock=time.monotonic):
        self.staleness = staleness
        self.clock = clock
        self._lock = threading.Lock()
        self._tilt = 0.0
        self._stamp = None

    def write(self, tilt: float) -> float:
        tilt = min(1.0, max(-1.0, float(tilt)))
        with self._lock:
            self._tilt = tilt
            self._stamp = self.clock()
        return tilt

    def read(self) -> float:
        with self._lock:
            if self._stamp is None or self.clock() - self._stamp > self.staleness:
                return 0.0
            return self._tilt

    def age(self) -> float | None:
        with self._lock:
            return None if self._stamp is None else self.clock() - self._stamp


class LiveServer:
    """Owns the websocket server, broadcaster and control threads."""

    def __init__(self, cfg: RunConfig, port: int, out_dir,
                 static_dir=None, host: str = "0.0.0.0"):
        if cfg.partner.kind != "live":
            cfg = dataclasses.replace(
                cfg, partner=dataclasses.replace(cfg.partner, kind="live"))
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.static_dir = Path(static_dir) if static_dir else None
        self.layout = load_layout(cfg.layout_path) if cfg.layout_path \
            else default_layout()
        self.cell = CommandCell()
        self.host = host
        self._lock = threading.Lock()
        self._clients: dict[int, object] = {}
        self._controller: int | None = None
        self._next_client_id = 0
        self.phase = "waiting"
        self.block = 0
        self.step_index = 0
        self.last_reward = 0.0
        self._latest_phys = None
        self.stop_event = threading.Event()
        self.finished = threading.Event()
        self.result = None
        self.error = None
        self.step_intervals: list[float] = []
        self.cadence_violations = 0
        self._interval_start = None
        self._next_deadline = None
        self._server = ws_serve(self._handle_client, host, port,
                                process_request=self._process_request)
        self.port = self._server.socket.getsockname()[1]
        self._threads: list[threading.Thread] = []

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        for name, fn in (("ws-accept", self._server.serve_forever),
                         ("broadcast", self._broadcast_loop),
                         ("control", self._control_loop)):
            t = threading.Thread(target=fn, name=name, daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self) -> None:
        self.stop_event.set()

    def join(self, timeout: float | None = None) -> None:
        self.finished.wait(timeout)

    def shutdown(self) -> None:
        self.stop_event.set()
        self._server.shutdown()
        self.finished.wait(5.0)

    # -- HTTP / static assets --------------------------------------------------

    def _process_request(self, connection, request):
        if request.headers.get("Upgrade", "").lower() == "websocket":
            return None  # continue with the websocket handshake
        path = request.path.split("?")[0]
        if self.static_dir is not None:
            rel = "index.html" if path == "/" else path.lstrip("/")
            target = (self.static_dir / rel).resolve()
            if target.is_file() and str(target).startswith(str(self.static_dir.resolve())):
                ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
                body = target.read_bytes()
                return Response(200, "OK", Headers([
                    ("Content-Type", ctype),
                    ("Content-Length", str(len(body)))]), body)
            body = b"not found"
            return Response(404, "Not Found", Headers([
                ("Content-Type", "text/plain"),
                ("Content-Length", str(len(body)))]), body)
        body = (f"traymaze live server: connect a UI to ws://<host>:{self.port}/"
                ).encode()
        return Response(200, "OK", Headers([
            ("Content-Type", "text/plain"),
            ("Content-Length", str(len(body)))]), body)

    # -- websocket clients -----------------------------------------------------

    def _send(self, conn, message: dict) -> bool:
        try:
            conn.send(json.dumps(message))
            return True
        except Exception:
            return False

    def _handle_client(self, conn) -> None:
        with self._lock:
            client_id = self._next_client_id
            self._next_client_id += 1
            self._clients[client_id] = conn
            if self._controller is None:
                self._controller = client_id
            role = "control" if self._controller == client_id else "observe"
        sched = self.cfg.schedule
        self._send(conn, {
            "type": "hello",
            "protocol_version": PROTOCOL_VERSION,
            "layout": self.layout.to_dict(),
            "control_axis": partner_axis(self.cfg.env),
            "schedule": {
                "total_interaction_steps": sched.total_interaction_steps,
                "updates_per_block": sched.updates_per_block,
                "block_size": sched.block_size,
                "eval_trials": sched.eval_trials,
                "step_cap": sched.step_cap,
                "control_interval": self.cfg.env.control_interval,
            },
        })
        self._send(conn, {"type": "config", "role": role,
                          "config": config_to_dict(self.cfg)})
        try:
            for raw in conn:
                self._handle_message(client_id, conn, raw)
        except Exception:
            pass
        finally:
            self._drop_client(client_id)

    def _drop_client(self, client_id: int) -> None:
        promoted = None
        with self._lock:
            self._clients.pop(client_id, None)
            if self._controller == client_id:
                self._controller = min(self._clients) if self._clients else None
                promoted = self._clients.get(self._controller)
        if promoted is not None:
            self._send(promoted, {"type": "config", "role": "control",
                                  "config": config_to_dict(self.cfg)})

    def _handle_message(self, client_id: int, conn, raw) -> None:
        try:
            msg = json.loads(raw)
            mtype = msg.get("type")
        except (json.JSONDecodeError, AttributeError):
            self._send(conn, {"type": "error", "code": "bad_json",
                              "text": "message is not a JSON object"})
            return
        if mtype != "cmd":
            self._send(conn, {"type": "error", "code": "unknown_type",
                              "text": f"unsupported message type {mtype!r}"})
            return
        if self._controller != client_id:
            self._send(conn, {"type": "error", "code": "not_controller",
                              "text": "only the controlling client may send cmd"})
            return
        tilt = msg.get("tilt")
        if not isinstance(tilt, (int, float)) or tilt != tilt:
            self._send(conn, {"type": "error", "code": "bad_payload",
                              "text": "cmd.tilt must be a finite number"})
            return
        self.cell.write(float(tilt))

    # -- broadcasting ----------------------------------------------------------

    def _snapshot_state(self) -> dict | None:
        with self._lock:
            phys = self._latest_phys
            if phys is None:
                return None
            return {
                "type": "state",
                "t_sim": phys.t_sim,
                "ball": [float(phys.ball_pos[0]), float(phys.ball_pos[1])],
                "vel": [float(phys.ball_vel[0]), float(phys.ball_vel[1])],
                "tray": [float(phys.tray_rot[0]), float(phys.tray_rot[1])],
                "step_index": self.step_index,
                "phase": self.phase,
                "block": self.block,
                "last_reward": self.last_reward,
            }

    def _broadcast(self, message: dict) -> None:
        with self._lock:
            conns = list(self._clients.items())
        for cid, conn in conns:
            if not self._send(conn, message):
                self._drop_client(cid)

    def _broadcast_loop(self) -> None:
        period = 1.0 / BROADCAST_HZ
        while not self.finished.is_set():
            msg = self._snapshot_state()
            if msg is not None:
                self._broadcast(msg)
            time.sleep(period)

    # -- control loop ----------------------------------------------------------

    def _has_controller(self) -> bool:
        with self._lock:
            return self._controller is not None

    def _gate(self) -> None:
        if self.stop_event.is_set():
            raise SessionStopped()
        if not self._has_controller():
            prev = self.phase
            self.phase = "waiting"
            while not self._has_controller():
                if self.stop_event.is_set():
                    raise SessionStopped()
                time.sleep(0.02)
            self.phase = prev
        self._next_deadline = None  # re-anchor the cadence after a pause

    def _pace(self, kind: str, step_idx: int) -> None:
        if self.stop_event.is_set():
            raise SessionStopped()
        interval = self.cfg.env.control_interval
        now = time.monotonic()
        if self._next_deadline is None:
            self._next_deadline = now
        else:
            lag = now - self._next_deadline
            if lag > interval:  # fell badly behind: re-anchor, log once
                log.warning("control loop fell behind by %.0f ms", lag * 1e3)
                self.cadence_violations += 1
                self._next_deadline = now
            else:
                while True:
                    remaining = self._next_deadline - time.monotonic()
                    if remaining <= 0:
                        break
                    time.sleep(min(remaining, 0.01))
        start = time.monotonic()
        if self._interval_start is not None:
            delta = start - self._interval_start
            self.step_intervals.append(delta)
            if abs(delta - interval) > CADENCE_TOLERANCE:
                self.cadence_violations += 1
                log.warning("control step %s cadence off: %.0f ms", step_idx,
                            delta * 1e3)
        self._interval_start = start
        self._next_deadline += interval
        if kind == "train":
            self.step_index = step_idx

    def _substep(self, phys, i: int) -> None:
        with self._lock:
            self._latest_phys = phys
        # spread the substeps across the wall-clock interval in small batches
        if self._interval_start is not None and (i + 1) % 5 == 0:
            target = self._interval_start + (i + 1) * self.cfg.phys.dt_sub
            while True:
                remaining = target - time.monotonic()
                if remaining <= 0:
                    break
                time.sleep(min(remaining, 0.005))

    def _on_record(self, rec: dict) -> None:
        if rec["type"] == "eval_trial":
            self._broadcast({
                "type": "episode_result",
                "trial_id": rec["trial_index"],
                "reached": rec["reached"],
                "steps_used": rec["steps_used"],
                "score": rec["score"],
            })

    def _on_phase(self, phase: str) -> None:
        self.phase = {"updating": "training"}.get(phase, phase)
        self._next_deadline = None
        self._interval_start = None

    def _on_reward(self, kind: str, reward: float, step: int) -> None:
        self.last_reward = reward
        if kind == "eval":
            self.step_index = step

    def _control_loop(self) -> None:
        hooks = TrainHooks(pace=self._pace, substep=self._substep,
                           gate=self._gate, on_record=self._on_record,
                           on_phase=self._on_phase, on_reward=self._on_reward)
        try:
            self._gate()  # wait for the first controller before stepping
            self.phase = "training"
            self.result = train(self.cfg, self.out_dir, hooks=hooks,
                                live_cell=self.cell)
            self.phase = "finished"
        except SessionStopped:
            self.phase = "stopped"
        except Exception as exc:  # pragma: no cover - surfaced to callers
            self.error = exc
            self.phase = "error"
            log.exception("live session failed")
        finally:
            time.sleep(2.0 / BROADCAST_HZ)  # let the final state go out
            self.finished.set()
            self._server.shutdown()


def serve(cfg: RunConfig, port: int, out_dir, static_dir=None) -> None:
    """Blocking entry point: run a live session until the schedule completes
    or the operator interrupts."""
    server = LiveServer(cfg, port, out_dir, static_dir=static_dir)
    server.start()
    print(f"live session on ws://{server.host}:{server.port}/ "
          f"(static assets: {static_dir or 'none'})")
    try:
        while not server.finished.wait(0.5):
            pass
    except KeyboardInterrupt:
        print("stopping session")
        server.shutdown()
    if server.error is not None:
        raise server.error
