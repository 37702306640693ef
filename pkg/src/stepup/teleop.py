"""Live teleoperation service: one simulated robot driven by a trained policy.

The human supplies the command channels the policy expects at deployment
(goal direction, height target, terrain boolean); everything else is
proprioception from the simulator. JSON messages over a websocket, each
carrying a type tag and a monotonically increasing sequence number:

client -> server
    {"type": "command", "seq": n, "direction": -1..1,
     "height_delta": m, "bool": 0|1}
    {"type": "reset", "seq": n}
    {"type": "terrain", "seq": n, "kind": "<column kind>", "level": 0..11}

server -> client
    {"type": "hello", "seq": n, "protocol": 1, ...}
    {"type": "terrain", "seq": n, "kind": ..., "level": ..., "points": [[x, z], ...]}
    {"type": "state", "seq": n, ...}     at 25 Hz
    {"type": "error", "seq": n, "message": ...}

Commands are applied at control-tick boundaries, last writer wins.
Malformed messages get an error reply and the session continues. The
simulation keeps running with no clients connected.
"""

import asyncio
import json
import time

import numpy as np

from . import terrain as tr
from .config import load_config
from .env import CONTROL_DT, pack_observation
from .harness import load_policy
from .sim import PlanarEngine, RobotModel

PROTOCOL_VERSION = 1
SNAPSHOT_EVERY = 2          # control ticks per snapshot -> 25 Hz
DIRECTION_DEAD_BAND = 0.1   # matches the observation's saturation law


class PortInUse(OSError):
    pass


class TeleopSim:
    """Headless deployment sim: commands in, state snapshots out."""

    def __init__(self, config, policy, kind="stairs_family", level=2, seed=0):
        self.cfg = config
        self.policy = policy
        self.model = RobotModel.from_config(config.robot)
        self.engine = PlanarEngine(
            self.model, dt=config.sim.dt, gravity=config.sim.gravity,
            contact_stiffness=config.sim.contact_stiffness,
            contact_damping=config.sim.contact_damping)
        self.rng = np.random.default_rng(seed)
        self.command = {"direction": 0.0, "height_delta": 0.0, "bool": 0.0}
        self.tick = 0
        self.a_last = np.zeros((1, 6))
        self.contact_info = None
        self.set_terrain(kind, level)

    def set_terrain(self, kind, level):
        level = int(np.clip(level, 0, tr.NUM_LEVELS - 1))
        if kind == tr.STAIRS_FAMILY_COLUMN:
            self.field = tr.stairs_family_terrain(level, seed=7)
            default_bool = 1.0
        else:
            self.field = tr.generate_terrain(tr.TerrainKind(kind), level, seed=7)
            default_bool = 0.0
        self.kind, self.level = kind, level
        self.poly = tr.contact_polyline(self.field)[None]
        self.bucket = PlanarEngine.build_poly_bucket(self.poly)
        self.command["bool"] = default_bool
        self.reset()

    def reset(self):
        q = self.engine.static_equilibrium()
        if self.field.is_step_family:
            q[0] = float(self.field.edges_x[0]) - 1.0
        else:
            q[0] = self.field.extent / 2.0
        q[1] += float(tr._height_clamped(self.field, q[0])) + 0.003
        self.q = q[None].copy()
        self.qd = np.zeros((1, 9))
        self.a_last[:] = 0.0
        self.tick = 0

    def apply_command(self, direction=None, height_delta=None, bool_=None):
        if direction is not None:
            self.command["direction"] = float(np.clip(direction, -1.0, 1.0))
        if height_delta is not None:
            self.command["height_delta"] = float(np.clip(height_delta, -0.1, 0.1))
        if bool_ is not None:
            self.command["bool"] = 1.0 if bool_ else 0.0

    def observe(self):
        # commanded direction realized through the saturation law: a goal
        # one dead-band ahead reproduces the commanded value exactly
        goal_x = self.q[:, 0] + DIRECTION_DEAD_BAND * self.command["direction"]
        h_target = self.cfg.task.nominal_height + self.command["height_delta"]
        return pack_observation(self.q, self.qd, self.a_last, goal_x,
                                h_target, self.command["bool"])

    def step(self):
        """One 50 Hz control tick with policy mean actions."""
        obs = self.observe()
        action = np.asarray(self.policy.mean(obs), dtype=np.float64)
        action = np.clip(action, -self.cfg.task.action_clip,
                         self.cfg.task.action_clip)
        leg_targets = (self.model.default_pose
                       + self.cfg.task.action_scale_leg * action[:, :4])
        wheel_targets = self.cfg.task.action_scale_wheel * action[:, 4:]
        floor = lambda x: tr._height_clamped(self.field, x)
        mu = np.array([self.field.friction])
        for _ in range(self.cfg.sim.substeps):
            self.q, self.qd, info, diverged = self.engine.substep(
                self.q, self.qd, leg_targets, wheel_targets, self.poly, mu,
                floor, self.bucket)
        self.a_last[:] = action
        self.contact_info = info
        self.tick += 1

        terrain_h = float(tr._height_clamped(self.field, self.q[0, 0]))
        fell = (abs(self.q[0, 2]) > self.cfg.task.fall_pitch
                or self.q[0, 1] < terrain_h + self.cfg.task.fall_height_clearance
                or bool(diverged[0]))
        if fell:
            self.reset()

    def snapshot(self):
        info = self.contact_info
        wheels = []
        if info is not None:
            f = self.engine.fk(self.q)
            for w in range(2):
                wheels.append({
                    "x": round(float(f["p_wheel"][0, w, 0]), 5),
                    "z": round(float(f["p_wheel"][0, w, 1]), 5),
                    "contact": bool(info["contact"][0, w]),
                    "fn": round(float(info["normal_force"][0, w]), 2),
                    "ft": round(float(info["tangential_force"][0, w]), 2),
                })
        obs = self.observe()[0]
        return {
            "t": round(self.tick * CONTROL_DT, 4),
            "sim": {
                "x": round(float(self.q[0, 0]), 5),
                "z": round(float(self.q[0, 1]), 5),
                "pitch": round(float(self.q[0, 2]), 5),
                "vx": round(float(self.qd[0, 0]), 4),
                "vz": round(float(self.qd[0, 1]), 4),
                "pitch_rate": round(float(self.qd[0, 2]), 4),
                "joints": [round(float(v), 5) for v in self.q[0, [3, 4, 6, 7]]],
                "wheel_angles": [round(float(v), 4) for v in self.q[0, [5, 8]]],
            },
            "wheels": wheels,
            "command": dict(self.command),
            "obs": {
                "dir": round(float(obs[3]), 4),
                "h_target": round(float(obs[5]), 4),
                "b": float(obs[6]),
                "pitch_rate_scaled": round(float(obs[0]), 4),
            },
        }

    def terrain_message(self):
        points = tr.contact_polyline(self.field, guard=0.0)
        return {"kind": self.kind, "level": self.level,
                "points": [[round(float(x), 3), round(float(z), 4)]
                           for x, z in points]}


class TeleopService:
    """Websocket wrapper: real-time sim loop plus client sessions."""

    def __init__(self, config, policy, port, host="127.0.0.1", realtime=True):
        self.sim = TeleopSim(config, policy)
        self.port = port
        self.host = host
        self.realtime = realtime
        self.clients = set()
        self.seq = 0
        self._stop = asyncio.Event()

    def _next_seq(self):
        self.seq += 1
        return self.seq

    def _message(self, type_, **payload):
        return json.dumps({"type": type_, "seq": self._next_seq(), **payload})

    async def _broadcast(self, text):
        dead = []
        for ws in self.clients:
            try:
                await ws.send(text)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self.clients.discard(ws)

    async def _sim_loop(self):
        next_tick = time.monotonic()
        while not self._stop.is_set():
            self.sim.step()
            if self.sim.tick % SNAPSHOT_EVERY == 0 and self.clients:
                await self._broadcast(self._message("state", **self.sim.snapshot()))
            next_tick += CONTROL_DT
            delay = next_tick - time.monotonic() if self.realtime else 0.0
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_tick = time.monotonic()
                await asyncio.sleep(0)

    def _handle_message(self, text):
        """Returns an optional reply string; never raises on bad input."""
        try:
            msg = json.loads(text)
            if not isinstance(msg, dict):
                raise ValueError("message must be a JSON object")
            mtype = msg.get("type")
            if mtype == "command":
                self.sim.apply_command(direction=msg.get("direction"),
                                       height_delta=msg.get("height_delta"),
                                       bool_=msg.get("bool"))
                return None
            if mtype == "reset":
                self.sim.reset()
                return None
            if mtype == "terrain":
                self.sim.set_terrain(str(msg.get("kind", "stairs_family")),
                                     int(msg.get("level", 0)))
                return self._message("terrain", **self.sim.terrain_message())
            raise ValueError(f"unknown message type {mtype!r}")
        except (ValueError, TypeError, KeyError) as err:
            return self._message("error", message=str(err))

    async def _session(self, ws):
        self.clients.add(ws)
        try:
            await ws.send(self._message(
                "hello", protocol=PROTOCOL_VERSION, control_hz=50,
                snapshot_hz=50 / SNAPSHOT_EVERY))
            await ws.send(self._message("terrain", **self.sim.terrain_message()))
            async for text in ws:
                reply = self._handle_message(text)
                if reply is not None:
                    await ws.send(reply)
        except Exception:
            pass
        finally:
            self.clients.discard(ws)

    async def run(self, ready_event=None):
        import websockets
        try:
            async with websockets.serve(self._session, self.host, self.port):
                if ready_event is not None:
                    ready_event.set()
                await asyncio.gather(self._sim_loop())
        except OSError as err:
            raise PortInUse(f"port {self.port} unavailable: {err}") from err

    def stop(self):
        self._stop.set()


def teleop_service(checkpoint, port, config=None, host="127.0.0.1", realtime=True):
    """Blocking entry point: serve the policy at ws://host:port until killed."""
    config = config or load_config()
    policy, _, _ = load_policy(checkpoint)
    service = TeleopService(config, policy, port, host=host, realtime=realtime)
    try:
        asyncio.run(service.run())
    except KeyboardInterrupt:
        pass
    return 0
