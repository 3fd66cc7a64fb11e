"""Partner policies for the non-agent tray axis.

Scripted partners steer the ball along the layout's channel waypoints with a
tilt-target PD loop, pushing their commands through a teleoperation delay
line. The live adapter exposes a human's tilt target (written by the serve
layer into a latest-command cell) through the same interface, so the
training loop cannot tell scripted and human partners apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import AXIS_ABOUT_X, AXIS_ABOUT_Y, EnvConfig
from .layout import TrayLayout, Wall
from .physics import PhysConfig

PARTNER_KINDS = ("expert", "novice", "random", "frozen", "live")

# tilt-target steering gains: desired tilt = STEER_P*err - STEER_D*vel
STEER_P = 3.0
STEER_D = 0.5


@dataclass(frozen=True)
class PartnerSpec:
    kind: str = "expert"
    kp: float = 6.0              # PD gain on tilt error, 1/rad
    kd: float = 1.5              # PD gain on tilt rate, s/rad
    noise_std: float = 0.5       # novice only: stddev of command noise
    reaction_delay: float = 0.2  # s, teleop delay line
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PARTNER_KINDS:
            raise ValueError(f"unknown partner kind {self.kind!r}")
        if self.kp < 0 or self.kd < 0:
            raise ValueError("PD gains must be >= 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.reaction_delay < 0:
            raise ValueError("reaction_delay must be >= 0")


@dataclass
class PartnerCommand:
    value: float                 # tilt target or rate, in [-1, 1]
    issued_at: float             # s


def pd_command(target_tilt: float, current_tilt: float, current_rate: float,
               kp: float, kd: float) -> float:
    """Rate command in [-1, 1] from a tilt error and the current tilt rate."""
    return min(1.0, max(-1.0, kp * (target_tilt - current_tilt) - kd * current_rate))


class DelayLine:
    """FIFO of commands, each becoming effective ``delay`` seconds after issue.

    read() returns the newest matured command and holds it until a newer one
    matures; before anything matures it returns 0. Time must not regress.
    """

    def __init__(self, delay: float):
        if delay < 0:
            raise ValueError("delay must be >= 0")
        self.delay = delay
        self._queue: list[PartnerCommand] = []
        self._held = 0.0
        self._last_now = -math.inf

    def _check_time(self, now: float) -> None:
        if now < self._last_now - 1e-9:
            raise ValueError(f"time regressed: {now} < {self._last_now}")
        self._last_now = max(self._last_now, now)

    def push(self, value: float, now: float) -> None:
        self._check_time(now)
        self._queue.append(PartnerCommand(float(value), now))

    def read(self, now: float) -> float:
        self._check_time(now)
        matured = 0
        for cmd in self._queue:
            if now - cmd.issued_at >= self.delay - 1e-9:
                matured += 1
            else:
                break
        if matured:
            self._held = self._queue[matured - 1].value
            del self._queue[:matured]
        return self._held

    def clear(self) -> None:
        self._queue.clear()
        self._held = 0.0
        self._last_now = -math.inf

    def get_state(self) -> dict:
        return {
            "queue": [[c.value, c.issued_at] for c in self._queue],
            "held": self._held,
            "last_now": None if self._last_now == -math.inf else self._last_now,
        }

    def set_state(self, d: dict) -> None:
        self._queue = [PartnerCommand(v, t) for v, t in d["queue"]]
        self._held = d["held"]
        self._last_now = -math.inf if d["last_now"] is None else d["last_now"]


class ChannelGuide:
    """Waypoints through a staggered-wall serpentine layout.

    The walls split the tray into parallel channels; each wall leaves one
    gate, the wider free interval beside it. The waypoint chain runs channel
    by channel from the start side to the goal: move to the gate, hold there
    while crossing, then head for the next gate. Works for layouts whose
    walls are all horizontal (channels stacked in y) or all vertical
    (channels side by side in x); anything else collapses to the goal alone.
    """

    def __init__(self, layout: TrayLayout):
        self.layout = layout
        self.reach_radius = 2.0 * layout.goal_radius
        horizontal = [w for w in layout.walls
                      if (w.x_max - w.x_min) >= (w.y_max - w.y_min)]
        if layout.walls and len(horizontal) == len(layout.walls):
            self.gate_axis, self.band_axis = 0, 1   # gates along x, channels in y
        elif layout.walls and not horizontal:
            self.gate_axis, self.band_axis = 1, 0   # gates along y, channels in x
        else:
            self.gate_axis = None
            return
        ga, ba = self.gate_axis, self.band_axis
        half = (layout.width / 2, layout.height / 2)
        lo = lambda w, ax: (w.x_min, w.y_min)[ax]
        hi = lambda w, ax: (w.x_max, w.y_max)[ax]
        walls = sorted(layout.walls, key=lambda w: 0.5 * (lo(w, ba) + hi(w, ba)))
        edges = [-half[ba]]
        self.gates: list[float] = []
        self.gate_half_width: list[float] = []
        for w in walls:
            low_side = (lo(w, ga) + half[ga], 0.5 * (-half[ga] + lo(w, ga)))
            high_side = (half[ga] - hi(w, ga), 0.5 * (hi(w, ga) + half[ga]))
            width, gate = max(low_side, high_side)
            self.gates.append(gate)
            self.gate_half_width.append(width / 2)
            edges.append(0.5 * (lo(w, ba) + hi(w, ba)))
        edges.append(half[ba])
        self.band_mids = [0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])]
        self.wall_centers = edges[1:-1]

    def _point(self, gate_val: float, band_val: float) -> np.ndarray:
        p = np.empty(2)
        p[self.gate_axis] = gate_val
        p[self.band_axis] = band_val
        return p

    def waypoints(self) -> list[np.ndarray]:
        if self.gate_axis is None:
            return [self.layout.goal_center.copy()]
        pts = []
        for i, gate in enumerate(self.gates):
            pts.append(self._point(gate, self.band_mids[i]))
            pts.append(self._point(gate, self.band_mids[i + 1]))
        pts.append(self.layout.goal_center.copy())
        return pts

    def band_of(self, pos: np.ndarray) -> int:
        return sum(1 for c in self.wall_centers if pos[self.band_axis] > c)

    def waypoint(self, pos: np.ndarray) -> np.ndarray:
        """Next channel target for the current ball position."""
        if self.gate_axis is None:
            return self.layout.goal_center.copy()
        band = self.band_of(pos)
        if band >= len(self.gates):
            return self.layout.goal_center.copy()
        gate = self.gates[band]
        aligned = abs(pos[self.gate_axis] - gate) <= max(
            self.gate_half_width[band] - self.layout.ball_radius, 0.01)
        mid = self.band_mids[band + 1] if aligned else self.band_mids[band]
        return self._point(gate, mid)


class ScriptedPartner:
    """Waypoint-following PD steering on one tray axis (the expert).

    ``axis`` is the tray rotation axis this partner commands; rotation about
    y drives the ball along x, rotation about x drives it along -y.
    """

    def __init__(self, spec: PartnerSpec, layout: TrayLayout, phys_cfg: PhysConfig,
                 env_cfg: EnvConfig, axis: str = AXIS_ABOUT_Y,
                 rng: np.random.Generator | None = None):
        if axis not in (AXIS_ABOUT_X, AXIS_ABOUT_Y):
            raise ValueError(f"bad axis {axis!r}")
        self.spec = spec
        self.layout = layout
        self.phys_cfg = phys_cfg
        self.env_cfg = env_cfg
        self.axis = axis
        self.guide = ChannelGuide(layout)
        self.delay = DelayLine(spec.reaction_delay)
        self.rng = rng if rng is not None else np.random.default_rng(spec.seed)
        self._prev_tilt: float | None = None

    def reset(self) -> None:
        self.delay.clear()
        self._prev_tilt = None

    def _denormalize(self, obs: np.ndarray):
        pos = np.array([obs[0] * self.layout.width / 2,
                        obs[1] * self.layout.height / 2])
        vel = np.array([obs[2] * self.env_cfg.v_norm, obs[3] * self.env_cfg.v_norm])
        rot = np.array([obs[4] * self.phys_cfg.theta_max,
                        obs[5] * self.phys_cfg.theta_max])
        return pos, vel, rot

    def desired_tilt(self, obs: np.ndarray) -> float:
        """Tilt target (radians, for this partner's rotation axis)."""
        pos, vel, _ = self._denormalize(obs)
        wp = self.guide.waypoint(pos)
        theta = self.phys_cfg.theta_max
        if self.axis == AXIS_ABOUT_Y:            # drives ball x, same sign
            raw = STEER_P * (wp[0] - pos[0]) - STEER_D * vel[0]
            return min(theta, max(-theta, raw))
        raw = STEER_P * (wp[1] - pos[1]) - STEER_D * vel[1]
        return -min(theta, max(-theta, raw))     # +rot_x pushes the ball to -y

    def _rate_command(self, obs: np.ndarray) -> float:
        _, _, rot = self._denormalize(obs)
        tilt = rot[0] if self.axis == AXIS_ABOUT_X else rot[1]
        if self._prev_tilt is None:
            rate = 0.0
        else:
            rate = (tilt - self._prev_tilt) / self.env_cfg.control_interval
        self._prev_tilt = tilt
        return pd_command(self.desired_tilt(obs), tilt, rate,
                          self.spec.kp, self.spec.kd)

    def command(self, obs: np.ndarray, now: float) -> float:
        self.delay.push(self._rate_command(obs), now)
        return self.delay.read(now)

    def get_state(self) -> dict:
        return {"delay": self.delay.get_state(), "prev_tilt": self._prev_tilt,
                "rng": self.rng.bit_generator.state}

    def set_state(self, d: dict) -> None:
        self.delay.set_state(d["delay"])
        self._prev_tilt = d["prev_tilt"]
        self.rng.bit_generator.state = d["rng"]


TELEOP_DELAY = 0.2  # inherent rig latency, matches the agent-side 200 ms


class NoisyPartner(ScriptedPartner):
    """Expert plus Gaussian command noise and a human reaction delay.

    The reaction delay stacks on top of the inherent teleop latency every
    partner has, so reaction_delay = 0 degenerates to the expert exactly.
    """

    def __init__(self, spec: PartnerSpec, layout: TrayLayout, phys_cfg: PhysConfig,
                 env_cfg: EnvConfig, axis: str = AXIS_ABOUT_Y,
                 rng: np.random.Generator | None = None):
        super().__init__(spec, layout, phys_cfg, env_cfg, axis, rng)
        self.delay = DelayLine(TELEOP_DELAY + spec.reaction_delay)

    def command(self, obs: np.ndarray, now: float) -> float:
        raw = self._rate_command(obs) + self.spec.noise_std * self.rng.standard_normal()
        self.delay.push(min(1.0, max(-1.0, raw)), now)
        return self.delay.read(now)


class RandomPartner:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def reset(self) -> None:
        pass

    def command(self, obs, now) -> float:
        return float(self.rng.uniform(-1.0, 1.0))

    def get_state(self) -> dict:
        return {"rng": self.rng.bit_generator.state}

    def set_state(self, d: dict) -> None:
        self.rng.bit_generator.state = d["rng"]


class FrozenPartner:
    def reset(self) -> None:
        pass

    def command(self, obs, now) -> float:
        return 0.0

    def get_state(self) -> dict:
        return {}

    def set_state(self, d: dict) -> None:
        pass


class LivePartner:
    """Human tilt targets from a latest-command cell, delayed then PD-tracked.

    ``cell`` must expose read() -> float returning the current (staleness
    decayed) normalized tilt target. The PD loop converts the delayed target
    into a rate command exactly like the scripted partners.
    """

    def __init__(self, spec: PartnerSpec, phys_cfg: PhysConfig, env_cfg: EnvConfig,
                 cell, axis: str = AXIS_ABOUT_Y):
        self.spec = spec
        self.phys_cfg = phys_cfg
        self.env_cfg = env_cfg
        self.cell = cell
        self.axis = axis
        self.delay = DelayLine(spec.reaction_delay)
        self._prev_tilt: float | None = None

    def reset(self) -> None:
        self.delay.clear()
        self._prev_tilt = None

    def command(self, obs: np.ndarray, now: float) -> float:
        target = min(1.0, max(-1.0, float(self.cell.read())))
        self.delay.push(target, now)
        delayed = self.delay.read(now)
        theta = self.phys_cfg.theta_max
        tilt = (obs[4] if self.axis == AXIS_ABOUT_X else obs[5]) * theta
        if self._prev_tilt is None:
            rate = 0.0
        else:
            rate = (tilt - self._prev_tilt) / self.env_cfg.control_interval
        self._prev_tilt = tilt
        return pd_command(delayed * theta, tilt, rate, self.spec.kp, self.spec.kd)

    def get_state(self) -> dict:
        return {"delay": self.delay.get_state(), "prev_tilt": self._prev_tilt}

    def set_state(self, d: dict) -> None:
        self.delay.set_state(d["delay"])
        self._prev_tilt = d["prev_tilt"]


def partner_axis(env_cfg: EnvConfig) -> str:
    return AXIS_ABOUT_Y if env_cfg.agent_axis == AXIS_ABOUT_X else AXIS_ABOUT_X


def make_partner(spec: PartnerSpec, layout: TrayLayout, phys_cfg: PhysConfig,
                 env_cfg: EnvConfig, rng: np.random.Generator | None = None,
                 cell=None):
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    axis = partner_axis(env_cfg)
    if spec.kind == "expert":
        return ScriptedPartner(spec, layout, phys_cfg, env_cfg, axis, rng)
    if spec.kind == "novice":
        return NoisyPartner(spec, layout, phys_cfg, env_cfg, axis, rng)
    if spec.kind == "random":
        return RandomPartner(rng)
    if spec.kind == "frozen":
        return FrozenPartner()
    if spec.kind == "live":
        if cell is None:
            raise ValueError("live partner needs a command cell")
        return LivePartner(spec, phys_cfg, env_cfg, cell, axis)
    raise ValueError(f"unknown partner kind {spec.kind!r}")
