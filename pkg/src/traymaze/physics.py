"""Rigid-ball-on-a-tilting-tray dynamics.

Everything in this module is a pure function over small value types: no
globals, no hidden state, safe to call from any thread. Positions live in
the tray frame with the origin at the tray centre. ``tray_rot`` stores
(rotation about x, rotation about y) in radians. Sign convention: positive
rotation about the y axis accelerates the ball toward +x, positive rotation
about the x axis accelerates it toward -y.

Integration is semi-implicit Euler: velocity first, then position, then
collision resolution. Collisions are resolved against axis-aligned walls one
axis at a time (x before y) so that corner contacts are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .layout import TrayLayout


@dataclass(frozen=True)
class PhysConfig:
    """Dynamics constants. Defaults give a stable desk-scale rolling ball."""

    gravity: float = 9.81          # m/s^2
    rolling_factor: float = 5.0 / 7.0  # solid rolling sphere, translational share
    damping: float = 0.3           # viscous drag, 1/s
    restitution: float = 0.3       # wall bounce, in [0, 1]
    dt_sub: float = 0.005          # integration substep, s
    theta_max: float = 0.2         # hard tilt limit per axis, rad
    omega_max: float = 0.5         # tilt rate at full command, rad/s

    def __post_init__(self):
        if not self.dt_sub > 0:
            raise ValueError(f"dt_sub must be positive, got {self.dt_sub}")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError(f"restitution must be in [0, 1], got {self.restitution}")
        if not 0.0 < self.rolling_factor <= 1.0:
            raise ValueError(f"rolling_factor must be in (0, 1], got {self.rolling_factor}")
        if not self.theta_max > 0:
            raise ValueError(f"theta_max must be positive, got {self.theta_max}")
        if not self.omega_max > 0:
            raise ValueError(f"omega_max must be positive, got {self.omega_max}")


@dataclass
class PhysState:
    """Continuous tray/ball configuration at one instant."""

    ball_pos: np.ndarray           # (2,) m, tray frame, origin at centre
    ball_vel: np.ndarray           # (2,) m/s
    tray_rot: np.ndarray           # (2,) rad, (about x, about y)
    t_sim: float = 0.0

    def copy(self) -> "PhysState":
        return PhysState(
            ball_pos=self.ball_pos.copy(),
            ball_vel=self.ball_vel.copy(),
            tray_rot=self.tray_rot.copy(),
            t_sim=self.t_sim,
        )

    def to_dict(self) -> dict:
        return {
            "ball_pos": [float(self.ball_pos[0]), float(self.ball_pos[1])],
            "ball_vel": [float(self.ball_vel[0]), float(self.ball_vel[1])],
            "tray_rot": [float(self.tray_rot[0]), float(self.tray_rot[1])],
            "t_sim": float(self.t_sim),
        }

    @staticmethod
    def from_dict(d: dict) -> "PhysState":
        return PhysState(
            ball_pos=np.asarray(d["ball_pos"], dtype=float),
            ball_vel=np.asarray(d["ball_vel"], dtype=float),
            tray_rot=np.asarray(d["tray_rot"], dtype=float),
            t_sim=float(d["t_sim"]),
        )


def initial_state(pos, cfg: PhysConfig | None = None) -> PhysState:
    """Ball at rest at ``pos`` on a flat tray."""
    return PhysState(
        ball_pos=np.asarray(pos, dtype=float).copy(),
        ball_vel=np.zeros(2),
        tray_rot=np.zeros(2),
        t_sim=0.0,
    )


def ball_acceleration(tray_rot: np.ndarray, cfg: PhysConfig) -> np.ndarray:
    """Incline acceleration of the rolling ball, without the viscous term.

    a = k * g * (sin(rot_about_y), -sin(rot_about_x)). The damping term
    -mu*vel is applied by the integrator, not here.
    """
    kg = cfg.rolling_factor * cfg.gravity
    return np.array([kg * math.sin(tray_rot[1]), -kg * math.sin(tray_rot[0])])


def resolve_collisions(
    pos: np.ndarray, vel: np.ndarray, layout: TrayLayout, cfg: PhysConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Push the ball out of boundaries and walls, reflecting normal velocity.

    Expects at most ~one substep of penetration. The ball is moved to the
    nearest non-penetrating position; the velocity component along the
    contact normal is scaled by -restitution (only if it points into the
    surface), the tangential component is untouched. Boundaries are resolved
    before walls, x before y, walls in layout order: the fixed order keeps
    corner contacts deterministic.
    """
    e = cfg.restitution
    r = layout.ball_radius
    pos = pos.copy()
    vel = vel.copy()

    def clamp_bounds():
        lo_x, hi_x = -layout.width / 2 + r, layout.width / 2 - r
        lo_y, hi_y = -layout.height / 2 + r, layout.height / 2 - r
        if pos[0] < lo_x:
            pos[0] = lo_x
            if vel[0] < 0:
                vel[0] = -e * vel[0]
        elif pos[0] > hi_x:
            pos[0] = hi_x
            if vel[0] > 0:
                vel[0] = -e * vel[0]
        if pos[1] < lo_y:
            pos[1] = lo_y
            if vel[1] < 0:
                vel[1] = -e * vel[1]
        elif pos[1] > hi_y:
            pos[1] = hi_y
            if vel[1] > 0:
                vel[1] = -e * vel[1]

    clamp_bounds()
    for w in layout.walls:
        # circle vs rectangle via the radius-expanded box, one axis per contact
        ex_lo, ex_hi = w.x_min - r, w.x_max + r
        ey_lo, ey_hi = w.y_min - r, w.y_max + r
        if not (ex_lo < pos[0] < ex_hi and ey_lo < pos[1] < ey_hi):
            continue
        pen_x_lo = pos[0] - ex_lo
        pen_x_hi = ex_hi - pos[0]
        pen_y_lo = pos[1] - ey_lo
        pen_y_hi = ey_hi - pos[1]
        pen_x = min(pen_x_lo, pen_x_hi)
        pen_y = min(pen_y_lo, pen_y_hi)
        if pen_x <= pen_y:  # ties go to x
            if pen_x_lo <= pen_x_hi:
                pos[0] = ex_lo
                if vel[0] > 0:
                    vel[0] = -e * vel[0]
            else:
                pos[0] = ex_hi
                if vel[0] < 0:
                    vel[0] = -e * vel[0]
        else:
            if pen_y_lo <= pen_y_hi:
                pos[1] = ey_lo
                if vel[1] > 0:
                    vel[1] = -e * vel[1]
            else:
                pos[1] = ey_hi
                if vel[1] < 0:
                    vel[1] = -e * vel[1]
    clamp_bounds()
    return pos, vel


def step_physics(
    state: PhysState,
    tilt_rates: np.ndarray,
    cfg: PhysConfig,
    layout: TrayLayout,
) -> PhysState:
    """Advance one substep under the given tilt rates (rad/s).

    The tilt is rate-driven and hard-clamped at +-theta_max: commanded rate
    is simply absorbed at the limit, mirroring a safety stop. Callers are
    responsible for normalizing rates to +-omega_max.
    """
    dt = cfg.dt_sub
    rot = np.clip(state.tray_rot + np.asarray(tilt_rates, dtype=float) * dt,
                  -cfg.theta_max, cfg.theta_max)
    acc = ball_acceleration(rot, cfg) - cfg.damping * state.ball_vel
    vel = state.ball_vel + acc * dt
    pos = state.ball_pos + vel * dt
    pos, vel = resolve_collisions(pos, vel, layout, cfg)
    return PhysState(ball_pos=pos, ball_vel=vel, tray_rot=rot, t_sim=state.t_sim + dt)


def in_goal(pos: np.ndarray, layout: TrayLayout) -> bool:
    """Goal test on the ball centre, boundary inclusive."""
    dx = pos[0] - layout.goal_center[0]
    dy = pos[1] - layout.goal_center[1]
    return dx * dx + dy * dy <= layout.goal_radius * layout.goal_radius
