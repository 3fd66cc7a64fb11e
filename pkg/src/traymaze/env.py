"""RL environment around the tray physics.

Two single-axis action channels (agent + partner), a 200 ms control
interval, a 6-D observation and the sparse -1/+10 reward. One environment
instance serves one caller at a time; independent instances do not share
state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import TrayLayout
from .physics import PhysConfig, PhysState, in_goal, initial_state, step_physics

# Observation component order. Positions are normalized by the tray
# half-extent, velocities by v_norm, tilts by theta_max.
OBS_FIELDS = ("ball_x", "ball_y", "vel_x", "vel_y", "rot_x", "rot_y")
OBS_DIM = len(OBS_FIELDS)

AXIS_ABOUT_X = "about_x"
AXIS_ABOUT_Y = "about_y"


class EpisodeDoneError(RuntimeError):
    """Raised when step() is called on a finished episode."""


@dataclass(frozen=True)
class EnvConfig:
    agent_axis: str = AXIS_ABOUT_X   # tray rotation axis driven by the agent
    control_interval: float = 0.2    # s per interaction step
    step_cap: int = 200              # episode length limit
    v_norm: float = 1.0              # m/s velocity normalization
    reset_jitter: float = 0.02       # m, start position spread
    seed: int = 0

    def __post_init__(self):
        if self.agent_axis not in (AXIS_ABOUT_X, AXIS_ABOUT_Y):
            raise ValueError(f"agent_axis must be about_x or about_y, got {self.agent_axis!r}")
        if not self.control_interval > 0:
            raise ValueError("control_interval must be positive")
        if self.step_cap < 1:
            raise ValueError("step_cap must be >= 1")
        if not self.v_norm > 0:
            raise ValueError("v_norm must be positive")
        if self.reset_jitter < 0:
            raise ValueError("reset_jitter must be >= 0")


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    reached_goal: bool
    steps_elapsed: int


class TrayBallEnv:
    def __init__(self, layout: TrayLayout, phys_cfg: PhysConfig, cfg: EnvConfig):
        self.layout = layout
        self.phys_cfg = phys_cfg
        self.cfg = cfg
        n_sub = round(cfg.control_interval / phys_cfg.dt_sub)
        if abs(n_sub * phys_cfg.dt_sub - cfg.control_interval) > 1e-9 or n_sub < 1:
            raise ValueError(
                f"dt_sub {phys_cfg.dt_sub} does not divide control_interval "
                f"{cfg.control_interval}")
        self.substeps = n_sub
        self._rng = np.random.default_rng(cfg.seed)
        self.state: PhysState | None = None
        self.steps_elapsed = 0
        self.done = True

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Place the ball in the start region with zero velocity and tilt."""
        rng = rng if rng is not None else self._rng
        ang = rng.uniform(0.0, 2.0 * np.pi)
        rad = self.cfg.reset_jitter * np.sqrt(rng.uniform())
        pos = self.layout.start_center + rad * np.array([np.cos(ang), np.sin(ang)])
        self.state = initial_state(pos, self.phys_cfg)
        self.steps_elapsed = 0
        self.done = False
        return self.observe()

    def step(self, agent_action: float, partner_action: float,
             substep_hook=None) -> StepResult:
        """Advance one control interval.

        Actions outside [-1, 1] are clamped. The goal is checked after every
        substep; entering it ends the episode immediately with reward +10,
        otherwise the step costs -1. ``substep_hook(state, i)`` is invoked
        after each substep when given (used for realtime pacing/rendering).
        """
        if self.done or self.state is None:
            raise EpisodeDoneError("step() called on a finished episode; reset() first")
        a = min(1.0, max(-1.0, float(agent_action)))
        p = min(1.0, max(-1.0, float(partner_action)))
        w = self.phys_cfg.omega_max
        if self.cfg.agent_axis == AXIS_ABOUT_X:
            rates = np.array([a * w, p * w])
        else:
            rates = np.array([p * w, a * w])

        reached = False
        for i in range(self.substeps):
            self.state = step_physics(self.state, rates, self.phys_cfg, self.layout)
            if substep_hook is not None:
                substep_hook(self.state, i)
            if in_goal(self.state.ball_pos, self.layout):
                reached = True
                break
        self.steps_elapsed += 1
        reward = 10.0 if reached else -1.0
        self.done = reached or self.steps_elapsed >= self.cfg.step_cap
        return StepResult(
            obs=self.observe(),
            reward=reward,
            done=self.done,
            reached_goal=reached,
            steps_elapsed=self.steps_elapsed,
        )

    def observe(self, state: PhysState | None = None) -> np.ndarray:
        s = state if state is not None else self.state
        if s is None:
            raise RuntimeError("environment not reset")
        half_w = self.layout.width / 2
        half_h = self.layout.height / 2
        return np.array([
            s.ball_pos[0] / half_w,
            s.ball_pos[1] / half_h,
            s.ball_vel[0] / self.cfg.v_norm,
            s.ball_vel[1] / self.cfg.v_norm,
            s.tray_rot[0] / self.phys_cfg.theta_max,
            s.tray_rot[1] / self.phys_cfg.theta_max,
        ])

    # -- state snapshot/restore for checkpointing ---------------------------

    def get_state(self) -> dict:
        return {
            "phys": self.state.to_dict() if self.state is not None else None,
            "steps_elapsed": self.steps_elapsed,
            "done": self.done,
            "rng": self._rng.bit_generator.state,
        }

    def set_state(self, d: dict) -> None:
        self.state = PhysState.from_dict(d["phys"]) if d["phys"] is not None else None
        self.steps_elapsed = int(d["steps_elapsed"])
        self.done = bool(d["done"])
        self._rng.bit_generator.state = d["rng"]
