"""Tray geometry: bounds, walls, start and goal regions.

The default layout is a 0.5 m square tray with two staggered interior walls
forming a serpentine channel between diagonally opposite corners. No
single-axis controller can bring the ball from start to goal (the other axis
held flat), which is what makes the task genuinely two-player.

Layouts can also be loaded from a JSON file using the same field names as
the dataclass below; all lengths are meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Wall:
    """Axis-aligned rectangular wall segment, corners in tray-frame meters."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise LayoutError(f"degenerate wall {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "y_min": self.y_min,
                "x_max": self.x_max, "y_max": self.y_max}


@dataclass
class TrayLayout:
    width: float
    height: float
    walls: tuple[Wall, ...]
    goal_center: np.ndarray
    goal_radius: float
    start_center: np.ndarray
    start_radius: float
    ball_radius: float

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "walls": [w.to_dict() for w in self.walls],
            "goal_center": [float(self.goal_center[0]), float(self.goal_center[1])],
            "goal_radius": self.goal_radius,
            "start_region": {
                "center": [float(self.start_center[0]), float(self.start_center[1])],
                "radius": self.start_radius,
            },
            "ball_radius": self.ball_radius,
        }


_LAYOUT_KEYS = {"width", "height", "walls", "goal_center", "goal_radius",
                "start_region", "ball_radius"}
_WALL_KEYS = {"x_min", "y_min", "x_max", "y_max"}


def layout_from_dict(d: dict) -> TrayLayout:
    unknown = set(d) - _LAYOUT_KEYS
    if unknown:
        raise LayoutError(f"unknown layout keys: {sorted(unknown)}")
    missing = _LAYOUT_KEYS - set(d)
    if missing:
        raise LayoutError(f"missing layout keys: {sorted(missing)}")
    walls = []
    for wd in d["walls"]:
        unknown = set(wd) - _WALL_KEYS
        if unknown:
            raise LayoutError(f"unknown wall keys: {sorted(unknown)}")
        walls.append(Wall(**{k: float(wd[k]) for k in _WALL_KEYS}))
    region = d["start_region"]
    unknown = set(region) - {"center", "radius"}
    if unknown:
        raise LayoutError(f"unknown start_region keys: {sorted(unknown)}")
    layout = TrayLayout(
        width=float(d["width"]),
        height=float(d["height"]),
        walls=tuple(walls),
        goal_center=np.asarray(d["goal_center"], dtype=float),
        goal_radius=float(d["goal_radius"]),
        start_center=np.asarray(region["center"], dtype=float),
        start_radius=float(region["radius"]),
        ball_radius=float(d["ball_radius"]),
    )
    validate_layout(layout)
    return layout


def load_layout(path) -> TrayLayout:
    with open(path) as f:
        return layout_from_dict(json.load(f))


def save_layout(layout: TrayLayout, path) -> None:
    Path(path).write_text(json.dumps(layout.to_dict(), indent=2) + "\n")


def default_layout() -> TrayLayout:
    """The built-in serpentine tray.

    Two staggered vertical walls split the tray into three columns: the left
    wall leaves a gate at the top, the right wall at the bottom, so any
    start-to-goal path must climb, descend, then climb again while moving
    right. Start and goal sit in diagonally opposite corners.
    """
    half = 0.25
    t = 0.01  # wall half-thickness
    layout = TrayLayout(
        width=0.5,
        height=0.5,
        walls=(
            Wall(-0.06 - t, -half, -0.06 + t, 0.12),     # left wall, floor-attached
            Wall(0.07 - t, -0.12, 0.07 + t, half),       # right wall, top-attached
        ),
        goal_center=np.array([0.19, 0.19]),
        goal_radius=0.04,
        start_center=np.array([-0.19, -0.19]),
        start_radius=0.03,
        ball_radius=0.02,
    )
    validate_layout(layout)
    return layout


def _disc_inside_bounds(center, radius, layout: TrayLayout) -> bool:
    return (abs(center[0]) + radius <= layout.width / 2
            and abs(center[1]) + radius <= layout.height / 2)


def _disc_hits_wall(center, radius, w: Wall) -> bool:
    cx = min(max(center[0], w.x_min), w.x_max)
    cy = min(max(center[1], w.y_min), w.y_max)
    return (center[0] - cx) ** 2 + (center[1] - cy) ** 2 < radius ** 2


def segment_hits_wall(p0, p1, w: Wall) -> bool:
    """Liang-Barsky clip of segment p0->p1 against the wall rectangle."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, p0[0] - w.x_min),
        (dx, w.x_max - p0[0]),
        (-dy, p0[1] - w.y_min),
        (dy, w.y_max - p0[1]),
    ):
        if p == 0.0:
            if q < 0.0:
                return False
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return False
            t0 = max(t0, r)
        else:
            if r < t0:
                return False
            t1 = min(t1, r)
    return t0 <= t1


def validate_layout(layout: TrayLayout) -> None:
    """Geometric invariants. Raises LayoutError on the first violation."""
    if layout.width <= 0 or layout.height <= 0 or layout.ball_radius <= 0:
        raise LayoutError("tray dimensions and ball radius must be positive")
    for name, center, radius in (
        ("goal", layout.goal_center, layout.goal_radius),
        ("start", layout.start_center, layout.start_radius),
    ):
        if not _disc_inside_bounds(center, radius, layout):
            raise LayoutError(f"{name} region leaves the tray bounds")
        for w in layout.walls:
            if _disc_hits_wall(center, radius, w):
                raise LayoutError(f"{name} region intersects wall {w}")
    for w in layout.walls:
        if (w.x_min < -layout.width / 2 or w.x_max > layout.width / 2
                or w.y_min < -layout.height / 2 or w.y_max > layout.height / 2):
            raise LayoutError(f"wall {w} leaves the tray bounds")
    if layout.walls and not any(
        segment_hits_wall(layout.start_center, layout.goal_center, w)
        for w in layout.walls
    ):
        raise LayoutError("no wall blocks the direct start-goal segment")


def single_axis_goal_sweep(
    layout: TrayLayout,
    phys_cfg=None,
    *,
    steps: int = 200,
    substeps_per_step: int = 40,
    random_controllers: int = 50,
    seed: int = 0,
) -> int:
    """Count goal reaches over a scripted sweep of single-axis controllers.

    For each axis in turn, the other axis is frozen at zero tilt and the
    controlled axis is driven by 64 bang-bang policies (a grid of half-period
    and phase combinations) plus ``random_controllers`` uniform-random
    policies. Returns the total number of episodes that ever touched the
    goal; a sound two-player layout returns 0.
    """
    from .physics import PhysConfig, in_goal, initial_state, step_physics

    cfg = phys_cfg if phys_cfg is not None else PhysConfig()
    half_periods = [1, 2, 3, 5, 8, 12, 20, 50]
    rng = np.random.default_rng(seed)
    hits = 0

    def run(controller, axis) -> bool:
        state = initial_state(layout.start_center, cfg)
        for step in range(steps):
            action = controller(step)
            rates = np.zeros(2)
            rates[axis] = action * cfg.omega_max
            for _ in range(substeps_per_step):
                state = step_physics(state, rates, cfg, layout)
                if in_goal(state.ball_pos, layout):
                    return True
        return False

    for axis in (0, 1):
        for h in half_periods:
            for i in range(8):
                offset = (i * h) // 8

                def bang(step, h=h, offset=offset):
                    return 1.0 if ((step + offset) // h) % 2 == 0 else -1.0

                hits += run(bang, axis)
        for _ in range(random_controllers):
            seq = rng.uniform(-1.0, 1.0, size=steps)

            def rand(step, seq=seq):
                return seq[step]

            hits += run(rand, axis)
    return hits
