"""A tour of the tray physics: the serpentine layout, rolling dynamics,
wall bounces and the tilt limits.

Run from the repository root:

    python3 demos/01_physics_tour.py

Writes physics_tour.png next to this script.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from traymaze import PhysConfig, ball_acceleration, default_layout, step_physics
from traymaze.physics import initial_state

layout = default_layout()
cfg = PhysConfig()

print("The tray is a", layout.width, "m square. Two staggered vertical walls")
print("split it into three columns; the only way from the start corner to the")
print("goal corner is up the left column, down the middle, up the right.")
print()

# How hard can the tray push the ball? The incline acceleration at the
# tilt limit tells us the time scale of the task.
a_max = ball_acceleration(np.array([0.0, cfg.theta_max]), cfg)[0]
print(f"At the {cfg.theta_max} rad tilt limit the ball sees "
      f"{a_max:.2f} m/s^2 along the tray,")
print(f"so crossing the half-meter tray takes about "
      f"{np.sqrt(2 * layout.width / a_max):.1f} s. One control step is 0.2 s.")
print()

# Roll the ball around with a scripted tilt pattern and record the path.
state = initial_state(layout.start_center, cfg)
path = [state.ball_pos.copy()]
for k in range(6000):
    t = k * cfg.dt_sub
    rates = np.array([0.4 * np.sin(0.9 * t), 0.45 * np.cos(0.6 * t)])
    state = step_physics(state, rates, cfg, layout)
    path.append(state.ball_pos.copy())
path = np.array(path)

print("After 30 simulated seconds of wandering, the ball never left the tray")
print(f"and never entered a wall: x in [{path[:,0].min():.3f}, "
      f"{path[:,0].max():.3f}], y in [{path[:,1].min():.3f}, {path[:,1].max():.3f}]")

fig, ax = plt.subplots(figsize=(6, 6))
ax.add_patch(plt.Rectangle((-layout.width / 2, -layout.height / 2),
                           layout.width, layout.height,
                           fill=False, lw=2, color="k"))
for w in layout.walls:
    ax.add_patch(plt.Rectangle((w.x_min, w.y_min), w.x_max - w.x_min,
                               w.y_max - w.y_min, color="gray"))
ax.add_patch(plt.Circle(layout.goal_center, layout.goal_radius,
                        color="green", alpha=0.5, label="goal"))
ax.add_patch(plt.Circle(layout.start_center, layout.start_radius,
                        color="blue", alpha=0.25, label="start"))
ax.plot(path[:, 0], path[:, 1], lw=0.6, color="orange", label="ball path")
ax.set_aspect("equal")
ax.legend(loc="upper left")
ax.set_title("30 s of scripted tilting: containment in action")
out = pathlib.Path(__file__).with_name("physics_tour.png")
fig.savefig(out, dpi=120, bbox_inches="tight")
print(f"wrote {out}")
