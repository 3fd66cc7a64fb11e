"""Replay a recorded evaluation trial and verify it re-simulates exactly.

Every evaluation trial during training is stored step by step (actions,
rewards, full physics state). Because the simulation is deterministic, the
recorded actions reproduce the recorded states bit for bit; this script
demonstrates that and draws the trajectory.

    python3 demos/04_replay_inspection.py [--run DIR] [--trial K]

Without --run it first trains a small run into a temp directory.
"""

import argparse
import dataclasses
import pathlib
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from traymaze import Schedule, TrayBallEnv, default_config, default_layout, replay, train
from traymaze.physics import PhysState

parser = argparse.ArgumentParser()
parser.add_argument("--run", default=None)
parser.add_argument("--trial", type=int, default=0)
args = parser.parse_args()

cfg = default_config()
if args.run is None:
    cfg = dataclasses.replace(
        cfg, schedule=Schedule(total_interaction_steps=500,
                               updates_per_block=1500, block_size=250,
                               eval_trials=3, step_cap=200))
    run_dir = tempfile.mkdtemp(prefix="traymaze_replay_")
    print(f"training a small run into {run_dir} ...")
    train(cfg, run_dir)
else:
    run_dir = args.run

trace = replay(run_dir, args.trial)
print(f"trial {args.trial}: reached={trace['reached']} "
      f"steps={trace['steps_used']} score={trace['score']}")

# re-simulate from the recorded initial state and recorded actions
layout = default_layout()
env = TrayBallEnv(layout, cfg.phys,
                  dataclasses.replace(cfg.env, step_cap=cfg.schedule.step_cap))
env.reset()
env.state = PhysState.from_dict(trace["initial"])
env.steps_elapsed, env.done = 0, False
mismatches = 0
for step in trace["steps"]:
    env.step(step["action"], step["partner"])
    if env.state.to_dict() != step["phys"]:
        mismatches += 1
print(f"re-simulation: {len(trace['steps'])} steps replayed, "
      f"{mismatches} state mismatches (expect 0)")

xs = [trace["initial"]["ball_pos"][0]] + [s["phys"]["ball_pos"][0]
                                          for s in trace["steps"]]
ys = [trace["initial"]["ball_pos"][1]] + [s["phys"]["ball_pos"][1]
                                          for s in trace["steps"]]
fig, ax = plt.subplots(figsize=(6, 6))
ax.add_patch(plt.Rectangle((-0.25, -0.25), 0.5, 0.5, fill=False, lw=2, color="k"))
for w in layout.walls:
    ax.add_patch(plt.Rectangle((w.x_min, w.y_min), w.x_max - w.x_min,
                               w.y_max - w.y_min, color="gray"))
ax.add_patch(plt.Circle(layout.goal_center, layout.goal_radius,
                        color="green", alpha=0.5))
ax.plot(xs, ys, marker=".", ms=2, lw=0.8, color="orange")
ax.plot(xs[0], ys[0], "bo", label="start")
ax.plot(xs[-1], ys[-1], "r*", ms=12, label="end")
ax.set_aspect("equal")
ax.legend()
ax.set_title(f"eval trial {args.trial}: score {trace['score']}")
out = pathlib.Path(__file__).with_name("replay_trial.png")
fig.savefig(out, dpi=120, bbox_inches="tight")
print(f"wrote {out}")
