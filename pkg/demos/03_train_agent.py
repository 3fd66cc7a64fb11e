"""Train the agent with the scripted expert partner and print the learning
curve.

By default this runs a shortened schedule (about half a minute). Pass
--full for the paper-scale protocol: 3,500 interaction steps with 20,000
offline gradient updates every 500 steps and ten deterministic test trials
per block (a few minutes of CPU).

    python3 demos/03_train_agent.py [--full] [--seed N] [--out DIR]
"""

import argparse
import dataclasses
import tempfile

from traymaze import Schedule, default_config, train
from traymaze.config import with_overrides

parser = argparse.ArgumentParser()
parser.add_argument("--full", action="store_true", help="paper-scale schedule")
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--out", default=None, help="run directory (default: temp)")
args = parser.parse_args()

cfg = with_overrides(default_config(), seed=args.seed)
if not args.full:
    cfg = dataclasses.replace(
        cfg,
        schedule=Schedule(total_interaction_steps=1000, updates_per_block=2000,
                          block_size=250, eval_trials=5, step_cap=200),
    )

out = args.out or tempfile.mkdtemp(prefix="traymaze_demo_")
sched = cfg.schedule
print(f"schedule: {sched.total_interaction_steps} interaction steps, "
      f"{sched.updates_per_block} updates per {sched.block_size}-step block, "
      f"{sched.eval_trials} test trials per block")
print(f"run directory: {out}")
print()

result = train(cfg, out)

print(f"{'block':>5s} {'mean score':>11s} {'std':>7s} {'reached':>8s} "
      f"{'alpha':>7s} {'entropy':>8s}")
blocks = {r["block"]: r for r in result.records if r["type"] == "block"}
for rec in result.records:
    if rec["type"] == "eval_block":
        b = blocks[rec["block"]]
        print(f"{rec['block']:>5d} {rec['mean_score']:>11.1f} "
              f"{rec['std_score']:>7.1f} {rec['reached']:>5d}/{sched.eval_trials}"
              f" {b['alpha']:>7.3f} {b['entropy']:>8.3f}")

print()
print(f"total gradient updates: {result.total_updates}")
print(f"inspect trials with:   traymaze replay --run {out} --trial 0")
print(f"evaluate again with:   traymaze eval --checkpoint {out}/checkpoint.zip")
