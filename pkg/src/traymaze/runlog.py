"""Line-delimited JSON run log.

One record per line, in a stable order:

    {"type": "run_header", "version": 1, "config": {...}, "config_hash": h}
    {"type": "block", "block": b, "steps": n, "buffer_size": n, "updates": m,
     "q1_loss": .., "q2_loss": .., "policy_loss": .., "alpha_loss": ..,
     "alpha": .., "entropy": ..}
    {"type": "eval_trial", "block": b, "trial": i, "trial_index": g,
     "reached": bool, "steps_used": n, "score": s}
    {"type": "eval_block", "block": b, "mean_score": .., "std_score": ..,
     "reached": k}
    {"type": "run_footer", "total_updates": u, "wall_time_s": t}

Every block contributes exactly one block record, ``eval_trials`` trial
records and one eval_block summary. ``std_score`` is the population
standard deviation. The footer is written only when a run completes.
"""

from __future__ import annotations

import json
from pathlib import Path

RUNLOG_NAME = "runlog.jsonl"
TRACES_NAME = "traces.jsonl"


class RunLogWriter:
    def __init__(self, path, append: bool = False):
        self.path = Path(path)
        self._fh = open(self.path, "a" if append else "w")

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_runlog(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def truncate_to_block(path, blocks_done: int) -> None:
    """Drop records past ``blocks_done`` (crash between log write and
    checkpoint leaves a partial extra block; resume rewrites it)."""
    kept = [r for r in read_runlog(path)
            if r["type"] == "run_header" or r.get("block", 0) <= blocks_done]
    kept = [r for r in kept if r["type"] != "run_footer"]
    with open(path, "w") as fh:
        for r in kept:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
