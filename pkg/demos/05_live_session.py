"""Host a live session: you steer one tray axis from the browser while the
agent trains on the other, at the true 200 ms control cadence.

    python3 demos/05_live_session.py [--port 8900] [--short]

Then open http://localhost:8900/ in a browser. Build the UI first:

    cd frontend && npm install && npm run build

The session follows the full training protocol by default (--short cuts it
down for a quick feel). Training pauses whenever no controlling client is
connected and resumes when you come back; gradient-update pauses between
blocks are real computation, hold tight through them.
"""

import argparse
import dataclasses
import pathlib

from traymaze import Schedule, default_config
from traymaze.serve import serve

parser = argparse.ArgumentParser()
parser.add_argument("--port", type=int, default=8900)
parser.add_argument("--out", default="live_run")
parser.add_argument("--short", action="store_true",
                    help="a few minutes instead of the full protocol")
args = parser.parse_args()

cfg = default_config()
if args.short:
    cfg = dataclasses.replace(
        cfg,
        schedule=Schedule(total_interaction_steps=500, updates_per_block=2000,
                          block_size=250, eval_trials=3, step_cap=200),
    )

static = pathlib.Path(__file__).resolve().parent.parent / "frontend" / "dist"
if not static.is_dir():
    print("note: frontend/dist not found; serving a plain-text placeholder.")
    print("      build it with: cd frontend && npm install && npm run build")
    static = None

serve(cfg, args.port, args.out, static_dir=static)
