"""Command line entry points: train, eval, serve, replay."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, default_config, load_config, with_overrides
from .partner import PARTNER_KINDS


def _load(args):
    cfg = load_config(args.config) if args.config else default_config()
    return with_overrides(cfg, seed=args.seed,
                          partner_kind=getattr(args, "partner", None))


def cmd_train(args) -> int:
    from .harness import train

    cfg = _load(args)
    result = train(cfg, args.out)
    evals = [r for r in result.records if r["type"] == "eval_block"]
    for r in evals:
        print(f"block {r['block']}: mean score {r['mean_score']:.1f} "
              f"(std {r['std_score']:.1f}, reached {r['reached']})")
    print(f"done: {result.total_updates} updates, log at "
          f"{result.out_dir / 'runlog.jsonl'}")
    return 0


def cmd_eval(args) -> int:
    import dataclasses

    from .harness import evaluate
    from .partner import PartnerSpec

    spec = None
    if args.partner is not None:
        spec = PartnerSpec(kind=args.partner)
    scores = evaluate(args.checkpoint, partner_spec=spec,
                      n_trials=args.trials, seed=args.seed or 0,
                      config_path=args.config)
    vals = [t.score for t in scores]
    for i, t in enumerate(scores):
        print(f"trial {i}: score {t.score} "
              f"({'reached in ' + str(t.steps_used) + ' steps' if t.reached else 'not reached'})")
    import math
    mean = sum(vals) / len(vals)
    sem = (sum((v - mean) ** 2 for v in vals) / len(vals)) ** 0.5 / math.sqrt(len(vals))
    print(f"mean {mean:.1f} +- {sem:.1f} (standard error, n={len(vals)})")
    return 0


def cmd_serve(args) -> int:
    from .serve import serve

    cfg = _load(args)
    serve(cfg, args.port, args.out, static_dir=args.static)
    return 0


def cmd_replay(args) -> int:
    from .harness import replay

    trace = replay(args.run, args.trial)
    steps = trace["steps"]
    if args.format == "jsonl":
        print(json.dumps({k: v for k, v in trace.items() if k != "steps"}))
        for s in steps:
            print(json.dumps(s))
    else:
        print("step,action,partner,reward,ball_x,ball_y,vel_x,vel_y,rot_x,rot_y,t_sim")
        for i, s in enumerate(steps):
            ph = s["phys"]
            print(",".join(str(v) for v in (
                i + 1, s["action"], s["partner"], s["reward"],
                ph["ball_pos"][0], ph["ball_pos"][1],
                ph["ball_vel"][0], ph["ball_vel"][1],
                ph["tray_rot"][0], ph["tray_rot"][1], ph["t_sim"])))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traymaze",
        description="Tilting-tray ball maze: SAC agent + partner training stack")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the block training schedule")
    p.add_argument("--config", type=Path, help="JSON run config (defaults used if omitted)")
    p.add_argument("--out", type=Path, required=True, help="output/run directory")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--partner", choices=PARTNER_KINDS, help="partner kind override")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint with mean actions")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--partner", choices=PARTNER_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path, help="verify the checkpoint matches this config")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="live session with a human partner over websocket")
    p.add_argument("--config", type=Path)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--out", type=Path, default=Path("live_run"))
    p.add_argument("--seed", type=int)
    p.add_argument("--partner", choices=PARTNER_KINDS, help=argparse.SUPPRESS)
    p.add_argument("--static", type=Path, help="directory of web UI assets to serve")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", help="dump a recorded evaluation trial")
    p.add_argument("--run", type=Path, required=True, help="run directory")
    p.add_argument("--trial", type=int, required=True, help="global eval trial index")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.set_defaults(fn=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
