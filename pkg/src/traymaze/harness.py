"""Experiment harness: block-interleaved training, periodic deterministic
evaluation on the 0-200 score scale, line-delimited logging, checkpointing
with bit-exact resume, and trial replay.

The loop alternates ``block_size`` interaction steps (stochastic policy,
configured partner) with ``updates_per_block`` gradient updates, then runs
``eval_trials`` mean-action test episodes. Evaluation episodes never touch
the replay buffer or the agent parameters.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

from .checkpoint import CHECKPOINT_NAME, load_checkpoint, save_checkpoint
from .config import RunConfig, Schedule, config_hash, config_to_dict
from .env import EnvConfig, TrayBallEnv
from .layout import TrayLayout, default_layout, load_layout
from .partner import make_partner
from .runlog import RUNLOG_NAME, TRACES_NAME, RunLogWriter, read_runlog, truncate_to_block
from .sac import ReplayBuffer, SacAgent, Transition


def score(reached: bool, steps_used: int, step_cap: int) -> int:
    """0-200 trial score: 0 if the goal was missed, step_cap + 1 - steps
    when reached (200 for a first-step success at the default cap)."""
    if not reached:
        return 0
    if not 1 <= steps_used <= step_cap:
        raise ValueError(f"steps_used {steps_used} outside [1, {step_cap}]")
    return step_cap + 1 - steps_used


@dataclass(frozen=True)
class TrialScore:
    reached: bool
    steps_used: int
    score: int

    def __post_init__(self):
        if self.score < 0 or (not self.reached and self.score != 0):
            raise ValueError("inconsistent trial score")


@dataclass
class TrainHooks:
    """Optional instrumentation for the live server; headless runs pass none.

    pace(kind, step) is called before every interaction or eval step;
    substep(state, i) after every physics substep; gate() at episode
    boundaries (may block to pause a live session); on_record(rec) after
    every run-log record.
    """

    pace: Optional[Callable] = None
    substep: Optional[Callable] = None
    gate: Optional[Callable] = None
    on_record: Optional[Callable] = None
    on_phase: Optional[Callable] = None
    on_reward: Optional[Callable] = None


@dataclass
class RunResult:
    out_dir: Path
    records: list
    total_updates: int


def _rng_from(*entropy) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def _load_layout(cfg: RunConfig) -> TrayLayout:
    if cfg.layout_path:
        return load_layout(cfg.layout_path)
    return default_layout()


def run_eval_trial(agent: SacAgent, layout: TrayLayout, cfg: RunConfig,
                   partner, env_rng: np.random.Generator, step_cap: int,
                   hooks: TrainHooks | None = None):
    """One deterministic (mean-action) test episode. Returns (TrialScore, trace)."""
    env_cfg = dataclasses.replace(cfg.env, step_cap=step_cap)
    env = TrayBallEnv(layout, cfg.phys, env_cfg)
    obs = env.reset(env_rng)
    partner.reset()
    trace = {"initial": env.state.to_dict(), "steps": []}
    substep = hooks.substep if hooks else None
    while True:
        now = env.steps_elapsed * cfg.env.control_interval
        if hooks and hooks.pace:
            hooks.pace("eval", env.steps_elapsed)
        a = agent.select_action(obs, "deterministic")
        p = partner.command(obs, now)
        sr = env.step(a, p, substep)
        if hooks and hooks.on_reward:
            hooks.on_reward("eval", sr.reward, env.steps_elapsed)
        trace["steps"].append({
            "action": a, "partner": p, "reward": sr.reward,
            "phys": env.state.to_dict(),
        })
        obs = sr.obs
        if sr.done:
            ts = TrialScore(sr.reached_goal, sr.steps_elapsed,
                            score(sr.reached_goal, sr.steps_elapsed, step_cap))
            trace.update(reached=ts.reached, steps_used=ts.steps_used,
                         score=ts.score)
            return ts, trace


def _eval_block(agent, layout, cfg: RunConfig, block: int, trial_start: int,
                log: RunLogWriter, traces_fh, hooks: TrainHooks | None,
                live_cell=None):
    scores = []
    records = []
    for trial in range(cfg.schedule.eval_trials):
        if hooks and hooks.gate:
            hooks.gate()
        env_rng = _rng_from(cfg.env.seed, 0xE7A1, block, trial)
        partner = make_partner(cfg.partner, layout, cfg.phys, cfg.env,
                               _rng_from(cfg.partner.seed, 0xE7A2, block, trial),
                               cell=live_cell)
        ts, trace = run_eval_trial(agent, layout, cfg, partner, env_rng,
                                   cfg.schedule.step_cap, hooks)
        trial_index = trial_start + trial
        rec = {"type": "eval_trial", "block": block, "trial": trial,
               "trial_index": trial_index, "reached": ts.reached,
               "steps_used": ts.steps_used, "score": ts.score}
        log.write(rec)
        records.append(rec)
        if hooks and hooks.on_record:
            hooks.on_record(rec)
        trace.update(trial_index=trial_index, block=block, trial=trial)
        traces_fh.write(json.dumps(trace, sort_keys=True) + "\n")
        traces_fh.flush()
        scores.append(ts.score)
    summary = {"type": "eval_block", "block": block,
               "mean_score": float(np.mean(scores)),
               "std_score": float(np.std(scores)),
               "reached": int(sum(s > 0 for s in scores))}
    log.write(summary)
    records.append(summary)
    if hooks and hooks.on_record:
        hooks.on_record(summary)
    return records


def train(cfg: RunConfig, out_dir, hooks: TrainHooks | None = None,
          resume: bool = True, live_cell=None) -> RunResult:
    """Run the full schedule, appending to ``out_dir``'s run log.

    If a checkpoint exists in ``out_dir`` and ``resume`` is true, training
    continues from it and reproduces exactly what an uninterrupted run would
    have logged (wall time aside). BLAS threading is pinned to one thread so
    results do not depend on the host's core count.
    """
    if threadpool_limits is not None:
        with threadpool_limits(limits=1, user_api="blas"):
            return _train(cfg, out_dir, hooks, resume, live_cell)
    return _train(cfg, out_dir, hooks, resume, live_cell)  # pragma: no cover


def _train(cfg: RunConfig, out_dir, hooks, resume, live_cell=None) -> RunResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sched = cfg.schedule
    layout = _load_layout(cfg)
    cfg_dict = config_to_dict(cfg)
    cfg_hash = config_hash(cfg)
    ckpt_path = out_dir / CHECKPOINT_NAME
    runlog_path = out_dir / RUNLOG_NAME
    traces_path = out_dir / TRACES_NAME

    env = TrayBallEnv(layout, cfg.phys, cfg.env)
    buffer = None
    agent = None
    t_start = time.monotonic()

    if resume and ckpt_path.exists():
        ck = load_checkpoint(ckpt_path)
        if ck["manifest"]["config_hash"] != cfg_hash:
            raise ValueError("checkpoint was written with a different config")
        agent = ck["agent"]
        buffer = ReplayBuffer(cfg.sac.replay_capacity, dtype=agent.dtype)
        buffer.load_state_arrays(ck["buffer_arrays"])
        env.set_state(ck["env_state"])
        partner_rng = _rng_from(cfg.partner.seed, 0x7A61)
        partner = make_partner(cfg.partner, layout, cfg.phys, cfg.env,
                               partner_rng, cell=live_cell)
        partner.set_state(ck["partner_state"])
        action_rng = np.random.default_rng()
        action_rng.bit_generator.state = ck["rng_states"]["action"]
        update_rng = np.random.default_rng()
        update_rng.bit_generator.state = ck["rng_states"]["update"]
        step = ck["manifest"]["progress"]["steps_done"]
        block = ck["manifest"]["progress"]["blocks_done"]
        trial_counter = ck["manifest"]["progress"]["trial_counter"]
        total_updates = ck["manifest"]["progress"]["total_updates"]
        truncate_to_block(runlog_path, block)
        log = RunLogWriter(runlog_path, append=True)
        traces_fh = open(traces_path, "a")
        records = read_runlog(runlog_path)
    else:
        agent = SacAgent(cfg.sac)
        buffer = ReplayBuffer(cfg.sac.replay_capacity, dtype=agent.dtype)
        partner = make_partner(cfg.partner, layout, cfg.phys, cfg.env,
                               _rng_from(cfg.partner.seed, 0x7A61),
                               cell=live_cell)
        action_rng = _rng_from(cfg.sac.seed, 0x7A62)
        update_rng = _rng_from(cfg.sac.seed, 0x7A63)
        step = block = trial_counter = total_updates = 0
        log = RunLogWriter(runlog_path, append=False)
        traces_fh = open(traces_path, "w")
        header = {"type": "run_header", "version": 1, "config": cfg_dict,
                  "config_hash": cfg_hash}
        log.write(header)
        records = [header]

    try:
        if hooks and hooks.on_phase:
            hooks.on_phase("training")
        while step < sched.total_interaction_steps:
            if env.done:
                if hooks and hooks.gate:
                    hooks.gate()
                obs = env.reset()
                partner.reset()
            else:
                obs = env.observe()
            if hooks and hooks.pace:
                hooks.pace("train", step)
            now = env.steps_elapsed * cfg.env.control_interval
            if step < cfg.sac.random_steps:
                a = float(action_rng.uniform(-1.0, 1.0))
            else:
                a = agent.select_action(obs, "stochastic", action_rng)
            p = partner.command(obs, now)
            sr = env.step(a, p, hooks.substep if hooks else None)
            if hooks and hooks.on_reward:
                hooks.on_reward("train", sr.reward, step + 1)
            buffer.store(Transition(obs, a, sr.reward, sr.obs,
                                    done=sr.reached_goal))
            step += 1

            if step % sched.block_size == 0:
                block += 1
                if hooks and hooks.on_phase:
                    hooks.on_phase("updating")
                sums = np.zeros(6)
                for _ in range(sched.updates_per_block):
                    rep = agent.update(buffer, update_rng)
                    sums += (rep.q1_loss, rep.q2_loss, rep.policy_loss,
                             rep.alpha_loss, rep.alpha, rep.entropy)
                total_updates += sched.updates_per_block
                means = sums / sched.updates_per_block
                rec = {"type": "block", "block": block, "steps": step,
                       "buffer_size": len(buffer),
                       "updates": sched.updates_per_block,
                       "q1_loss": float(means[0]), "q2_loss": float(means[1]),
                       "policy_loss": float(means[2]),
                       "alpha_loss": float(means[3]),
                       "alpha": float(means[4]), "entropy": float(means[5])}
                log.write(rec)
                records.append(rec)
                if hooks and hooks.on_record:
                    hooks.on_record(rec)
                if hooks and hooks.on_phase:
                    hooks.on_phase("testing")
                records.extend(_eval_block(agent, layout, cfg, block,
                                           trial_counter, log, traces_fh, hooks,
                                           live_cell=live_cell))
                trial_counter += sched.eval_trials
                save_checkpoint(
                    ckpt_path, agent=agent, buffer=buffer,
                    config_dict=cfg_dict, config_hash=cfg_hash,
                    progress={"steps_done": step, "blocks_done": block,
                              "trial_counter": trial_counter,
                              "total_updates": total_updates},
                    env_state=env.get_state(),
                    partner_state=partner.get_state(),
                    rng_states={"action": action_rng.bit_generator.state,
                                "update": update_rng.bit_generator.state},
                )
                if hooks and hooks.on_phase and step < sched.total_interaction_steps:
                    hooks.on_phase("training")

        footer = {"type": "run_footer", "total_updates": total_updates,
                  "wall_time_s": time.monotonic() - t_start}
        log.write(footer)
        records.append(footer)
        if hooks and hooks.on_phase:
            hooks.on_phase("finished")
    finally:
        log.close()
        traces_fh.close()
    return RunResult(out_dir=out_dir, records=records, total_updates=total_updates)


def evaluate(checkpoint_path, partner_spec=None, n_trials: int = 10,
             seed: int = 0, config_path=None) -> list[TrialScore]:
    """Deterministic test episodes from a stored checkpoint."""
    from .config import config_from_dict, load_config

    ck = load_checkpoint(checkpoint_path)
    cfg = config_from_dict(ck["manifest"]["config"])
    if config_path is not None:
        given = load_config(config_path)
        if config_hash(given) != ck["manifest"]["config_hash"]:
            raise ValueError("config file does not match the checkpoint")
    if partner_spec is not None:
        cfg = dataclasses.replace(cfg, partner=partner_spec)
    layout = _load_layout(cfg)
    agent = ck["agent"]
    out = []
    for trial in range(n_trials):
        env_rng = _rng_from(cfg.env.seed, 0xE7A1, seed, trial)
        partner = make_partner(cfg.partner, layout, cfg.phys, cfg.env,
                               _rng_from(cfg.partner.seed, 0xE7A2, seed, trial))
        ts, _ = run_eval_trial(agent, layout, cfg, partner, env_rng,
                               cfg.schedule.step_cap)
        out.append(ts)
    return out


def replay(run_dir, trial_index: int) -> dict:
    """Stored per-step trace of one evaluation trial."""
    traces_path = Path(run_dir) / TRACES_NAME
    if not traces_path.exists():
        raise FileNotFoundError(f"no traces recorded under {run_dir}")
    with open(traces_path) as fh:
        for line in fh:
            if line.strip():
                trace = json.loads(line)
                if trace["trial_index"] == trial_index:
                    return trace
    raise KeyError(f"trial {trial_index} not found in {traces_path}")
