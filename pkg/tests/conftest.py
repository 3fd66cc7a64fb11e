"""Shared fixtures. The expensive simulations (single-axis sweep, scripted
episode batteries, a small end-to-end training run) are session-scoped so
the unit suite and the acceptance suite reuse one computation.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from traymaze.config import Schedule, default_config
from traymaze.env import AXIS_ABOUT_X, EnvConfig, TrayBallEnv
from traymaze.layout import default_layout, single_axis_goal_sweep
from traymaze.partner import PartnerSpec, ScriptedPartner, make_partner
from traymaze.physics import PhysConfig


@pytest.fixture(scope="session")
def layout():
    return default_layout()


@pytest.fixture(scope="session")
def phys_cfg():
    return PhysConfig()


@pytest.fixture(scope="session")
def env_cfg():
    return EnvConfig()


def run_scripted_episode(layout, phys_cfg, seed, partner_spec,
                         agent="expert", step_cap=200):
    """One episode with a scripted partner on the partner axis and either a
    scripted expert or uniform-random actions on the agent axis."""
    env_cfg = EnvConfig(seed=seed, step_cap=step_cap)
    env = TrayBallEnv(layout, phys_cfg, env_cfg)
    obs = env.reset(np.random.default_rng(seed))
    partner = make_partner(partner_spec, layout, phys_cfg, env_cfg,
                           np.random.default_rng(seed + 1))
    agent_ctl = ScriptedPartner(PartnerSpec(seed=seed), layout, phys_cfg,
                                env_cfg, axis=AXIS_ABOUT_X,
                                rng=np.random.default_rng(seed + 2))
    partner.reset()
    agent_ctl.reset()
    agent_rng = np.random.default_rng(seed + 3)
    while True:
        now = env.steps_elapsed * env_cfg.control_interval
        if agent == "expert":
            a = agent_ctl.command(obs, now)
        else:
            a = float(agent_rng.uniform(-1.0, 1.0))
        sr = env.step(a, partner.command(obs, now))
        obs = sr.obs
        if sr.done:
            return sr.reached_goal, sr.steps_elapsed


@pytest.fixture(scope="session")
def expert_expert_episodes(layout, phys_cfg):
    """(reached, steps) for 10 seeded expert+expert episodes."""
    return [run_scripted_episode(layout, phys_cfg, seed, PartnerSpec())
            for seed in range(10)]


@pytest.fixture(scope="session")
def single_axis_sweep_hits(layout):
    return single_axis_goal_sweep(layout)


@pytest.fixture(scope="session")
def tiny_run(tmp_path_factory):
    """A completed small training run shared by harness/replay/CLI tests."""
    from traymaze.harness import train

    cfg = dataclasses.replace(
        default_config(),
        schedule=Schedule(total_interaction_steps=300, updates_per_block=40,
                          block_size=100, eval_trials=2, step_cap=60),
        sac=dataclasses.replace(default_config().sac, random_steps=50,
                                batch_size=32, hidden=(16, 16)),
    )
    out = tmp_path_factory.mktemp("tiny_run")
    result = train(cfg, out)
    return cfg, result
