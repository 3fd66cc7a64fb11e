import dataclasses
import json

import numpy as np
import pytest

from traymaze.checkpoint import CHECKPOINT_NAME
from traymaze.config import (
    ConfigError,
    Schedule,
    config_from_dict,
    config_hash,
    config_to_dict,
    default_config,
    load_config,
    with_overrides,
)
from traymaze.env import TrayBallEnv
from traymaze.harness import (
    TrainHooks,
    TrialScore,
    evaluate,
    replay,
    run_eval_trial,
    score,
    train,
)
from traymaze.layout import default_layout
from traymaze.partner import FrozenPartner, PartnerSpec, make_partner
from traymaze.physics import PhysState
from traymaze.runlog import read_runlog
from traymaze.sac import SacAgent, SacConfig


class TestScore:
    def test_first_step_success_scores_200(self):
        assert score(True, 1, 200) == 200

    def test_miss_scores_zero(self):
        assert score(False, 200, 200) == 0
        assert score(False, 7, 200) == 0

    def test_linear_formula(self):
        assert score(True, 101, 200) == 100
        assert score(True, 200, 200) == 1

    def test_out_of_range_steps_rejected(self):
        with pytest.raises(ValueError):
            score(True, 0, 200)
        with pytest.raises(ValueError):
            score(True, 201, 200)

    def test_bounds_over_all_outcomes(self):
        for steps in range(1, 201):
            assert 0 <= score(True, steps, 200) <= 200
            assert score(False, steps, 200) == 0

    def test_trial_score_consistency(self):
        with pytest.raises(ValueError):
            TrialScore(reached=False, steps_used=10, score=5)


class TestSchedule:
    def test_experiment_one_arithmetic(self):
        s = Schedule(3500, 20000, 500, 10, 200)
        assert s.n_blocks == 7
        assert s.total_updates == 140_000

    def test_experiment_two_arithmetic(self):
        s = Schedule(3000, 10000, 500, 10, 200)
        assert s.n_blocks == 6
        assert s.total_updates == 60_000

    def test_zero_block_schedule_rejected(self):
        with pytest.raises(ConfigError):
            Schedule(total_interaction_steps=100, block_size=200)

    def test_indivisible_block_rejected(self):
        with pytest.raises(ConfigError):
            Schedule(total_interaction_steps=1000, block_size=300)

    @pytest.mark.parametrize("field", [
        "total_interaction_steps", "updates_per_block", "block_size",
        "eval_trials", "step_cap"])
    def test_positivity(self, field):
        with pytest.raises(ConfigError):
            Schedule(**{field: 0})


class TestConfig:
    def test_round_trip(self):
        cfg = default_config()
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="sections"):
            config_from_dict({"physics": {}, "reward_shaping": {}})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="gravy"):
            config_from_dict({"physics": {"gravy": 9.81}})

    def test_invalid_value_reported_with_section(self):
        with pytest.raises(ConfigError, match="sac"):
            config_from_dict({"sac": {"gamma": 2.0}})

    def test_partial_sections_use_defaults(self):
        cfg = config_from_dict({"schedule": {"total_interaction_steps": 1000,
                                             "block_size": 500}})
        assert cfg.schedule.n_blocks == 2
        assert cfg.phys == default_config().phys

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "run.json"
        p.write_text(json.dumps({"env": {"seed": 7}}))
        assert load_config(p).env.seed == 7

    def test_malformed_json_reported(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_overrides(self):
        cfg = with_overrides(default_config(), seed=5, partner_kind="novice")
        assert cfg.env.seed == 5
        assert cfg.sac.seed == 1005
        assert cfg.partner.seed == 2005
        assert cfg.partner.kind == "novice"

    def test_hash_tracks_content(self):
        a = default_config()
        b = with_overrides(a, seed=99)
        assert config_hash(a) != config_hash(b)
        assert config_hash(a) == config_hash(default_config())


class TestTrainRun:
    def test_record_structure(self, tiny_run):
        cfg, result = tiny_run
        records = result.records
        assert records[0]["type"] == "run_header"
        assert records[-1]["type"] == "run_footer"
        n_blocks = cfg.schedule.n_blocks
        blocks = [r for r in records if r["type"] == "block"]
        trials = [r for r in records if r["type"] == "eval_trial"]
        summaries = [r for r in records if r["type"] == "eval_block"]
        assert len(blocks) == n_blocks
        assert len(trials) == n_blocks * cfg.schedule.eval_trials
        assert len(summaries) == n_blocks
        assert records[-1]["total_updates"] == cfg.schedule.total_updates
        for r in blocks:
            assert r["updates"] == cfg.schedule.updates_per_block

    def test_scores_within_bounds(self, tiny_run):
        cfg, result = tiny_run
        for r in result.records:
            if r["type"] == "eval_trial":
                assert 0 <= r["score"] <= cfg.schedule.step_cap
                assert r["reached"] == (r["score"] > 0)

    def test_runlog_on_disk_matches_memory(self, tiny_run):
        _, result = tiny_run
        on_disk = read_runlog(result.out_dir / "runlog.jsonl")
        assert on_disk == json.loads(json.dumps(result.records))

    def test_rewards_are_sparse_set(self, tiny_run):
        _, result = tiny_run
        traces = (result.out_dir / "traces.jsonl").read_text().splitlines()
        seen = set()
        for line in traces:
            t = json.loads(line)
            seen.update(s["reward"] for s in t["steps"])
        assert seen <= {-1.0, 10.0}

    def test_checkpoint_written(self, tiny_run):
        _, result = tiny_run
        assert (result.out_dir / CHECKPOINT_NAME).exists()


class TestResume:
    def _tiny_cfg(self):
        cfg = default_config()
        return dataclasses.replace(
            cfg,
            schedule=Schedule(total_interaction_steps=400, updates_per_block=30,
                              block_size=100, eval_trials=2, step_cap=50),
            sac=dataclasses.replace(cfg.sac, random_steps=60, batch_size=32,
                                    hidden=(16, 16)),
        )

    class _StopAfter(Exception):
        pass

    def test_interrupted_run_resumes_bit_exact(self, tmp_path):
        cfg = self._tiny_cfg()
        ref_dir = tmp_path / "straight"
        train(cfg, ref_dir)
        ref = read_runlog(ref_dir / "runlog.jsonl")

        cut_dir = tmp_path / "interrupted"
        seen = []

        def stop_after_two_blocks(rec):
            if rec["type"] == "eval_block":
                seen.append(rec)
                if len(seen) == 2:
                    raise self._StopAfter()

        with pytest.raises(self._StopAfter):
            train(cfg, cut_dir, hooks=TrainHooks(on_record=stop_after_two_blocks))
        resumed = train(cfg, cut_dir)
        got = read_runlog(cut_dir / "runlog.jsonl")

        def strip_wall(recs):
            return [{k: v for k, v in r.items() if k != "wall_time_s"}
                    for r in recs]

        assert strip_wall(got) == strip_wall(ref)
        assert resumed.total_updates == cfg.schedule.total_updates

    def test_resume_rejects_changed_config(self, tmp_path):
        cfg = self._tiny_cfg()
        train(cfg, tmp_path / "run")
        other = with_overrides(cfg, seed=123)
        with pytest.raises(ValueError, match="different config"):
            train(other, tmp_path / "run")


class TestLayoutPath:
    def test_config_layout_file_is_loaded(self, layout, tmp_path):
        from traymaze.harness import _load_layout
        from traymaze.layout import save_layout
        import dataclasses as dc

        custom = dc.replace(layout, goal_radius=0.05)
        path = tmp_path / "custom_layout.json"
        save_layout(custom, path)
        cfg = dc.replace(default_config(), layout_path=str(path))
        loaded = _load_layout(cfg)
        assert loaded.goal_radius == 0.05
        assert _load_layout(default_config()).goal_radius == 0.04


class TestEvalPurity:
    def test_eval_leaves_agent_untouched(self, layout, phys_cfg):
        cfg = default_config()
        agent = SacAgent(SacConfig(hidden=(8, 8), seed=0))
        snap = (agent.policy.flat.copy(), agent.q.flat.copy(),
                agent.q_target.flat.copy(), float(agent.temperature.log_alpha))
        partner = make_partner(cfg.partner, layout, phys_cfg, cfg.env,
                               np.random.default_rng(0))
        run_eval_trial(agent, layout, cfg, partner,
                       np.random.default_rng(1), step_cap=40)
        assert np.array_equal(agent.policy.flat, snap[0])
        assert np.array_equal(agent.q.flat, snap[1])
        assert np.array_equal(agent.q_target.flat, snap[2])
        assert float(agent.temperature.log_alpha) == snap[3]


class TestEvaluateStubs:
    class InstantAgent:
        def select_action(self, obs, mode="deterministic", rng=None):
            return 0.0

    def test_frozen_team_scores_zero(self, layout, phys_cfg):
        cfg = default_config()
        stub = self.InstantAgent()
        for trial in range(3):
            ts, _ = run_eval_trial(stub, layout, cfg, FrozenPartner(),
                                   np.random.default_rng(trial), step_cap=50)
            assert not ts.reached and ts.score == 0

    def test_instant_success_scores_cap(self, layout, phys_cfg):
        # degenerate wall-free layout whose start region sits on the goal
        instant = dataclasses.replace(
            layout, walls=(), start_center=layout.goal_center.copy())
        cfg = default_config()
        ts, _ = run_eval_trial(self.InstantAgent(), instant, cfg,
                               FrozenPartner(), np.random.default_rng(0),
                               step_cap=200)
        assert ts.reached and ts.steps_used == 1 and ts.score == 200

    def test_evaluate_from_checkpoint(self, tiny_run):
        cfg, result = tiny_run
        scores = evaluate(result.out_dir / CHECKPOINT_NAME, n_trials=3, seed=1)
        assert len(scores) == 3
        for ts in scores:
            assert 0 <= ts.score <= cfg.schedule.step_cap

    def test_evaluate_rejects_mismatched_config(self, tiny_run, tmp_path):
        cfg, result = tiny_run
        other = tmp_path / "other.json"
        other.write_text(json.dumps({"env": {"seed": 31337}}))
        with pytest.raises(ValueError, match="match"):
            evaluate(result.out_dir / CHECKPOINT_NAME, config_path=other)


class TestReplay:
    def test_trace_lengths_bounded(self, tiny_run):
        cfg, result = tiny_run
        trace = replay(result.out_dir, 0)
        assert 1 <= len(trace["steps"]) <= cfg.schedule.step_cap

    def test_rewards_resum_to_return(self, tiny_run):
        _, result = tiny_run
        trace = replay(result.out_dir, 1)
        total = sum(s["reward"] for s in trace["steps"])
        expected = 10.0 - (trace["steps_used"] - 1) if trace["reached"] \
            else -float(trace["steps_used"])
        assert total == expected

    def test_resimulation_reproduces_states_bit_exact(self, tiny_run):
        cfg, result = tiny_run
        layout = default_layout()
        trace = replay(result.out_dir, 0)
        env = TrayBallEnv(layout, cfg.phys,
                          dataclasses.replace(cfg.env,
                                              step_cap=cfg.schedule.step_cap))
        env.reset()
        env.state = PhysState.from_dict(trace["initial"])
        env.steps_elapsed = 0
        env.done = False
        for step in trace["steps"]:
            sr = env.step(step["action"], step["partner"])
            assert env.state.to_dict() == step["phys"]
            assert sr.reward == step["reward"]

    def test_unknown_trial_rejected(self, tiny_run):
        _, result = tiny_run
        with pytest.raises(KeyError):
            replay(result.out_dir, 10_000)


class TestCli:
    def test_train_eval_replay_pipeline(self, tmp_path, capsys):
        from traymaze.cli import main

        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "schedule": {"total_interaction_steps": 200, "updates_per_block": 20,
                         "block_size": 100, "eval_trials": 2, "step_cap": 40},
            "sac": {"random_steps": 50, "batch_size": 32, "hidden": [16, 16]},
        }))
        out = tmp_path / "run"
        assert main(["train", "--config", str(cfg_path), "--out", str(out),
                     "--seed", "3"]) == 0
        assert (out / "runlog.jsonl").exists()
        captured = capsys.readouterr().out
        assert "block 2" in captured

        assert main(["eval", "--checkpoint", str(out / CHECKPOINT_NAME),
                     "--trials", "2"]) == 0
        assert "mean" in capsys.readouterr().out

        assert main(["replay", "--run", str(out), "--trial", "0",
                     "--format", "csv"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("step,action,partner")
        assert main(["replay", "--run", str(out), "--trial", "1",
                     "--format", "jsonl"]) == 0

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        from traymaze.cli import main

        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"physics": {"warp": 9}}))
        assert main(["train", "--config", str(cfg_path),
                     "--out", str(tmp_path / "x")]) == 2
        assert "warp" in capsys.readouterr().err

    def test_replay_unknown_trial_exits_nonzero(self, tiny_run):
        from traymaze.cli import main

        _, result = tiny_run
        assert main(["replay", "--run", str(result.out_dir),
                     "--trial", "999"]) == 2
