import csv
import dataclasses

import numpy as np
import pytest

from mentordrive.dynamics import equilibrium_gap
from mentordrive.env import ScenarioConfig, reset
from mentordrive.expert import ExpertConfig
from mentordrive.funcapprox.nets import init_policy, policy_mean_action
from mentordrive.harness import (
    ConfigError,
    EvalReport,
    RunConfig,
    export_platoon_trace,
    load_policy_checkpoint,
    load_run_config,
    run_eval,
    run_train,
    save_policy_checkpoint,
)
from mentordrive.trainer import TrainerConfig

SMALL_SCENARIO = dict(road_length=150.0, obstacle_count_min=2,
                      obstacle_count_max=3, horizon=150, n_followers=2)
FAST_TRAINER = dict(hidden=[8, 8], batch_size=8, steps_before_learning=20,
                    steps_per_iteration=20)


def write_config(tmp_path, text):
    p = tmp_path / "run.yaml"
    p.write_text(text)
    return str(p)


def fast_run_config():
    return RunConfig(
        scenario=ScenarioConfig(**SMALL_SCENARIO),
        trainer=TrainerConfig(hidden=(8, 8), batch_size=8,
                              steps_before_learning=20,
                              steps_per_iteration=20),
        total_env_steps=60, eval_every=2, eval_episodes=2)


class TestRunConfig:
    def test_defaults_load_from_empty_file(self, tmp_path):
        cfg = load_run_config(write_config(tmp_path, ""))
        assert cfg == RunConfig()
        assert cfg.total_env_steps == 30_000

    def test_nested_overrides(self, tmp_path):
        cfg = load_run_config(write_config(tmp_path, """
scenario:
  road_length: 300.0
  idm:
    v0: 12.0
trainer:
  hidden: [16, 16]
  gamma: 0.95
expert:
  mode: sparse
total_env_steps: 500
"""))
        assert cfg.scenario.road_length == 300.0
        assert cfg.scenario.idm.v0 == 12.0
        assert cfg.trainer.hidden == (16, 16)
        assert cfg.trainer.gamma == 0.95
        assert cfg.expert.mode == "sparse"
        assert cfg.total_env_steps == 500

    def test_unknown_keys_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(write_config(tmp_path, "trainer:\n  lr_rate: 1\n"))
        with pytest.raises(ConfigError):
            load_run_config(write_config(tmp_path, "mystery: 1\n"))

    def test_every_trainer_tunable_in_schema(self, tmp_path):
        # config -> run mapping is total over the trainer's fields
        fields = {f.name: getattr(TrainerConfig(), f.name)
                  for f in dataclasses.fields(TrainerConfig)}
        lines = ["trainer:"]
        for name, value in fields.items():
            if isinstance(value, tuple):
                value = list(value)
            lines.append(f"  {name}: {value}")
        cfg = load_run_config(write_config(tmp_path, "\n".join(lines)))
        assert cfg.trainer == TrainerConfig()

    def test_hash_stable_and_sensitive(self):
        a, b = RunConfig(), RunConfig()
        assert a.hash() == b.hash()
        c = dataclasses.replace(a, total_env_steps=10)
        assert c.hash() != a.hash()


class TestCheckpointRoundTrip:
    def test_policy_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        scenario = ScenarioConfig(**SMALL_SCENARIO)
        policy = init_policy(scenario.obs_dim, [8, 8], 2, rng)
        path = str(tmp_path / "p.ckpt")
        save_policy_checkpoint(path, policy, fast_run_config(), seed=3,
                               env_steps=60)
        loaded, meta = load_policy_checkpoint(path, scenario)
        obs = rng.uniform(-1, 1, scenario.obs_dim)
        assert np.array_equal(policy_mean_action(policy, obs),
                              policy_mean_action(loaded, obs))
        assert meta["seed"] == 3

    def test_scenario_hash_mismatch_refused(self, tmp_path):
        rng = np.random.default_rng(0)
        scenario = ScenarioConfig(**SMALL_SCENARIO)
        policy = init_policy(scenario.obs_dim, [8, 8], 2, rng)
        path = str(tmp_path / "p.ckpt")
        save_policy_checkpoint(path, policy, fast_run_config(), 0, 0)
        other = ScenarioConfig()
        with pytest.raises(ConfigError):
            load_policy_checkpoint(path, other)
        loaded, _ = load_policy_checkpoint(path, other, force=True)
        assert loaded.trunk.weights[0].shape[0] == scenario.obs_dim + 0


class TestRunEval:
    def test_untrained_policy_near_zero_success(self):
        rng = np.random.default_rng(1)
        scenario = ScenarioConfig(**SMALL_SCENARIO)
        policy = init_policy(scenario.obs_dim, [8, 8], 2, rng)
        report = run_eval(policy, scenario, n_episodes=3)
        assert report.success_rate <= 0.35
        assert report.episodes == 3

    def test_repeatable(self):
        rng = np.random.default_rng(2)
        scenario = ScenarioConfig(**SMALL_SCENARIO)
        policy = init_policy(scenario.obs_dim, [8, 8], 2, rng)
        r1 = run_eval(policy, scenario, n_episodes=3)
        r2 = run_eval(policy, scenario, n_episodes=3)
        assert r1 == r2

    def test_report_validation(self):
        with pytest.raises(ValueError):
            EvalReport(success_rate=1.5, return_mean=0, return_sd=0,
                       safety_violation=0, disturbance_rate=0, episodes=1)


class TestRunTrain:
    def test_artifacts_and_determinism(self, tmp_path):
        cfg = fast_run_config()
        p1 = run_train(cfg, seed=0, out_dir=str(tmp_path / "a"))
        p2 = run_train(cfg, seed=0, out_dir=str(tmp_path / "b"))
        b1 = open(p1["metrics"], "rb").read()
        b2 = open(p2["metrics"], "rb").read()
        assert b1 == b2
        c1 = open(p1["checkpoint"], "rb").read()
        c2 = open(p2["checkpoint"], "rb").read()
        assert c1 == c2

    def test_metrics_schema(self, tmp_path):
        cfg = fast_run_config()
        paths = run_train(cfg, seed=1, out_dir=str(tmp_path / "m"))
        with open(paths["metrics"]) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iter", "env_steps", "takeover_rate",
                           "takeover_cost", "d_cost", "disturbance_rate",
                           "train_success_rate", "eval_success_rate",
                           "eval_return", "eval_safety_violation", "alpha",
                           "config_hash"]
        assert len(rows) - 1 == 3    # 60 steps / 20 per iteration
        # eval columns filled on eval iterations, blank otherwise
        assert rows[1][7] == ""
        assert rows[2][7] != ""
        assert all(r[-1] == cfg.hash() for r in rows[1:])

    def test_different_seed_differs(self, tmp_path):
        cfg = fast_run_config()
        p1 = run_train(cfg, seed=0, out_dir=str(tmp_path / "s0"))
        p2 = run_train(cfg, seed=5, out_dir=str(tmp_path / "s5"))
        assert open(p1["checkpoint"], "rb").read() != \
            open(p2["checkpoint"], "rb").read()


class TestExportTrace:
    def test_schema_and_expert_drive(self, tmp_path):
        scenario = ScenarioConfig(**SMALL_SCENARIO)
        out = str(tmp_path / "trace.csv")
        export_platoon_trace(None, scenario, seed=0, out_path=out,
                             max_steps=50)
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "vehicle_id", "loc", "v", "acc"]
        ids = {r[1] for r in rows[1:]}
        assert ids == {"av", "hv1", "hv2"}
        per_step = 1 + scenario.n_followers
        assert (len(rows) - 1) % per_step == 0

    def test_equilibrium_scenario_holds_speed(self, tmp_path):
        # drive the lead vehicle at a constant speed with followers at their
        # equilibrium gap: every logged velocity stays at v*
        from dataclasses import replace as dreplace

        from mentordrive.dynamics import HvState, AvState
        from mentordrive import env as envmod

        scenario = ScenarioConfig(road_length=10_000.0, obstacle_count_min=0,
                                  obstacle_count_max=0, horizon=60,
                                  n_followers=3)
        v_star = 10.0
        d_star = equilibrium_gap(v_star)

        world, obs = envmod.reset(scenario, 0)
        world.av = dreplace(world.av, v=v_star)
        world.followers = [HvState(loc=-(i + 1) * d_star, v=v_star,
                                   d=d_star)
                           for i in range(3)]
        out = str(tmp_path / "eq.csv")
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "vehicle_id", "loc", "v", "acc"])
            for _ in range(50):
                writer.writerow([world.t, "av", world.av.x, world.av.v,
                                 world.av.acc])
                for i, hv in enumerate(world.followers):
                    writer.writerow([world.t, f"hv{i+1}", hv.loc, hv.v,
                                     hv.acc])
                world, obs, _ = envmod.step(scenario, world, (0.0, 0.0))
        with open(out) as fh:
            rows = list(csv.reader(fh))[1:]
        for r in rows:
            assert float(r[3]) == pytest.approx(v_star, abs=1e-6)
