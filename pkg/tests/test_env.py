import numpy as np
import pytest
from dataclasses import replace

from mentordrive.dynamics import AvState
from mentordrive.env import (
    EpisodeFinishedError,
    ScenarioConfig,
    ScenarioError,
    StepInfo,
    WorldState,
    ground_truth_failure,
    observe,
    reset,
    step,
)

CFG = ScenarioConfig()


def world_equal(a: WorldState, b: WorldState) -> bool:
    return (a.av == b.av and a.followers == b.followers
            and np.array_equal(a.obstacles, b.obstacles) and a.t == b.t)


class TestReset:
    def test_deterministic(self):
        w1, o1 = reset(CFG, seed=7)
        w2, o2 = reset(CFG, seed=7)
        assert world_equal(w1, w2)
        assert np.array_equal(o1, o2)

    def test_different_seeds_differ(self):
        w1, _ = reset(CFG, seed=1)
        w2, _ = reset(CFG, seed=2)
        assert not np.array_equal(w1.obstacles, w2.obstacles)

    def test_follower_spacing(self):
        w, _ = reset(CFG, seed=3)
        assert w.followers[0].loc == pytest.approx(w.av.x - 15.0)
        assert w.followers[4].loc == pytest.approx(w.av.x - 75.0)

    def test_no_obstacles_rays_clear(self):
        cfg = replace(CFG, obstacle_count_min=0, obstacle_count_max=0)
        _, obs = reset(cfg, seed=4)
        assert np.all(obs[-cfg.ray_count:] == 1.0)

    def test_spawn_protection(self):
        for seed in range(20):
            w, _ = reset(CFG, seed=seed)
            assert np.all(w.obstacles[:, 0] >= CFG.spawn_protection)

    def test_infeasible_config(self):
        with pytest.raises(ScenarioError):
            ScenarioConfig(obstacle_count_min=5, obstacle_count_max=2)
        with pytest.raises(ScenarioError):
            _ = reset(ScenarioConfig(road_length=120.0,
                                     obstacle_count_min=12,
                                     obstacle_count_max=12), seed=0)


class TestStep:
    def test_zero_action_at_spawn_safe(self):
        w, _ = reset(CFG, seed=5)
        w2, obs, info = step(CFG, w, (0.0, 0.0))
        assert not info.done and info.env_cost == 0
        assert w2.t == 1

    def test_success_flag_and_bonus(self):
        w, _ = reset(CFG, seed=6)
        w = WorldState(av=AvState(x=CFG.road_length - 0.5, y=w.av.y, v=10.0),
                       followers=w.followers, obstacles=w.obstacles, t=10)
        w2, _, info = step(CFG, w, (0.0, 0.0))
        assert info.success and info.done
        assert info.eval_reward > 20.0

    def test_obstacle_crash(self):
        w, _ = reset(CFG, seed=7)
        ox, oy, _ = w.obstacles[0]
        w = WorldState(av=AvState(x=ox - 1.0, y=oy, v=10.0),
                       followers=w.followers, obstacles=w.obstacles, t=0)
        w2, _, info = step(CFG, w, (0.0, 1.0))
        assert info.crash and info.done and info.env_cost == 1

    def test_off_road_terminates(self):
        w, _ = reset(CFG, seed=8)
        w = WorldState(av=AvState(x=100.0, y=0.1, v=10.0, heading=-1.0),
                       followers=w.followers, obstacles=w.obstacles, t=0)
        _, _, info = step(CFG, w, (-1.0, 0.0))
        assert info.off_road and info.done

    def test_horizon_timeout(self):
        w, _ = reset(CFG, seed=9)
        w = WorldState(av=w.av, followers=w.followers, obstacles=w.obstacles,
                       t=CFG.horizon - 1)
        _, _, info = step(CFG, w, (0.0, 0.0))
        assert info.done and not info.success and not info.crash

    def test_step_after_done_raises(self):
        w, _ = reset(CFG, seed=10)
        w.done = True
        with pytest.raises(EpisodeFinishedError):
            step(CFG, w, (0.0, 0.0))

    def test_purity(self):
        w, _ = reset(CFG, seed=11)
        snapshot = w.copy()
        step(CFG, w, (0.3, 0.9))
        assert world_equal(w, snapshot)

    def test_eval_reward_progress(self):
        w, _ = reset(CFG, seed=12)
        w = WorldState(av=AvState(x=100.0, y=w.av.y, v=10.0),
                       followers=w.followers, obstacles=w.obstacles, t=0)
        w2, _, info = step(CFG, w, (0.0, 0.0))
        dx = w2.av.x - 100.0
        want = dx + 0.1 * (w2.av.v / CFG.av.v_cap) * CFG.dt
        assert info.eval_reward == pytest.approx(want)


class TestDeterminismAndInvariants:
    def test_identical_action_sequences(self):
        actions = [(0.1 * np.sin(i), 0.8) for i in range(60)]
        traj1 = self._roll(actions)
        traj2 = self._roll(actions)
        for (w1, o1), (w2, o2) in zip(traj1, traj2):
            assert world_equal(w1, w2)
            assert np.array_equal(o1, o2)

    @staticmethod
    def _roll(actions):
        w, o = reset(CFG, seed=13)
        out = [(w, o)]
        for a in actions:
            if w.done:
                break
            w, o, _ = step(CFG, w, a)
            out.append((w, o))
        return out

    def test_followers_never_pass_av(self):
        w, _ = reset(CFG, seed=14)
        for _ in range(300):
            if w.done:
                break
            w, _, _ = step(CFG, w, (0.0, 0.5))
            locs = [w.av.x] + [h.loc for h in w.followers]
            assert all(a > b for a, b in zip(locs, locs[1:]))

    def test_observation_bounds_fuzz(self):
        rng = np.random.default_rng(15)
        w, obs = reset(CFG, seed=16)
        for i in range(2000):
            if w.done:
                w, obs = reset(CFG, seed=17 + i)
            a = tuple(rng.uniform(-1, 1, size=2))
            w, obs, _ = step(CFG, w, a)
            assert obs.shape == (CFG.obs_dim,)
            assert np.all(obs >= -1.0 - 1e-12) and np.all(obs <= 1.0 + 1e-12)


class TestGroundTruthFailure:
    def test_mild_action_safe(self):
        w, _ = reset(CFG, seed=18)
        assert ground_truth_failure(CFG, w, (0.0, 0.1)) == 0

    def test_forced_overlap(self):
        w, _ = reset(CFG, seed=19)
        ox, oy, _ = w.obstacles[0]
        w = WorldState(av=AvState(x=ox - 2.0, y=oy, v=10.0),
                       followers=w.followers, obstacles=w.obstacles, t=0)
        assert ground_truth_failure(CFG, w, (0.0, 1.0)) == 1

    def test_matches_copy_step_oracle(self):
        rng = np.random.default_rng(20)
        w, _ = reset(CFG, seed=21)
        for i in range(500):
            if w.done:
                w, _ = reset(CFG, seed=100 + i)
            a = tuple(rng.uniform(-1, 1, size=2))
            flag = ground_truth_failure(CFG, w, a)
            w2, _, info = step(CFG, w.copy(), a)
            assert flag == int(info.crash or info.off_road)
            w = w2

    def test_does_not_mutate(self):
        w, _ = reset(CFG, seed=22)
        snap = w.copy()
        ground_truth_failure(CFG, w, (1.0, 1.0))
        assert world_equal(w, snap)
