import math
from dataclasses import replace

import numpy as np
import pytest

from mentordrive.disturbance import (
    DisturbanceConfig,
    braking_edge,
    current_avg_velocity,
    disturbance_cost,
    predict_avg_velocity,
    realized_accel,
)
from mentordrive.dynamics import AvState, HvState, IdmParams, equilibrium_gap, step_av, step_hv

CFG = DisturbanceConfig()


def equilibrium_platoon(v_star=10.0, n=5):
    d_star = equilibrium_gap(v_star)
    av = AvState(x=0.0, v=v_star)
    followers = [HvState(loc=-(i + 1) * d_star, v=v_star, d=d_star)
                 for i in range(n)]
    return followers, av


def naive_rollout_oracle(followers, av, action, cfg):
    """Independently coded rollout: explicit loops, no shared helpers."""
    platoon = [(h.loc, h.v) for h in followers]
    lead_x, lead_y, lead_head, lead_v = av.x, av.y, av.heading, av.v
    steer = min(1.0, max(-1.0, action[0])) * cfg.av.steer_max
    total, count = 0.0, 0
    dead = False
    for _ in range(cfg.rollout_steps):
        if not dead:
            prev_lead_x, prev_lead_v = lead_x, lead_v
            accel = min(1.0, max(-1.0, action[1]))
            accel *= cfg.av.a_accel_max if accel >= 0 else cfg.av.a_brake_max
            v_new = min(cfg.av.v_cap, max(0.0, lead_v + cfg.dt * accel))
            lead_head = lead_head + cfg.dt * (v_new / cfg.av.wheelbase) * math.tan(steer)
            lead_x = lead_x + cfg.dt * v_new * math.cos(lead_head)
            lead_v = v_new
            new_platoon = []
            ll, lv = prev_lead_x, prev_lead_v
            for loc, v in platoon:
                gap = ll - loc
                if gap <= 0:
                    dead = True
                    break
                s_star = max(cfg.idm.s0,
                             cfg.idm.s0 + v * cfg.idm.t_headway
                             + v * (v - lv) / (2 * math.sqrt(cfg.idm.a_max * cfg.idm.b)))
                acc = cfg.idm.a_max * (1 - (v / cfg.idm.v0) ** cfg.idm.delta
                                       - (s_star / gap) ** 2)
                vn = max(0.0, v + cfg.dt * acc)
                ll, lv = loc, v
                new_platoon.append((loc + cfg.dt * vn, vn))
            if not dead:
                platoon = new_platoon
        total += 0.0 if dead else sum(v for _, v in platoon)
        count += 1
    return total / (count * len(followers))


class TestCurrentAvgVelocity:
    def test_equilibrium_returns_v_star(self):
        followers, av = equilibrium_platoon()
        assert current_avg_velocity(followers, av) == pytest.approx(10.0, abs=1e-9)

    def test_mean_of_equal_speeds_with_zero_accel(self):
        # massive gaps at desired speed: accel ~ 0, mean stays ~10
        idm = IdmParams(v0=10.0 + 1e-9)
        cfg = replace(CFG, idm=idm)
        followers = [HvState(loc=-1000.0 * (i + 1), v=10.0) for i in range(3)]
        av = AvState(x=1000.0, v=10.0)
        assert current_avg_velocity(followers, av, cfg) == pytest.approx(10.0, abs=1e-3)

    def test_empty_platoon_raises(self):
        with pytest.raises(ValueError):
            current_avg_velocity([], AvState())


class TestPredictAvgVelocity:
    def test_equilibrium_fixed_point(self):
        followers, av = equilibrium_platoon()
        # throttle that holds v*: IDM equilibrium needs zero accel
        pred = predict_avg_velocity(followers, av, (0.0, 0.0))
        assert pred == pytest.approx(10.0, abs=1e-6)

    def test_full_brake_slows_platoon(self):
        followers, av = equilibrium_platoon()
        cur = current_avg_velocity(followers, av)
        pred = predict_avg_velocity(followers, av, (0.0, -1.0))
        assert pred < cur

    def test_single_step_horizon(self):
        followers, av = equilibrium_platoon(v_star=8.0)
        cfg = replace(CFG, persist_horizon=0.1)
        pred = predict_avg_velocity(followers, av, (0.0, -1.0), cfg)
        # one synchronized IDM update behind the pre-step lead state
        stepped = []
        ll, lv = av.x, av.v
        for h in followers:
            s = step_hv(h, ll, lv, 0.1)
            ll, lv = h.loc, h.v
            stepped.append(s)
        want = sum(h.v for h in stepped) / len(stepped)
        assert pred == pytest.approx(want, abs=1e-12)

    def test_inputs_not_mutated(self):
        followers, av = equilibrium_platoon()
        before = [(h.loc, h.v) for h in followers]
        predict_avg_velocity(followers, av, (0.0, -1.0))
        assert [(h.loc, h.v) for h in followers] == before

    def test_matches_naive_oracle_on_random_states(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            v_av = rng.uniform(0.0, 11.0)
            av = AvState(x=0.0, v=v_av)
            loc = 0.0
            followers = []
            for _ in range(n):
                loc -= rng.uniform(6.0, 40.0)
                followers.append(HvState(loc=loc, v=rng.uniform(0.0, 14.0)))
            action = (rng.uniform(-1, 1), rng.uniform(-1, 1))
            got = predict_avg_velocity(followers, av, action)
            want = naive_rollout_oracle(followers, av, action, CFG)
            assert got == pytest.approx(want, abs=1e-9)

    def test_monotone_in_brake_strength(self):
        followers, av = equilibrium_platoon()
        preds = [predict_avg_velocity(followers, av, (0.0, b))
                 for b in (0.0, -0.25, -0.5, -0.75, -1.0)]
        assert all(p1 >= p2 - 1e-12 for p1, p2 in zip(preds, preds[1:]))


class TestDisturbanceCost:
    def test_equilibrium_no_edge_zero(self):
        followers, av = equilibrium_platoon()
        assert disturbance_cost(followers, av, (0.0, 0.0), prev_accel=0.0) == 0.0

    def test_edge_fires_with_expected_magnitude(self):
        followers, av = equilibrium_platoon()
        cost = disturbance_cost(followers, av, (0.0, -1.0), prev_accel=0.0)
        cur = current_avg_velocity(followers, av)
        pred = predict_avg_velocity(followers, av, (0.0, -1.0))
        assert cost == pytest.approx(1.0 - math.exp(-(cur - pred)))
        assert 0.0 < cost < 1.0

    def test_unit_slowdown_value(self):
        assert 1.0 - math.exp(-1.0) == pytest.approx(0.6321, abs=1e-4)

    def test_sustained_braking_no_retrigger(self):
        followers, av = equilibrium_platoon()
        # accel -8 at t and t-1: inside the braking run, no edge
        assert disturbance_cost(followers, av, (0.0, -1.0), prev_accel=-8.0) == 0.0

    def test_cost_in_unit_interval_fuzz(self):
        rng = np.random.default_rng(1)
        followers, av = equilibrium_platoon()
        for _ in range(200):
            a = (rng.uniform(-1, 1), rng.uniform(-1, 1))
            c = disturbance_cost(followers, av, a, prev_accel=rng.uniform(-8, 8))
            assert 0.0 <= c < 1.0

    def test_literal_variants_selectable(self):
        followers, av = equilibrium_platoon()
        lit = replace(CFG, literal_sign=True, literal_edge=True)
        # literal edge fires on brake release (crossing up through lambda)
        assert braking_edge(-4.0, -6.0, lit)
        assert not braking_edge(-6.0, -4.0, lit)
        cost = disturbance_cost(followers, av, (0.0, 0.3), prev_accel=-6.0, cfg=lit)
        cur = current_avg_velocity(followers, av, lit)
        pred = predict_avg_velocity(followers, av, (0.0, 0.3), lit)
        # literal sign is unrectified: exact exponential of the signed gap
        assert cost == pytest.approx(1.0 - math.exp(-(pred - cur)))

    def test_edge_semantics_default(self):
        assert braking_edge(-6.0, -4.0)
        assert not braking_edge(-6.0, -6.0)
        assert not braking_edge(-4.0, -6.0)


def test_realized_accel_matches_step():
    av = AvState(v=10.0)
    assert realized_accel(av, (0.0, -1.0)) == pytest.approx(
        step_av(av, (0.0, -1.0), 0.1).acc)
