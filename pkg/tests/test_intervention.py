import math

import numpy as np
import pytest

from mentordrive.intervention import (
    SwitchConfig,
    SwitchContractError,
    TakeoverRecord,
    action_switch,
    probability_switch,
    takeover_cost,
)


class TestActionSwitch:
    def test_no_takeover_passes_agent_action(self):
        applied, rec = action_switch((0.2, 0.4), 0, None)
        assert applied == (0.2, 0.4)
        assert (rec.indicator, rec.takeover_start) == (0, 0)
        assert rec.a_human is None

    def test_takeover_applies_human_action(self):
        applied, rec = action_switch((0.2, 0.4), 1, (-0.1, 0.9))
        assert applied == (-0.1, 0.9)
        assert (rec.indicator, rec.takeover_start) == (1, 1)
        assert rec.a_av == (0.2, 0.4)
        assert rec.a_human == (-0.1, 0.9)

    def test_start_flag_only_on_first_step_of_run(self):
        signals = [0, 1, 1, 0, 1]
        starts, prev = [], 0
        for s in signals:
            _, rec = action_switch((0.0, 0.0), s, (0.1, 0.1) if s else None,
                                   prev_indicator=prev)
            starts.append(rec.takeover_start)
            prev = rec.indicator
        assert starts == [0, 1, 0, 0, 1]

    def test_signal_without_human_action_raises(self):
        with pytest.raises(SwitchContractError):
            action_switch((0.0, 0.0), 1, None)

    def test_record_contract_enforced(self):
        with pytest.raises(SwitchContractError):
            TakeoverRecord(indicator=0, takeover_start=1, a_av=(0.0, 0.0))
        with pytest.raises(SwitchContractError):
            TakeoverRecord(indicator=1, takeover_start=1, a_av=(0.0, 0.0))
        with pytest.raises(SwitchContractError):
            TakeoverRecord(indicator=0, takeover_start=0, a_av=(0.0, 0.0),
                           a_human=(0.1, 0.1))


class TestProbabilitySwitch:
    CFG = SwitchConfig(mode="probability_based", eta=0.5)

    def test_confident_keeps_agent_action(self):
        applied, rec = probability_switch((0.3, 0.1), 0.9, None, self.CFG)
        assert applied == (0.3, 0.1)
        assert rec.indicator == 0

    def test_unconfident_swaps_in_human_action(self):
        applied, rec = probability_switch((0.3, 0.1), 0.1, (0.0, -1.0), self.CFG)
        assert applied == (0.0, -1.0)
        assert (rec.indicator, rec.takeover_start) == (1, 1)

    def test_threshold_is_inclusive(self):
        applied, rec = probability_switch((0.3, 0.1), 0.5, None, self.CFG)
        assert rec.indicator == 0

    def test_negative_density_raises(self):
        with pytest.raises(SwitchContractError):
            probability_switch((0.0, 0.0), -0.01, (0.0, 0.0), self.CFG)

    def test_rejection_without_human_action_raises(self):
        with pytest.raises(SwitchContractError):
            probability_switch((0.0, 0.0), 0.0, None, self.CFG)

    def test_bad_config_rejected(self):
        with pytest.raises(SwitchContractError):
            SwitchConfig(mode="coin_flip")
        with pytest.raises(SwitchContractError):
            SwitchConfig(eta=1.5)

    def test_mixed_policy_frequency(self):
        """Composition check: with density drawn so the switch rejects the
        agent a known fraction of the time, the applied-action mix matches
        a chi-square test at the 0.001 level."""
        rng = np.random.default_rng(7)
        p_reject = 0.3
        n = 20000
        human, agent = 0, 0
        for _ in range(n):
            density = 0.0 if rng.random() < p_reject else 1.0
            applied, _ = probability_switch((1.0, 0.0), density, (0.0, 1.0),
                                            self.CFG)
            if applied == (0.0, 1.0):
                human += 1
            else:
                agent += 1
        expected_h = n * p_reject
        expected_a = n * (1 - p_reject)
        chi2 = ((human - expected_h) ** 2 / expected_h
                + (agent - expected_a) ** 2 / expected_a)
        assert chi2 < 10.83  # chi-square 1 dof, alpha = 0.001


class TestTakeoverCost:
    def test_identical_actions_zero(self):
        assert takeover_cost((0.3, 0.7), (0.3, 0.7)) == pytest.approx(0.0)

    def test_opposite_actions_two(self):
        assert takeover_cost((0.3, 0.7), (-0.3, -0.7)) == pytest.approx(2.0)

    def test_orthogonal_actions_one(self):
        assert takeover_cost((1.0, 0.0), (0.0, 1.0)) == pytest.approx(1.0)

    def test_forty_five_degree_value(self):
        got = takeover_cost((1.0, 0.0), (1.0, 1.0))
        assert got == pytest.approx(1.0 - 1.0 / math.sqrt(2.0), abs=1e-12)
        assert got == pytest.approx(0.2929, abs=1e-4)

    def test_scale_invariant(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a = tuple(rng.uniform(-1, 1, 2))
            b = tuple(rng.uniform(-1, 1, 2))
            k = rng.uniform(0.1, 10.0)
            assert takeover_cost(a, b) == pytest.approx(
                takeover_cost((k * a[0], k * a[1]), b), abs=1e-9)

    def test_zero_norm_fallback(self):
        assert takeover_cost((0.0, 0.0), (1.0, 0.0)) == 1.0
        assert takeover_cost((1.0, 0.0), (0.0, 0.0)) == 1.0

    def test_range_fuzz(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            a = tuple(rng.uniform(-1, 1, 2))
            b = tuple(rng.uniform(-1, 1, 2))
            c = takeover_cost(a, b)
            assert 0.0 <= c <= 2.0 + 1e-12
