import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalebench.errors import ConfigError
from scalebench.rewards import (
    PROFILES,
    MrpState,
    OptimizationProfile,
    RewardSpec,
    SlaSpec,
    mrp_state,
    normalize_return,
    reward_range,
    rfn1,
    rfn2,
    rfn3,
    step_reward,
)

SLA = SlaSpec()


def spec_for(name: str) -> RewardSpec:
    if name.startswith("rfn3"):
        return RewardSpec("rfn3", PROFILES[int(name[-1])])
    return RewardSpec(name)


class TestRfn1:
    def test_latency_band(self):
        assert rfn1(0.019, 40.0, SLA) == 1  # |0.019-0.020| < 0.004

    def test_cpu_band_rescues_latency_miss(self):
        assert rfn1(0.030, 75.0, SLA) == 1  # |75-75| < 15

    def test_both_out_of_band(self):
        assert rfn1(0.030, 40.0, SLA) == 0

    def test_band_boundaries_are_exclusive(self):
        assert rfn1(0.024, 40.0, SLA) == 0   # exactly epsilon*d_tgt away
        assert rfn1(0.030, 90.0, SLA) == 0   # exactly epsilon*c_tgt away


class TestRfn2:
    def test_rewarded_transitions(self):
        assert rfn2(MrpState.ABOVE, 1, MrpState.BELOW) == 1
        assert rfn2(MrpState.BELOW, -1, MrpState.BELOW) == 1

    def test_unrewarded_transitions(self):
        assert rfn2(MrpState.BELOW, -1, MrpState.ABOVE) == 0
        assert rfn2(MrpState.ABOVE, -1, MrpState.BELOW) == 0
        assert rfn2(MrpState.ABOVE, 0, MrpState.BELOW) == 0
        assert rfn2(MrpState.BELOW, 1, MrpState.BELOW) == 0

    def test_bucket_boundary_inclusive_below(self):
        assert mrp_state(SLA.d_tgt, SLA) is MrpState.BELOW
        assert mrp_state(SLA.d_tgt + 1e-9, SLA) is MrpState.ABOVE

    @given(
        d_prev=st.floats(min_value=0, max_value=0.05),
        d_next=st.floats(min_value=0, max_value=0.05),
        action=st.sampled_from([-1, 0, 1]),
        shift=st.floats(min_value=-0.003, max_value=0.003),
    )
    @settings(max_examples=200)
    def test_depends_only_on_buckets(self, d_prev, d_next, action, shift):
        base = rfn2(mrp_state(d_prev, SLA), action, mrp_state(d_next, SLA))
        moved_prev = d_prev + shift
        if mrp_state(moved_prev, SLA) is mrp_state(d_prev, SLA):
            assert rfn2(mrp_state(moved_prev, SLA), action, mrp_state(d_next, SLA)) == base


class TestRfn3:
    def test_violation_plus_add_balanced(self):
        assert rfn3(0.030, 1, PROFILES[1], SLA) == pytest.approx(-1.0)

    def test_remove_credit_performance_profile(self):
        assert rfn3(0.010, -1, PROFILES[3], SLA) == pytest.approx(0.01)

    def test_maintain_without_violation(self):
        assert rfn3(0.010, 0, PROFILES[2], SLA) == 0.0

    def test_violation_boundary_exclusive(self):
        assert rfn3(0.024, 0, PROFILES[1], SLA) == 0.0     # d == (1+eps)*d_tgt
        assert rfn3(0.0241, 0, PROFILES[1], SLA) == -0.5

    def test_balanced_profile_symmetry(self):
        # a latency violation and an add-replica action cost the same
        violation_only = rfn3(0.030, 0, PROFILES[1], SLA)
        add_only = rfn3(0.010, 1, PROFILES[1], SLA)
        assert violation_only == add_only

    def test_episode_sum_closed_form(self):
        profile = PROFILES[1]
        rng = np.random.default_rng(5)
        latencies = rng.uniform(0.0, 0.06, size=500)
        actions = rng.integers(-1, 2, size=500)
        total = sum(rfn3(d, int(a), profile, SLA) for d, a in zip(latencies, actions))
        violations = int((latencies > (1 + SLA.epsilon) * SLA.d_tgt).sum())
        churn = int((actions == 1).sum()) - int((actions == -1).sum())
        expected = -(profile.w_perf * violations + profile.w_res * churn)
        assert total == pytest.approx(expected)


class TestRewardRange:
    def test_published_table(self):
        cases = {
            "rfn1": (0.0, 3600.0),
            "rfn2": (0.0, 3600.0),
            "rfn3_1": (-3600.0, 1800.0),
            "rfn3_2": (-3600.0, 3564.0),
            "rfn3_3": (-3600.0, 36.0),
        }
        for name, (lo, hi) in cases.items():
            rng = reward_range(spec_for(name), 3600)
            assert (rng.min_per_episode, rng.max_per_episode) == (lo, hi)

    def test_bad_episode_len(self):
        with pytest.raises(ValueError):
            reward_range(spec_for("rfn1"), 0)

    @given(
        name=st.sampled_from(["rfn1", "rfn2", "rfn3_1", "rfn3_2", "rfn3_3"]),
        d=st.floats(min_value=0.0, max_value=0.12),
        c=st.floats(min_value=0.0, max_value=100.0),
        prev_d=st.floats(min_value=0.0, max_value=0.12),
        action=st.sampled_from([-1, 0, 1]),
    )
    @settings(max_examples=300)
    def test_step_rewards_stay_in_per_step_range(self, name, d, c, prev_d, action):
        spec = spec_for(name)
        r = step_reward(spec, prev_d, action, d, c)
        rng = reward_range(spec, 1)
        assert rng.min_per_episode - 1e-12 <= r <= rng.max_per_episode + 1e-12


class TestNormalizeReturn:
    def test_max_maps_to_one(self):
        assert normalize_return(3600.0, spec_for("rfn1"), 3600) == 1.0

    def test_min_maps_to_zero(self):
        assert normalize_return(0.0, spec_for("rfn2"), 3600) == 0.0

    def test_rfn3_profile1_zero_reward(self):
        assert normalize_return(0.0, spec_for("rfn3_1"), 3600) == pytest.approx(2 / 3, abs=1e-4)

    def test_not_clamped(self):
        assert normalize_return(-100.0, spec_for("rfn1"), 3600) < 0.0
        assert normalize_return(4000.0, spec_for("rfn1"), 3600) > 1.0


class TestSpecs:
    def test_profile_weights_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            OptimizationProfile(0.5, 0.6).validate()

    def test_profile_required_iff_rfn3(self):
        with pytest.raises(ConfigError):
            RewardSpec("rfn1", PROFILES[1]).validate()
        with pytest.raises(ConfigError):
            RewardSpec("rfn3").validate()

    def test_names(self):
        assert spec_for("rfn1").name == "rfn1"
        assert spec_for("rfn3_2").name == "rfn3_2"

    def test_sla_validation(self):
        with pytest.raises(ConfigError):
            SlaSpec(d_tgt=0.0).validate()
        with pytest.raises(ConfigError):
            SlaSpec(epsilon=0.0).validate()
        with pytest.raises(ConfigError):
            SlaSpec(d_terminate=0.02).validate()

    def test_default_terminate_bound(self):
        assert SlaSpec().d_terminate == pytest.approx(0.12)
