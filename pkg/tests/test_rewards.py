import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softgrip.rewards import (
    RewardConfig,
    StressPenaltyConfig,
    approach_reward,
    goal_reward,
    lift_reward,
    stress_penalty,
    success_reward,
    total_reward,
)
from softgrip.stress import StressSummary


def test_approach_reward_values():
    assert approach_reward(0.0) == pytest.approx(1.0, abs=1e-12)
    assert approach_reward(0.1) == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert approach_reward(0.01) > approach_reward(0.02)


def test_lift_reward_clip():
    assert lift_reward(0.0, 0.09) == 0.0
    assert lift_reward(0.09, 0.09) == 1.0
    assert lift_reward(0.045, 0.09) == pytest.approx(0.5, rel=1e-12)
    assert lift_reward(-0.01, 0.09) == 0.0
    assert lift_reward(0.5, 0.09) == 1.0


def test_goal_reward_matches_approach():
    for d in (0.0, 0.03, 0.2):
        assert goal_reward(d) == pytest.approx(approach_reward(d), rel=1e-12)


def test_success_reward_boundary():
    assert success_reward(0.019, 0.02) == 1.0
    assert success_reward(0.021, 0.02) == 0.0
    assert success_reward(0.02, 0.02) == 1.0  # closed boundary


def test_stress_penalty_zero_at_rest():
    assert stress_penalty(0.0, 0.0, StressPenaltyConfig()) == 0.0


def test_stress_penalty_worked_example():
    # top10 median 10000 Pa, mean 2000 Pa, alpha 0.8 -> blend 8400;
    # 8400^2 / 6000 = 11760; x 5e-5 = 0.588
    cfg = StressPenaltyConfig(alpha=0.8, beta=6000.0, scale=5e-5)
    assert stress_penalty(10000.0, 2000.0, cfg) == pytest.approx(-0.588, rel=1e-12)


def test_stress_penalty_quadratic():
    cfg = StressPenaltyConfig()
    one = stress_penalty(3000.0, 1000.0, cfg)
    four = stress_penalty(6000.0, 2000.0, cfg)
    assert four == pytest.approx(4.0 * one, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5e4), st.floats(0, 5e4), st.floats(0, 5e4))
def test_stress_penalty_monotone_nonincreasing(a, b, delta):
    cfg = StressPenaltyConfig()
    assert stress_penalty(a + delta, b, cfg) <= stress_penalty(a, b, cfg) + 1e-15
    assert stress_penalty(a, b + delta, cfg) <= stress_penalty(a, b, cfg) + 1e-15
    assert stress_penalty(a, b, cfg) <= 0.0


def _summary(top10, mean):
    return StressSummary(mean=mean, median=mean, top_k_mean=top10, top_k_median=top10,
                         max=top10)


def test_total_reward_pick_breakdown():
    cfg = RewardConfig()
    total, terms = total_reward("pick", 0.0, 0.09, 0.0, _summary(0.0, 0.0), True, cfg)
    assert total == pytest.approx(0.3 + 0.7 + 1.0 + 2.0, rel=1e-12)
    assert sum(terms.values()) == pytest.approx(total, abs=1e-12)


def test_total_reward_pick_with_worked_stress_example():
    cfg = RewardConfig()
    total, terms = total_reward("pick", 0.0, 0.09, 0.0, _summary(10000.0, 2000.0), True, cfg)
    assert terms["stress"] == pytest.approx(-0.588, rel=1e-12)
    assert total == pytest.approx(4.0 - 0.588, rel=1e-12)


def test_total_reward_push_drops_lift():
    cfg = RewardConfig()
    total, terms = total_reward("push", 0.0, 0.5, 0.0, _summary(0.0, 0.0), True, cfg)
    assert terms["lift"] == 0.0
    assert total == pytest.approx(0.3 + 1.0 + 2.0, rel=1e-12)


def test_total_reward_far_from_everything_vanishes():
    cfg = RewardConfig()
    total, _ = total_reward("push", 1.5, 0.0, 1.5, _summary(0.0, 0.0), True, cfg)
    assert 0.0 < total < 1e-10


def test_rigid_mode_equals_soft_task_portion():
    cfg = RewardConfig()
    soft_total, soft_terms = total_reward(
        "pick", 0.02, 0.04, 0.05, _summary(8000.0, 1500.0), True, cfg)
    rigid_total, rigid_terms = total_reward(
        "pick", 0.02, 0.04, 0.05, StressSummary.zeros(), False, cfg)
    assert rigid_terms["stress"] == 0.0
    assert rigid_total == pytest.approx(soft_total - soft_terms["stress"], rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 2.0), st.floats(-0.1, 1.0), st.floats(0, 2.0),
       st.floats(0, 3e4), st.floats(0, 3e4))
def test_total_reward_bounds(d, h, dg, top10, mean):
    cfg = RewardConfig()
    total, terms = total_reward("pick", d, h, dg, _summary(top10, mean), True, cfg)
    task = total - terms["stress"]
    assert 0.0 < task <= 4.0 + 1e-12
    assert terms["stress"] <= 0.0
    assert sum(terms.values()) == pytest.approx(total, abs=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        StressPenaltyConfig(alpha=1.5).validate()
    with pytest.raises(ValueError):
        RewardConfig(lift_saturation=0.0).validate()
    RewardConfig().validate()
