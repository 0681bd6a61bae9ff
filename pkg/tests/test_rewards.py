"""Reward shaping: frozen values, range/monotonicity, and the exact pacing
equality condition."""

import math

import numpy as np
import pytest

from orbit_mec.rewards import (
    ILLEGAL_REWARD,
    RewardParams,
    instant_reward,
    pacing_term,
    region_reward,
)

E = math.e


def params(theta=0.1, due=1000.0, slowest=2500.0, weights=(0.5, 0.5), dt=1.0):
    return RewardParams(theta, due, slowest, weights, dt)


class TestInstantReward:
    def test_local_bound_with_met_budget(self):
        # Completion exactly at the local bound and a met pacing budget:
        # 0.9*e^0 + 0.1*e^1.
        p = params()
        # weight*due/count = 0.5*1000/10 = 50 >> interval 1 s
        r = instant_reward(2.0, 2.0, 10, 0.5, p, legal=True)
        assert r == pytest.approx(0.9 + 0.1 * E, rel=1e-12)
        assert r == pytest.approx(1.17183, rel=1e-5)

    def test_illegal_is_minus_one(self):
        assert instant_reward(2.0, 2.0, 10, 0.5, params(), legal=False) == ILLEGAL_REWARD

    def test_theta_zero_ignores_pacing(self):
        p = params(theta=0.0)
        r_fast = instant_reward(1.0, 2.0, 10, 0.5, p)
        r_slow_region = instant_reward(1.0, 2.0, 10_000, 0.5, p)
        assert r_fast == r_slow_region  # pacing carries zero weight

    def test_vanishing_delay_approaches_e(self):
        p = params(theta=0.0)
        assert instant_reward(1e-12, 2.0, 10, 0.5, p) == pytest.approx(E, rel=1e-9)

    def test_strictly_decreasing_in_delay(self):
        p = params()
        rng = np.random.default_rng(3)
        for _ in range(300):
            bound = float(rng.uniform(0.5, 10.0))
            t1, t2 = sorted(rng.uniform(0.0, 2.0 * bound, size=2))
            if t1 == t2:
                continue
            r1 = instant_reward(t1, bound, 10, 0.5, p)
            r2 = instant_reward(t2, bound, 10, 0.5, p)
            assert r1 > r2

    def test_range_of_legal_rewards(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            theta = float(rng.uniform(0.0, 0.99))
            p = params(theta=theta)
            total = float(rng.uniform(0.0, 50.0))
            bound = float(rng.uniform(0.1, 10.0))
            count = int(rng.integers(1, 500))
            r = instant_reward(total, bound, count, 0.5, p)
            assert 0.0 < r <= E + 1e-12

    def test_zero_pacing_normalizer_rejected_at_construction(self):
        with pytest.raises(ValueError):
            RewardParams(0.1, 1000.0, 1000.0, (1.0,), 1.0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            RewardParams(0.1, 1000.0, 2500.0, (0.5, 0.6), 1.0)


class TestPacingEquality:
    def test_exact_iff_condition(self):
        # The pacing exponential hits theta*e exactly when the region's
        # interval count fits its budget share: dt*count <= weight*due.
        rng = np.random.default_rng(9)
        hits = 0
        for _ in range(100_000):
            dt = float(rng.uniform(0.25, 2.0))
            due = float(rng.uniform(100.0, 2000.0))
            slowest = due * float(rng.uniform(1.05, 4.0))
            w = float(rng.uniform(0.01, 1.0))
            count = int(rng.integers(1, 400))
            p = RewardParams(0.3, due, slowest, (w, 1.0 - w), dt)
            term = pacing_term(count, w, p)
            fits = dt * count <= w * due
            if fits:
                hits += 1
                assert term == E
            else:
                assert term < E
        assert 0 < hits < 100_000  # both branches exercised

    def test_pacing_bounded_below_at_slowest(self):
        # Traversing at the slowest velocity lands the exponent at exactly 0.
        due, v_min, total_c = 1184.0, 5.0, 14800.0
        slowest = total_c / v_min
        w = 200.0 / total_c
        count = int(200.0 / v_min)  # slowest traversal of a 200 m region
        p = RewardParams(0.5, due, slowest, (w, 1.0 - w), 1.0)
        assert pacing_term(count, w, p) == pytest.approx(1.0, rel=1e-12)


class TestRegionReward:
    def test_sum(self):
        assert region_reward([1.0, 1.0, 1.0]) == 3.0

    def test_mixed_sum(self):
        assert region_reward([-1.0, 1.17183]) == pytest.approx(0.17183, rel=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            region_reward([])
