"""Learner mechanics: action selection, update algebra, bound monitoring,
training determinism, and table snapshots."""

import json
import math

import numpy as np
import pytest

from orbit_mec.environment import OffloadState
from orbit_mec.oracle import desk_instance_offload_all
from orbit_mec.qlearning import (
    ConvergenceMonitor,
    QTable,
    greedy_policy_eval,
    load_qtable,
    moving_average,
    save_qtable,
    select_action,
    train,
    update_offload,
    update_velocity,
)
from orbit_mec.scenario import Hyperparams, ScenarioConfig


def hyper(**kw):
    base = dict(learning_rate=0.1, discount=0.9, epsilon=0.05,
                epsilon_decay=4e-6, episodes=100)
    base.update(kw)
    return Hyperparams(**base)


def tiny_scenario(**overrides):
    base = dict(
        n_regions=2,
        satellite_regions=(),
        cellular_length_set_m=(100.0,),
        satellite_length_set_m=(300.0,),
        cellular_mec_hz_set=(15e9,),
        satellite_mec_hz_set=(50e9,),
        n_dead_regions=1,
        data_bits_set=(8e5, 3.2e6),
        local_cpu_hz_set=(0.5e9, 1e9),
        velocity_set_mps=(5.0, 10.0),
        initial_velocity_mps=5.0,
        eval_episodes=3,
        hyper=hyper(),
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestSelectAction:
    def test_greedy_picks_unique_argmax(self):
        q = QTable(4)
        s = ("s",)
        q.write(s, 2, 1.5)
        q.write(s, 1, 0.5)
        assert select_action(q, s, range(4), 0.0, None) == 2

    def test_tie_breaks_to_lowest_id(self):
        q = QTable(5)
        assert select_action(q, ("fresh",), range(5), 0.0, None) == 0
        s = ("t",)
        q.write(s, 3, 1.0)
        q.write(s, 1, 1.0)
        assert select_action(q, s, range(5), 0.0, None) == 1

    def test_respects_legal_subset(self):
        q = QTable(5)
        s = ("u",)
        q.write(s, 4, 9.0)
        assert select_action(q, s, (0,), 0.0, None) == 0

    def test_full_exploration_is_uniform(self):
        q = QTable(6)
        rng = np.random.default_rng(0)
        counts = np.zeros(6)
        n = 10_000
        for _ in range(n):
            counts[select_action(q, ("s",), range(6), 1.0, rng)] += 1
        p = 1.0 / 6.0
        sigma = math.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 3.0 * sigma)


class TestUpdateAlgebra:
    def test_first_offload_update_from_zero(self):
        q = QTable(3)
        new = update_offload(q, ("s",), 1, 1.0, None, (), hyper())
        assert new == pytest.approx(0.1, rel=1e-12)

    def test_negative_reward_from_zero(self):
        q = QTable(3)
        new = update_offload(q, ("s",), 0, -1.0, None, (), hyper())
        assert new == pytest.approx(-0.1, rel=1e-12)

    def test_zero_td_error_is_fixed_point(self):
        q = QTable(3)
        s, s2 = ("a",), ("b",)
        q.write(s2, 1, 2.0)
        # r + discount*max_next == current value -> unchanged
        q.write(s, 0, 0.5 + 0.9 * 2.0)
        new = update_offload(q, s, 0, 0.5, s2, range(3), hyper())
        assert new == pytest.approx(0.5 + 1.8, rel=1e-12)

    def test_bootstrap_restricted_to_legal_actions(self):
        q = QTable(3)
        s, s2 = ("a",), ("b",)
        q.write(s2, 2, 100.0)  # would dominate an unrestricted max
        q.write(s2, 0, 1.0)
        new = update_offload(q, s, 0, 0.0, s2, (0,), hyper())
        assert new == pytest.approx(0.1 * 0.9 * 1.0, rel=1e-12)

    def test_velocity_update_from_zero(self):
        q = QTable(4)
        new = update_velocity(q, ("v",), 2, 3.0, None, hyper())
        assert new == pytest.approx(0.3, rel=1e-12)

    def test_velocity_terminal_bootstraps_zero(self):
        q = QTable(4)
        q.write(("v",), 1, 5.0)
        new = update_velocity(q, ("v",), 1, 0.0, None, hyper())
        assert new == pytest.approx(5.0 + 0.1 * (0.0 + 0.0 - 5.0), rel=1e-12)

    def test_update_touches_single_entry(self):
        q = QTable(3)
        q.write(("other",), 2, 7.0)
        update_offload(q, ("s",), 1, 1.0, None, (), hyper())
        assert q.value(("other",), 2) == 7.0
        assert q.value(("s",), 0) == 0.0
        assert q.visits[("s",)] == [0, 1, 0]


class TestQTable:
    def test_unvisited_reads_zero(self):
        q = QTable(3)
        assert q.value(("nowhere",), 1) == 0.0
        assert q.max_over(("nowhere",), range(3)) == 0.0

    def test_max_abs_tracks_writes(self):
        q = QTable(2)
        q.write(("s",), 0, -3.5)
        q.write(("s",), 1, 2.0)
        assert q.max_abs == 3.5

    def test_snapshot_round_trip(self, tmp_path):
        q = QTable(3)
        s1 = OffloadState(1, 1, 8e5, 1e9, 5.0, 0)
        s2 = OffloadState(2, 0, 3.2e6, 0.5e9, 10.0, 2)
        q.write(s1, 0, 1.25)
        q.write(s1, 2, -0.5)
        q.write(s2, 1, 3.75)
        path = tmp_path / "q1.json"
        save_qtable(q, path, "offload")
        loaded, kind = load_qtable(path)
        assert kind == "offload"
        assert loaded.n_actions == 3
        for s in (s1, s2):
            for a in range(3):
                assert loaded.value(s, a) == q.value(s, a)
        assert loaded.visits[s1] == q.visits[s1]
        payload = json.loads(path.read_text())
        assert payload["schema"] == "orbit-mec/qtable-1"
        assert payload["state_fields"] == list(OffloadState._fields)


class TestMonitor:
    def test_bounds(self):
        m = ConvergenceMonitor(discount=0.9)
        assert m.bound_q1 == pytest.approx(math.e / 0.1, rel=1e-12)
        assert m.bound_q1 == pytest.approx(27.1828, rel=1e-5)
        m.observe_region_length(40)
        assert m.l_max == 40
        assert m.bound_q2 == pytest.approx(40 * math.e / 0.1, rel=1e-12)
        m.observe_region_length(10)
        assert m.l_max == 40

    def test_violation_logged(self):
        m = ConvergenceMonitor(discount=0.9)
        m.check_offload(("s",), 0, 100.0)
        assert len(m.violations) == 1
        m.check_offload(("s",), 0, 27.0)
        assert len(m.violations) == 1


class TestTraining:
    def test_deterministic_reward_series(self):
        sc = tiny_scenario()
        r1 = train(sc, seed=5, episodes=40)
        r2 = train(sc, seed=5, episodes=40)
        assert r1.reward_series == r2.reward_series
        assert r1.t_mean_series == r2.t_mean_series

    def test_epsilon_schedule_monotone_to_floor(self):
        sc = tiny_scenario(hyper=hyper(epsilon=0.01, epsilon_decay=5e-4))
        res = train(sc, seed=1, episodes=50)
        assert res.final_epsilon == 0.0

    def test_bounds_hold_during_training(self):
        sc = tiny_scenario()
        res = train(sc, seed=2, episodes=300)
        assert res.monitor.violations == []
        assert res.q1.max_abs <= res.monitor.bound_q1 + 1e-9
        assert res.q2.max_abs <= res.monitor.bound_q2 + 1e-9

    def test_myopic_learner_converges_to_immediate_reward(self):
        # With no discounting and a deterministic single-region instance, each
        # visited pair converges to its immediate reward at a geometric rate.
        inst = desk_instance_offload_all()
        sc = inst.scenario
        from dataclasses import replace
        sc = replace(sc, hyper=hyper(discount=0.0, epsilon=0.5, epsilon_decay=0.0))
        res = train(sc, seed=3, episodes=400)
        from orbit_mec.environment import Environment
        from orbit_mec.rewards import pacing_term
        env = Environment(sc, seed=0, topology_seed=1)
        params = env.reward_params
        env.reset()
        trav, _ = env.step_region(5.0)
        # Local action reward in this instance is constant across intervals
        # (fixed draws, so the bound is always met exactly).
        local_reward = 0.9 + 0.1 * pacing_term(trav.interval_count, 1.0, params)
        checked = 0
        for state, row in res.q1.rows.items():
            visits = res.q1.visits[state]
            if visits[0] >= 50 and state.velocity_mps == 5.0:
                assert row[0] == pytest.approx(local_reward, rel=1e-2)
                checked += 1
        assert checked > 0

    def test_moving_average_window(self):
        series = [0.0] * 150 + [1.0] * 150
        avg = moving_average(series, 100)
        assert avg[99] == 0.0
        assert avg[-1] == 1.0
        assert 0.0 < avg[200] < 1.0

    def test_single_episode_update_wiring_bit_exact(self):
        # Drive one greedy episode on a pinned two-region instance and
        # reconstruct both tables from the update equations by hand: within a
        # region each step bootstraps from the same (only) state's row; the
        # region-boundary update bootstraps from the next region's first
        # observation under its legal set; the journey end bootstraps zero.
        from dataclasses import replace
        from orbit_mec.environment import Environment, OffloadState, VelocityState
        from orbit_mec.oracle import desk_instance_dead_sprint
        from orbit_mec.rewards import instant_reward, region_reward

        inst = desk_instance_dead_sprint()
        sc = replace(inst.scenario, hyper=hyper(epsilon=0.0, epsilon_decay=0.0))
        res = train(sc, seed=0, episodes=1)
        env = Environment(sc, seed=0)
        params = env.reward_params
        bound = 3.2e6 * sc.cycles_per_bit / 1e9
        lr, gamma = 0.1, 0.9

        s1 = OffloadState(1, 1, 3.2e6, 1e9, 5.0, 0)
        s2 = OffloadState(2, 0, 3.2e6, 1e9, 5.0, 0)
        r1 = instant_reward(bound, bound, 20, params.region_weights[0], params)
        r2 = instant_reward(bound, bound, 20, params.region_weights[1], params)

        q = 0.0
        for _ in range(19):  # within region 1: next state is s1 again
            q = q + lr * (r1 + gamma * q - q)
        q = q + lr * (r1 + gamma * 0.0 - q)  # boundary: s2's row is still zero
        assert res.q1.rows[s1][0] == q

        q = 0.0
        for _ in range(19):
            q = q + lr * (r2 + gamma * q - q)
        q = q + lr * (r2 + gamma * 0.0 - q)  # journey end bootstraps zero
        assert res.q1.rows[s2][0] == q

        rn1 = region_reward([r1] * 20)
        rn2 = region_reward([r2] * 20)
        assert res.q2.rows[VelocityState(1, 2, 5.0)][0] == lr * rn2
        assert res.q2.rows[VelocityState(0, 1, 5.0)][0] == lr * (rn1 + gamma * 0.0)


class TestGreedyEval:
    def test_eval_never_writes(self):
        sc = tiny_scenario()
        res = train(sc, seed=7, episodes=60)
        before = res.q1.checksum(), res.q2.checksum()
        greedy_policy_eval(res.q1, res.q2, sc, seed=11, episodes=5)
        assert (res.q1.checksum(), res.q2.checksum()) == before

    def test_eval_seeds_differ_only_via_draws(self):
        sc = tiny_scenario()
        res = train(sc, seed=7, episodes=60)
        e1 = greedy_policy_eval(res.q1, res.q2, sc, seed=1, episodes=4, topology_seed=5)
        e2 = greedy_policy_eval(res.q1, res.q2, sc, seed=2, episodes=4, topology_seed=5)
        # Same topology and tables: moving time is a pure velocity-policy
        # artifact, identical across eval streams.
        assert e1.mean_moving_time_s == e2.mean_moving_time_s

    def test_eval_lower_bounded_by_oracle(self):
        from orbit_mec.oracle import solve_exact
        inst = desk_instance_offload_all()
        optimum = solve_exact(inst)
        res = train(inst.scenario, seed=1, episodes=500)
        ev = greedy_policy_eval(res.q1, res.q2, inst.scenario, seed=9, episodes=1)
        assert ev.mean_t_mean_s >= optimum.t_mean_s - 1e-12
