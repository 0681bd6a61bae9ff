"""Episodic environment: determinism, legality, bookkeeping, state closure."""

import math

import numpy as np
import pytest

from orbit_mec.environment import (
    ACTION_LOCAL,
    Environment,
    build_topology,
)
from orbit_mec.rewards import instant_reward
from orbit_mec.scenario import ConfigError, ScenarioConfig, reference_setup


def small_scenario(**overrides):
    base = dict(
        n_regions=3,
        satellite_regions=(2,),
        cellular_length_set_m=(100.0, 200.0),
        satellite_length_set_m=(300.0,),
        cellular_mec_hz_set=(10e9, 15e9),
        satellite_mec_hz_set=(50e9,),
        n_dead_regions=1,
        velocity_set_mps=(5.0, 10.0, 20.0),
        initial_velocity_mps=10.0,
        eval_episodes=5,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def run_scripted_episode(env, velocity, offload_action, record=False):
    """Drive one episode with constant choices; returns the summary."""
    env.reset(record=record)
    for n in range(len(env.regions)):
        trav, _ = env.step_region(velocity)
        for _ in range(trav.interval_count):
            mu = env.regions[n].channel_available
            action = offload_action if mu else ACTION_LOCAL
            env.step_interval(action)
    return env.episode_summary()


class TestTopology:
    def test_dead_region_count_matches_config(self):
        sc = reference_setup()
        for seed in range(5):
            regions = build_topology(sc, np.random.SeedSequence([seed]))
            assert sum(1 for r in regions if not r.channel_available) == sc.n_dead_regions

    def test_tier_partition(self):
        regions = build_topology(reference_setup(), np.random.SeedSequence([1]))
        for r in regions:
            assert r.tier == ("satellite" if 8 <= r.region_id <= 13 else "cellular")

    def test_draws_come_from_sets(self):
        sc = reference_setup()
        regions = build_topology(sc, np.random.SeedSequence([3]))
        for r in regions:
            if r.tier == "cellular":
                assert r.length_m in sc.cellular_length_set_m
                assert r.mec_cpu_hz in sc.cellular_mec_hz_set
            else:
                assert r.length_m in sc.satellite_length_set_m
                assert r.mec_cpu_hz in sc.satellite_mec_hz_set

    def test_same_topology_seed_shared_across_instances(self):
        sc = small_scenario()
        e1 = Environment(sc, seed=1, topology_seed=np.random.SeedSequence([9]))
        e2 = Environment(sc, seed=2, topology_seed=np.random.SeedSequence([9]))
        assert e1.regions == e2.regions

    def test_empty_chain_rejected(self):
        with pytest.raises(ConfigError):
            small_scenario(n_regions=0)


class TestReset:
    def test_deterministic_state_sequences(self):
        sc = small_scenario()
        runs = []
        for _ in range(2):
            env = Environment(sc, seed=42)
            env.reset()
            seq = []
            for n in range(3):
                trav, _ = env.step_region(10.0)
                seq.append(trav)
                for _ in range(trav.interval_count):
                    bd, r, s2, done = env.step_interval(ACTION_LOCAL)
                    seq.append((bd, r, s2))
            runs.append(seq)
        assert runs[0] == runs[1]

    def test_initial_observation(self):
        sc = small_scenario()
        env = Environment(sc, seed=7)
        vel, off = env.reset()
        assert vel.prev_region == 0 and vel.curr_region == 1
        assert vel.entry_velocity_mps == sc.initial_velocity_mps
        assert off.prev_server == 0
        assert off.region_id == 1
        assert off.data_bits in sc.data_bits_set
        assert off.local_cpu_hz in sc.local_cpu_hz_set

    def test_reset_observation_draws_are_used_by_first_interval(self):
        env = Environment(small_scenario(), seed=11)
        _, off = env.reset()
        env.step_region(10.0)
        first = env.current_offload_state
        assert (first.data_bits, first.local_cpu_hz) == (off.data_bits, off.local_cpu_hz)


class TestLegality:
    def test_action_sets(self):
        sc = reference_setup()
        env = Environment(sc, seed=1)
        _, off = env.reset()
        live = off._replace(channel_available=1)
        dead = off._replace(channel_available=0)
        assert tuple(env.legal_actions(live)) == tuple(range(0, 21))
        assert tuple(env.legal_actions(dead)) == (ACTION_LOCAL,)

    def test_illegal_action_absorbed_as_local(self):
        sc = small_scenario(n_dead_regions=3)  # every region dead
        env = Environment(sc, seed=3)
        env.reset()
        trav, _ = env.step_region(10.0)
        state = env.current_offload_state
        bd, reward, _, _ = env.step_interval(2)
        assert reward == -1.0
        assert bd.com_s == bd.mec_s == bd.mig_s == 0.0
        assert bd.local_s == pytest.approx(
            state.data_bits * sc.cycles_per_bit / state.local_cpu_hz, rel=1e-12)
        # executed target is local, so the next interval sees prev_server 0
        if trav.interval_count > 1:
            assert env.current_offload_state.prev_server == 0
        assert env._illegal == 1


class TestStepInterval:
    def test_local_breakdown_matches_bound(self):
        sc = small_scenario(n_dead_regions=0)
        env = Environment(sc, seed=5)
        env.reset()
        trav, _ = env.step_region(10.0)
        s = env.current_offload_state
        bd, r, _, _ = env.step_interval(ACTION_LOCAL)
        bound = s.data_bits * sc.cycles_per_bit / s.local_cpu_hz
        assert bd.total_s == bound == bd.local_s

    def test_repeat_offload_has_single_migration(self):
        sc = small_scenario(n_dead_regions=0)
        env = Environment(sc, seed=5)
        env.reset()
        trav, _ = env.step_region(5.0)
        assert trav.interval_count >= 2
        bd1, *_ = env.step_interval(1)
        bd2, *_ = env.step_interval(1)
        assert bd1.mig_s > 0.0  # switching away from local onto a cellular server
        assert bd2.mig_s == 0.0

    def test_rewards_match_pure_function(self):
        sc = small_scenario(n_dead_regions=0)
        env = Environment(sc, seed=8)
        params = env.reward_params
        env.reset()
        rng = np.random.default_rng(0)
        for n in range(3):
            trav, _ = env.step_region(10.0)
            k = params.region_weights[n]
            for _ in range(trav.interval_count):
                s = env.current_offload_state
                action = int(rng.integers(0, 4))
                bound = s.data_bits * sc.cycles_per_bit / s.local_cpu_hz
                bd, r, _, _ = env.step_interval(action)
                expect = instant_reward(bd.total_s, bound, trav.interval_count, k, params)
                assert r == pytest.approx(expect, rel=1e-12)

    def test_breakdowns_match_pure_interval_delay(self):
        # The environment's table-driven fast path reproduces the pure delay
        # composition bit for bit.
        from orbit_mec.delays import ComputeParams, TaskSpec, interval_delay, make_target
        sc = small_scenario(n_dead_regions=0)
        env = Environment(sc, seed=21)
        sats = tuple(r.region_id for r in env.regions if r.tier == "satellite")
        env.reset()
        rng = np.random.default_rng(2)
        prev = 0
        for n in range(3):
            region = env.regions[n]
            trav, _ = env.step_region(10.0)
            for _ in range(trav.interval_count):
                s = env.current_offload_state
                action = int(rng.integers(0, 4))
                bd, *_ = env.step_interval(action)
                task = TaskSpec(s.data_bits, sc.result_ratio * s.data_bits)
                comp = ComputeParams(sc.cycles_per_bit, s.local_cpu_hz,
                                     env.regions[action - 1].mec_cpu_hz if action else None)
                expect = interval_delay(task, sc.radio, comp, sc.migration,
                                        make_target(prev, sats), make_target(action, sats),
                                        region.tier, 1)
                assert bd == expect
                prev = action

    def test_velocity_ramp_observed_in_states(self):
        sc = small_scenario(n_dead_regions=0, initial_velocity_mps=5.0)
        env = Environment(sc, seed=2)
        env.reset()
        trav, _ = env.step_region(20.0)
        seen = []
        for _ in range(trav.interval_count):
            seen.append(env.current_offload_state.velocity_mps)
            env.step_interval(ACTION_LOCAL)
        assert seen[0] == 7.0  # 5 + 2 after one interval of ramping
        assert max(seen) <= 20.0
        assert all(b >= a for a, b in zip(seen, seen[1:]))


class TestEpisodeBookkeeping:
    def test_interval_conservation_and_t_mean(self):
        sc = small_scenario()
        env = Environment(sc, seed=4)
        summary = run_scripted_episode(env, 10.0, offload_action=1, record=True)
        trace = summary.trace
        assert summary.interval_count == len(trace.intervals)
        assert summary.interval_count == sum(r.interval_count for r in trace.regions)
        total = 0.0
        for rec in trace.intervals:
            total += rec.breakdown.total_s
        assert summary.t_mean_s == total / len(trace.intervals)
        assert summary.moving_time_s == pytest.approx(
            sum(r.travel_time_s for r in trace.regions), rel=1e-12)

    def test_local_interval_hits_bound_exactly(self):
        # For every legal local interval the completion time equals the
        # all-local bound, bit for bit.
        sc = small_scenario(n_dead_regions=0)
        env = Environment(sc, seed=6)
        summary = run_scripted_episode(env, 10.0, offload_action=ACTION_LOCAL, record=True)
        for rec in summary.trace.intervals:
            bound = rec.state.data_bits * sc.cycles_per_bit / rec.state.local_cpu_hz
            assert rec.breakdown.total_s == bound

    def test_deterministic_replay_bit_identical(self):
        sc = small_scenario()
        traces = []
        for _ in range(2):
            env = Environment(sc, seed=123)
            summary = run_scripted_episode(env, 20.0, offload_action=3, record=True)
            traces.append(summary)
        a, b = traces
        assert a.t_mean_s == b.t_mean_s
        assert a.moving_time_s == b.moving_time_s
        assert a.trace.intervals == b.trace.intervals
        assert a.trace.regions == b.trace.regions

    def test_state_space_closure(self):
        sc = reference_setup()
        env = Environment(sc, seed=9)
        env.reset()
        velocities = set()
        rng = np.random.default_rng(1)
        for n in range(20):
            trav, _ = env.step_region(float(sc.velocity_set_mps[int(rng.integers(16))]))
            for _ in range(trav.interval_count):
                s = env.current_offload_state
                assert s.data_bits in sc.data_bits_set
                assert s.local_cpu_hz in sc.local_cpu_hz_set
                assert 1 <= s.region_id <= 20
                assert s.channel_available in (0, 1)
                assert 0 <= s.prev_server <= 20
                velocities.add(s.velocity_mps)
                env.step_interval(ACTION_LOCAL)
        # Integer ramp steps over an integer velocity set stay on the grid.
        assert all(v == int(v) and 5.0 <= v <= 20.0 for v in velocities)

    def test_exit_velocity_chains_to_next_region(self):
        sc = small_scenario(n_dead_regions=0, initial_velocity_mps=5.0)
        env = Environment(sc, seed=2)
        env.reset(record=True)
        trav1, nxt = env.step_region(20.0)
        assert nxt.entry_velocity_mps == trav1.exit_velocity_mps
        for _ in range(trav1.interval_count):
            env.step_interval(ACTION_LOCAL)
        trav2, _ = env.step_region(20.0)
        first = env.current_offload_state
        # Already cruising at 20, so the next region starts there.
        assert first.velocity_mps == 20.0


class TestRewardParamsDerivation:
    def test_weights_and_slowest_time(self):
        sc = small_scenario()
        env = Environment(sc, seed=1)
        total = sum(r.length_m for r in env.regions)
        assert math.fsum(env.reward_params.region_weights) == pytest.approx(1.0, abs=1e-12)
        assert env.reward_params.slowest_time_s == pytest.approx(total / 5.0, rel=1e-12)

    def test_due_time_must_undercut_slowest(self):
        sc = small_scenario(due_time_s=1e9)
        with pytest.raises(ConfigError):
            Environment(sc, seed=1)
