"""Episodic environment: a robot crosses a chain of coverage regions, picking
a target velocity per region and an offload decision per interval.

One instance owns one mutable episode at a time; run independent replications
with independent instances.  All randomness flows from the constructor seeds,
so identical (scenario, seeds, action sequence) replays bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import rewards
from .delays import (
    TIER_CELLULAR,
    TIER_SATELLITE,
    DelayBreakdown,
    cellular_rate,
)
from .mobility import VelocityPlan, traverse_region
from .rewards import ILLEGAL_REWARD, RewardParams
from .scenario import ConfigError, RegionDescriptor, ScenarioConfig

ACTION_LOCAL = 0


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Accept either raw entropy or an already-built seed sequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class InvalidScenarioError(ValueError):
    """The scenario cannot produce a runnable region chain."""


class OffloadState(NamedTuple):
    """Observation for the per-interval offload decision."""

    region_id: int
    channel_available: int
    data_bits: float
    local_cpu_hz: float
    velocity_mps: float
    prev_server: int


class VelocityState(NamedTuple):
    """Observation for the per-region velocity decision."""

    prev_region: int
    curr_region: int
    entry_velocity_mps: float


class IntervalRecord(NamedTuple):
    region_id: int
    state: OffloadState
    action: int
    executed: int
    breakdown: DelayBreakdown
    reward: float


class RegionRecord(NamedTuple):
    region_id: int
    requested_velocity_mps: float
    target_velocity_mps: float
    entry_velocity_mps: float
    exit_velocity_mps: float
    travel_time_s: float
    interval_count: int
    reward: float


@dataclass
class EpisodeTrace:
    intervals: list = field(default_factory=list)
    regions: list = field(default_factory=list)
    t_mean_s: float = 0.0
    moving_time_s: float = 0.0


class EpisodeSummary(NamedTuple):
    t_mean_s: float
    moving_time_s: float
    interval_count: int
    region_rewards: tuple
    illegal_actions: int
    trace: EpisodeTrace | None


def build_topology(scenario: ScenarioConfig, topology_seed) -> tuple[RegionDescriptor, ...]:
    """Draw one concrete region chain: lengths and server frequencies from the
    tier draw sets, then the set of channel-dead regions without replacement."""
    if scenario.fixed is not None:
        return scenario.fixed.regions
    rng = np.random.default_rng(topology_seed)
    regions = []
    for rid in range(1, scenario.n_regions + 1):
        tier = scenario.tier_of(rid)
        if tier == TIER_SATELLITE:
            lengths, mecs = scenario.satellite_length_set_m, scenario.satellite_mec_hz_set
        else:
            lengths, mecs = scenario.cellular_length_set_m, scenario.cellular_mec_hz_set
        length = lengths[int(rng.integers(len(lengths)))]
        mec = mecs[int(rng.integers(len(mecs)))]
        regions.append(RegionDescriptor(rid, tier, length, 1, mec))
    dead = rng.permutation(scenario.n_regions)[: scenario.n_dead_regions]
    for idx in dead:
        r = regions[int(idx)]
        regions[int(idx)] = r._replace(channel_available=0)
    return tuple(regions)


def reward_params_for(scenario: ScenarioConfig, regions) -> RewardParams:
    total = sum(r.length_m for r in regions)
    weights = tuple(r.length_m / total for r in regions)
    v_min = min(scenario.velocity_set_mps)
    t_low = total / v_min
    t_move = scenario.resolved_due_time_s()
    try:
        return RewardParams(
            preference_theta=scenario.theta,
            due_time_s=t_move,
            slowest_time_s=t_low,
            region_weights=weights,
            interval_s=scenario.interval_s,
        )
    except ValueError as exc:
        raise ConfigError(f"$.due_time_s: {exc}") from exc


class Environment:
    """One robot journey, stepped region by region and interval by interval.

    The flow per episode is: ``reset()``, then for each region ``step_region``
    followed by exactly ``interval_count`` calls of ``step_interval``.  Illegal
    offloads are absorbed (the task runs locally, reward -1) so training can
    keep stepping.
    """

    def __init__(self, scenario: ScenarioConfig, seed, topology_seed=None):
        if scenario.n_regions < 1:
            raise InvalidScenarioError("scenario has an empty region chain")
        self.scenario = scenario
        if topology_seed is None:
            ss = as_seed_sequence(seed)
            topo_ss, stream_ss = ss.spawn(2)
            self._rng = np.random.default_rng(stream_ss)
            self.regions = build_topology(scenario, topo_ss)
        else:
            self._rng = np.random.default_rng(seed)
            self.regions = build_topology(scenario, topology_seed)
        if not self.regions:
            raise InvalidScenarioError("scenario has an empty region chain")
        self.reward_params = reward_params_for(scenario, self.regions)
        self.n_servers = len(self.regions)
        self._fixed = scenario.fixed
        self._precompute()
        self._phase = "idle"

    # -- static lookup tables -------------------------------------------

    def _precompute(self):
        sc = self.scenario
        n = self.n_servers
        phi = sc.cycles_per_bit
        self._mec_hz = [math.inf] + [r.mec_cpu_hz for r in self.regions]
        is_cell = [False] + [r.tier == TIER_CELLULAR for r in self.regions]
        is_sat = [False] + [r.tier == TIER_SATELLITE for r in self.regions]
        # Migration lookups indexed [prev][curr] over server ids 0..N.
        self._mig_ratio_applies = [
            [
                prev != curr and (prev != 0 or curr != 0) and (is_cell[prev] or is_cell[curr])
                for curr in range(n + 1)
            ]
            for prev in range(n + 1)
        ]
        self._mig_cross = [
            [
                sc.migration.cross_tier_cost_s
                if (is_cell[prev] and is_sat[curr]) or (is_sat[prev] and is_cell[curr])
                else 0.0
                for curr in range(n + 1)
            ]
            for prev in range(n + 1)
        ]
        self._rho = sc.migration.migration_ratio
        cell_rate = cellular_rate(sc.radio)
        self._cell_rate = cell_rate
        self._sat_prop = 2.0 * (sc.radio.sat_dist_gs_m + sc.radio.sat_dist_se_m) / sc.radio.light_speed_mps
        self._sat_inv_rate = 1.0 / sc.radio.sat_uplink_bps + 1.0 / sc.radio.sat_downlink_bps
        if self._fixed is None:
            d_set = sc.data_bits_set
            f_set = sc.local_cpu_hz_set
            self._d_set = d_set
            self._f_set = f_set
            self._n_d = len(d_set)
            self._n_f = len(f_set)
            round_trip = [d + sc.result_ratio * d for d in d_set]
            self._coef = [d * phi for d in d_set]
            self._com_cell = [rt / cell_rate for rt in round_trip]
            self._com_sat = [self._sat_prop + rt * self._sat_inv_rate for rt in round_trip]
            self._local_t = [[d * phi / f for f in f_set] for d in d_set]
        self._legal_live = tuple(range(0, n + 1))
        self._legal_dead = (ACTION_LOCAL,)

    def _com_for(self, tier: str, data_bits: float) -> float:
        rt = data_bits + self.scenario.result_ratio * data_bits
        if tier == TIER_CELLULAR:
            return rt / self._cell_rate
        return self._sat_prop + rt * self._sat_inv_rate

    # -- episode control --------------------------------------------------

    def reset(self, record: bool = False) -> tuple[VelocityState, OffloadState]:
        sc = self.scenario
        self._record = record
        self._trace = EpisodeTrace() if record else None
        self._region_idx = 0
        self._prev_server = 0
        self._entry_velocity = sc.initial_velocity_mps
        self._delay_sum = 0.0
        self._interval_total = 0
        self._moving_time = 0.0
        self._region_rewards = []
        self._illegal = 0
        if self._fixed is None:
            self._pending_d = int(self._rng.integers(self._n_d))
            self._pending_f = int(self._rng.integers(self._n_f))
            first = self._d_set[self._pending_d], self._f_set[self._pending_f]
        else:
            first = self._fixed.data_bits[0][0], self._fixed.local_cpu_hz[0][0]
        self._phase = "region"
        region = self.regions[0]
        state = OffloadState(1, region.channel_available, first[0], first[1],
                             sc.initial_velocity_mps, 0)
        return VelocityState(0, 1, sc.initial_velocity_mps), state

    def legal_actions(self, state: OffloadState):
        """Offload action set: everything when a channel exists, else local only."""
        return self._legal_live if state.channel_available else self._legal_dead

    @property
    def velocity_actions(self):
        return self.scenario.velocity_set_mps

    @property
    def current_offload_state(self) -> OffloadState:
        if self._phase != "interval":
            raise RuntimeError("no interval pending; call step_region first")
        return self._state

    def step_region(self, target_velocity_mps: float):
        """Commit a target velocity for the current region.

        Returns the traversal (after any clamping) and the velocity-agent
        observation for the following region; the first interval observation
        becomes available as ``current_offload_state``.
        """
        if self._phase != "region":
            raise RuntimeError(f"step_region called in phase {self._phase!r}")
        sc = self.scenario
        region = self.regions[self._region_idx]
        plan = VelocityPlan(self._entry_velocity, target_velocity_mps, sc.accel_mps2,
                            region.length_m, sc.interval_s)
        traversal = traverse_region(plan, sc.velocity_set_mps)
        count = traversal.interval_count
        goal = traversal.exit_velocity_mps
        v0 = self._entry_velocity
        step = sc.accel_mps2 * sc.interval_s
        if v0 < goal:
            vels = [min(v0 + step * l, goal) for l in range(1, count + 1)]
        elif v0 > goal:
            vels = [max(v0 - step * l, goal) for l in range(1, count + 1)]
        else:
            vels = [v0] * count
        idx = self._region_idx
        if self._fixed is None:
            if count > 1:
                d_idx = [self._pending_d] + self._rng.integers(self._n_d, size=count - 1).tolist()
                f_idx = [self._pending_f] + self._rng.integers(self._n_f, size=count - 1).tolist()
            else:
                d_idx, f_idx = [self._pending_d], [self._pending_f]
            d_set, f_set = self._d_set, self._f_set
            self._d_vals = [d_set[i] for i in d_idx]
            self._f_vals = [f_set[i] for i in f_idx]
            local_t = self._local_t
            self._local_vals = [local_t[di][fi] for di, fi in zip(d_idx, f_idx)]
            com = self._com_cell if region.tier == TIER_CELLULAR else self._com_sat
            self._com_vals = [com[i] for i in d_idx]
            coef = self._coef
            self._coef_vals = [coef[i] for i in d_idx]
        else:
            phi = sc.cycles_per_bit
            self._d_vals = list(self._fixed.data_bits[idx][:count])
            self._f_vals = list(self._fixed.local_cpu_hz[idx][:count])
            self._local_vals = [d * phi / f for d, f in zip(self._d_vals, self._f_vals)]
            self._com_vals = [self._com_for(region.tier, d) for d in self._d_vals]
            self._coef_vals = [d * phi for d in self._d_vals]
        self._vels = vels
        self._l = 0
        self._count = count
        self._region = region
        self._mu = region.channel_available
        theta = self.reward_params.preference_theta
        self._pace = theta * rewards.pacing_term(
            count, self.reward_params.region_weights[idx], self.reward_params
        )
        self._first_weight = 1.0 - theta
        self._interval_rewards = []
        self._requested_v = target_velocity_mps
        self._traversal = traversal
        self._moving_time += traversal.travel_time_s
        self._state = OffloadState(region.region_id, self._mu, self._d_vals[0],
                                   self._f_vals[0], vels[0], self._prev_server)
        self._phase = "interval"
        next_vel_state = VelocityState(region.region_id, region.region_id + 1, goal)
        return traversal, next_vel_state

    def step_interval(self, action: int):
        """Execute one offload decision.

        Returns ``(breakdown, reward, next_state, region_done)``; the next
        observation is ``None`` once the region is done (the following one
        appears with the next ``step_region``).
        """
        if self._phase != "interval":
            raise RuntimeError(f"step_interval called in phase {self._phase!r}")
        l = self._l
        prev = self._prev_server
        local_bound = self._local_vals[l]
        if action != ACTION_LOCAL and not self._mu:
            executed = ACTION_LOCAL
            breakdown = DelayBreakdown(local_bound, 0.0, 0.0, 0.0, local_bound)
            reward = ILLEGAL_REWARD
            self._illegal += 1
        elif action == ACTION_LOCAL:
            executed = ACTION_LOCAL
            breakdown = DelayBreakdown(local_bound, 0.0, 0.0, 0.0, local_bound)
            # exp(1 - total/bound) == 1 exactly when the task runs locally.
            reward = self._first_weight + self._pace
        else:
            executed = action
            com = self._com_vals[l]
            mec = self._coef_vals[l] / self._mec_hz[action]
            mig = self._mig_cross[prev][action]
            if self._mig_ratio_applies[prev][action]:
                mig += self._rho * mec
            total = com + mec + mig
            breakdown = DelayBreakdown(0.0, com, mec, mig, total)
            reward = self._first_weight * math.exp(1.0 - total / local_bound) + self._pace
        self._delay_sum += breakdown.total_s
        self._interval_total += 1
        self._interval_rewards.append(reward)
        if self._record:
            self._trace.intervals.append(
                IntervalRecord(self._region.region_id, self._state, action, executed,
                               breakdown, reward)
            )
        self._prev_server = executed
        self._l = l + 1
        if self._l < self._count:
            next_state = OffloadState(self._region.region_id, self._mu,
                                      self._d_vals[self._l], self._f_vals[self._l],
                                      self._vels[self._l], executed)
            self._state = next_state
            return breakdown, reward, next_state, False
        self._finish_region()
        return breakdown, reward, None, True

    def _finish_region(self):
        region_total = rewards.region_reward(self._interval_rewards)
        self._region_rewards.append(region_total)
        if self._record:
            self._trace.regions.append(
                RegionRecord(self._region.region_id, self._requested_v,
                             self._traversal.exit_velocity_mps, self._entry_velocity,
                             self._traversal.exit_velocity_mps,
                             self._traversal.travel_time_s, self._count, region_total)
            )
        self._entry_velocity = self._traversal.exit_velocity_mps
        self._region_idx += 1
        if self._region_idx < len(self.regions):
            if self._fixed is None:
                self._pending_d = int(self._rng.integers(self._n_d))
                self._pending_f = int(self._rng.integers(self._n_f))
            self._phase = "region"
        else:
            self._phase = "done"

    @property
    def episode_done(self) -> bool:
        return self._phase == "done"

    @property
    def last_region_reward(self) -> float:
        return self._region_rewards[-1]

    def episode_summary(self) -> EpisodeSummary:
        if self._phase != "done":
            raise RuntimeError("episode still in progress")
        t_mean = self._delay_sum / self._interval_total
        if self._record:
            self._trace.t_mean_s = t_mean
            self._trace.moving_time_s = self._moving_time
        return EpisodeSummary(
            t_mean_s=t_mean,
            moving_time_s=self._moving_time,
            interval_count=self._interval_total,
            region_rewards=tuple(self._region_rewards),
            illegal_actions=self._illegal,
            trace=self._trace,
        )
