"""Baseline and ablation policies sharing the training/evaluation pipeline.

Every runner returns the same result shape so the harness can aggregate all
schemes uniformly: the jointly learned scheme, constant-velocity offloading,
all-local execution, a per-region greedy velocity search, and the two
rule-based ablations (rule velocity + learned offloading, and vice versa).
"""

from __future__ import annotations

from dataclasses import replace
from typing import NamedTuple

import numpy as np

from .environment import ACTION_LOCAL, as_seed_sequence
from .qlearning import QTable, greedy_policy_eval, train
from .scenario import ScenarioConfig

POLICY_PROPOSED = "proposed"
POLICY_GREEDY = "greedy"
POLICY_CASE1 = "case1"
POLICY_CASE2 = "case2"


class PolicyResult(NamedTuple):
    tag: str
    t_mean_s: float
    moving_time_s: float
    t_means: list
    moving_times: list
    reward_series: list | None
    illegal_actions: int
    extras: dict


class PolicyTag(NamedTuple):
    kind: str
    velocity: float | None


def parse_policy_tag(tag: str) -> PolicyTag:
    """Accepts: proposed | conventional:<v> | local:<v> | greedy | case1 | case2."""
    if tag in (POLICY_PROPOSED, POLICY_GREEDY, POLICY_CASE1, POLICY_CASE2):
        return PolicyTag(tag, None)
    if ":" in tag:
        kind, _, value = tag.partition(":")
        if kind in ("conventional", "local"):
            try:
                return PolicyTag(kind, float(value))
            except ValueError:
                pass
    raise ValueError(
        f"unknown policy tag {tag!r}; expected proposed | conventional:<v> | "
        f"local:<v> | greedy | case1 | case2"
    )


# -- velocity controllers ----------------------------------------------------


class ConstantVelocity:
    """Same target in every region."""

    def __init__(self, velocity_mps: float):
        self.velocity_mps = float(velocity_mps)

    def choose(self, episode, region_idx, vel_state, env):
        return self.velocity_mps

    def region_done(self, episode, region_idx, velocity, traversal, region_reward):
        pass

    def episode_done(self, episode, summary):
        pass


class FixedAssignment:
    """One pre-decided target per region."""

    def __init__(self, velocities):
        self.velocities = [float(v) for v in velocities]

    def choose(self, episode, region_idx, vel_state, env):
        return self.velocities[region_idx]

    def region_done(self, episode, region_idx, velocity, traversal, region_reward):
        pass

    def episode_done(self, episode, summary):
        pass


class ChannelRuleVelocity:
    """Slow through covered regions, sprint through dead ones."""

    def __init__(self, slow_mps: float, fast_mps: float):
        self.slow_mps = float(slow_mps)
        self.fast_mps = float(fast_mps)

    def choose(self, episode, region_idx, vel_state, env):
        region = env.regions[region_idx]
        return self.slow_mps if region.channel_available else self.fast_mps

    def region_done(self, episode, region_idx, velocity, traversal, region_reward):
        pass

    def episode_done(self, episode, summary):
        pass


class GreedyVelocitySearch:
    """Per-region local search over candidate velocities.

    Each region ranks candidates by the average per-interval reward observed
    when traversing it at that target; the first sweep visits every candidate
    once per region, after which the per-region argmax is exploited with the
    learners' exploration schedule.  The whole-trajectory assignment with the
    best mean region reward seen during training is kept as the final answer.
    """

    def __init__(self, velocity_set, n_regions, hyper, rng):
        self.velocities = [float(v) for v in velocity_set]
        self.n_regions = n_regions
        self.epsilon0 = hyper.epsilon
        self.decay = hyper.epsilon_decay
        self.per_episode = hyper.epsilon_decay_unit == "episode"
        self.rng = rng
        k = len(self.velocities)
        self.sum_avg = [[0.0] * k for _ in range(n_regions)]
        self.count = [[0] * k for _ in range(n_regions)]
        self.steps = 0
        self.episodes_seen = 0
        self.best_assignment = None
        self.best_mean_reward = -float("inf")
        self._current = [None] * n_regions

    @property
    def candidate_evaluations(self) -> int:
        return sum(1 for row in self.count for c in row if c > 0)

    def _epsilon(self) -> float:
        elapsed = self.episodes_seen if self.per_episode else self.steps
        return max(0.0, self.epsilon0 - self.decay * elapsed)

    def choose(self, episode, region_idx, vel_state, env):
        k = len(self.velocities)
        if episode < k:
            idx = episode
        elif self.rng.random() < self._epsilon():
            idx = int(self.rng.integers(k))
        else:
            sums = self.sum_avg[region_idx]
            counts = self.count[region_idx]
            idx = 0
            best = -float("inf")
            for j in range(k):
                avg = sums[j] / counts[j] if counts[j] else float("inf")
                if avg > best:
                    best, idx = avg, j
        self._current[region_idx] = idx
        return self.velocities[idx]

    def region_done(self, episode, region_idx, velocity, traversal, region_reward):
        idx = self._current[region_idx]
        self.sum_avg[region_idx][idx] += region_reward / traversal.interval_count
        self.count[region_idx][idx] += 1
        self.steps += traversal.interval_count

    def episode_done(self, episode, summary):
        self.episodes_seen += 1
        mean_reward = sum(summary.region_rewards) / len(summary.region_rewards)
        if mean_reward > self.best_mean_reward:
            self.best_mean_reward = mean_reward
            self.best_assignment = [self.velocities[i] for i in self._current]

    def selected_assignment(self):
        if self.best_assignment is None:
            raise RuntimeError("no completed training episode")
        return list(self.best_assignment)


def offload_to_region_server(env, state):
    """Offload to the current region's co-located server whenever a channel
    exists, otherwise compute locally."""
    return state.region_id if state.channel_available else ACTION_LOCAL


def always_local(env, state):
    return ACTION_LOCAL


# -- policy runners ----------------------------------------------------------


def _evaluated(tag, q1, q2, scenario, eval_seed, eval_episodes, topology_seed,
               reward_series, extras, velocity_controller=None, offload_rule=None):
    ev = greedy_policy_eval(q1, q2, scenario, seed=eval_seed, episodes=eval_episodes,
                            topology_seed=topology_seed,
                            velocity_controller=velocity_controller,
                            offload_rule=offload_rule)
    return PolicyResult(tag, ev.mean_t_mean_s, ev.mean_moving_time_s, ev.t_means,
                        ev.moving_times, reward_series, ev.illegal_actions, extras)


def proposed_scheme(scenario: ScenarioConfig, train_seed, eval_seed, *,
                    topology_seed=None, episodes=None, eval_episodes=None) -> PolicyResult:
    result = train(scenario, seed=train_seed, topology_seed=topology_seed, episodes=episodes)
    extras = {"monitor": result.monitor.report()}
    return _evaluated(POLICY_PROPOSED, result.q1, result.q2, scenario, eval_seed,
                      eval_episodes or scenario.eval_episodes, topology_seed,
                      result.reward_series, extras)


def conventional_offloading(scenario: ScenarioConfig, const_velocity: float, train_seed,
                            eval_seed, *, topology_seed=None, episodes=None,
                            eval_episodes=None) -> PolicyResult:
    """Offloading learned as usual while the robot holds one velocity for the
    whole journey (the velocity table is never consulted)."""
    if const_velocity not in scenario.velocity_set_mps:
        raise ValueError(f"velocity {const_velocity} not in the configured set")
    fixed_v = replace(scenario, initial_velocity_mps=float(const_velocity))
    controller = ConstantVelocity(const_velocity)
    result = train(fixed_v, seed=train_seed, topology_seed=topology_seed,
                   episodes=episodes, velocity_controller=controller)
    extras = {"velocity": const_velocity, "monitor": result.monitor.report()}
    return _evaluated(f"conventional:{const_velocity:g}", result.q1, result.q2, fixed_v,
                      eval_seed, eval_episodes or scenario.eval_episodes, topology_seed,
                      result.reward_series, extras, velocity_controller=controller)


def local_execution(scenario: ScenarioConfig, const_velocity: float, eval_seed, *,
                    topology_seed=None, eval_episodes=None) -> PolicyResult:
    """Every interval computes on the robot; nothing is learned."""
    if const_velocity not in scenario.velocity_set_mps:
        raise ValueError(f"velocity {const_velocity} not in the configured set")
    fixed_v = replace(scenario, initial_velocity_mps=float(const_velocity))
    controller = ConstantVelocity(const_velocity)
    n_actions = scenario.n_regions + 1
    return _evaluated(f"local:{const_velocity:g}", QTable(n_actions),
                      QTable(len(scenario.velocity_set_mps)), fixed_v, eval_seed,
                      eval_episodes or scenario.eval_episodes, topology_seed, None,
                      {"velocity": const_velocity}, velocity_controller=controller,
                      offload_rule=always_local)


def simplified_greedy(scenario: ScenarioConfig, train_seed, eval_seed, *,
                      topology_seed=None, episodes=None, eval_episodes=None) -> PolicyResult:
    """Greedy per-region velocity search with the offload agent learning as in
    the joint scheme; search effort is |velocities| * regions candidate cells
    instead of the exponential sweep over whole assignments."""
    ss = as_seed_sequence(train_seed)
    loop_ss, search_ss = ss.spawn(2)
    controller = GreedyVelocitySearch(
        scenario.velocity_set_mps, scenario.n_regions, scenario.hyper,
        np.random.default_rng(search_ss),
    )
    result = train(scenario, seed=loop_ss, topology_seed=topology_seed,
                   episodes=episodes, velocity_controller=controller)
    assignment = controller.selected_assignment()
    extras = {
        "velocity_assignment": assignment,
        "candidate_evaluations": controller.candidate_evaluations,
        "monitor": result.monitor.report(),
    }
    return _evaluated(POLICY_GREEDY, result.q1, result.q2, scenario, eval_seed,
                      eval_episodes or scenario.eval_episodes, topology_seed,
                      result.reward_series, extras,
                      velocity_controller=FixedAssignment(assignment))


def case_rule_policy(scenario: ScenarioConfig, which: str, train_seed, eval_seed, *,
                     topology_seed=None, episodes=None, eval_episodes=None) -> PolicyResult:
    """The two single-sided ablations.

    case1: velocity follows the channel rule (slowest when covered, fastest
    when dead) and offloading is learned.  case2: offloading follows the
    channel rule (region server when covered, local when dead) and the
    velocity agent learns.
    """
    if which == POLICY_CASE1:
        controller = ChannelRuleVelocity(min(scenario.velocity_set_mps),
                                         max(scenario.velocity_set_mps))
        result = train(scenario, seed=train_seed, topology_seed=topology_seed,
                       episodes=episodes, velocity_controller=controller)
        extras = {"rule": "velocity-by-channel", "monitor": result.monitor.report()}
        return _evaluated(POLICY_CASE1, result.q1, result.q2, scenario, eval_seed,
                          eval_episodes or scenario.eval_episodes, topology_seed,
                          result.reward_series, extras, velocity_controller=controller)
    if which == POLICY_CASE2:
        result = train(scenario, seed=train_seed, topology_seed=topology_seed,
                       episodes=episodes, offload_rule=offload_to_region_server)
        extras = {"rule": "offload-by-channel", "monitor": result.monitor.report()}
        return _evaluated(POLICY_CASE2, result.q1, result.q2, scenario, eval_seed,
                          eval_episodes or scenario.eval_episodes, topology_seed,
                          result.reward_series, extras,
                          offload_rule=offload_to_region_server)
    raise ValueError(f"which must be case1 or case2, got {which!r}")


def run_policy(tag: str, scenario: ScenarioConfig, train_seed, eval_seed, *,
               topology_seed=None, episodes=None, eval_episodes=None) -> PolicyResult:
    """Dispatch a policy tag string to its runner."""
    parsed = parse_policy_tag(tag)
    if parsed.kind == POLICY_PROPOSED:
        return proposed_scheme(scenario, train_seed, eval_seed, topology_seed=topology_seed,
                               episodes=episodes, eval_episodes=eval_episodes)
    if parsed.kind == "conventional":
        return conventional_offloading(scenario, parsed.velocity, train_seed, eval_seed,
                                       topology_seed=topology_seed, episodes=episodes,
                                       eval_episodes=eval_episodes)
    if parsed.kind == "local":
        return local_execution(scenario, parsed.velocity, eval_seed,
                               topology_seed=topology_seed, eval_episodes=eval_episodes)
    if parsed.kind == POLICY_GREEDY:
        return simplified_greedy(scenario, train_seed, eval_seed, topology_seed=topology_seed,
                                 episodes=episodes, eval_episodes=eval_episodes)
    return case_rule_policy(scenario, parsed.kind, train_seed, eval_seed,
                            topology_seed=topology_seed, episodes=episodes,
                            eval_episodes=eval_episodes)
