"""Dual tabular Q-learning: a per-interval offload agent and a per-region
velocity agent trained in one nested episode loop.

Both tables start at zero, so with rewards in [-1, e] every intermediate
value of the offload table stays within e/(1-discount) and every velocity
value within L_max * e/(1-discount), L_max being the largest interval count
seen; a monitor asserts this on every write.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .environment import (Environment, OffloadState, VelocityState,
                          as_seed_sequence)
from .scenario import Hyperparams, ScenarioConfig

R_MAX = math.e

QTABLE_SCHEMA = "orbit-mec/qtable-1"

OFFLOAD_STATE_FIELDS = list(OffloadState._fields)
VELOCITY_STATE_FIELDS = list(VelocityState._fields)


class QTable:
    """Sparse state-action values with default 0, visit counts, and a running
    max-magnitude.  Rows are materialized lazily per visited state."""

    __slots__ = ("n_actions", "rows", "visits", "max_abs")

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.rows: dict = {}
        self.visits: dict = {}
        self.max_abs = 0.0

    def value(self, state, action: int) -> float:
        row = self.rows.get(state)
        return 0.0 if row is None else row[action]

    def max_over(self, state, actions) -> float:
        row = self.rows.get(state)
        if row is None:
            return 0.0
        n = len(actions)
        if n == self.n_actions:
            return max(row)
        if n == 1:
            return row[actions[0]]
        return max(row[a] for a in actions)

    def argmax(self, state, actions) -> int:
        """Greedy action over ``actions``; ties resolve to the lowest id."""
        row = self.rows.get(state)
        if row is None:
            return actions[0]
        if len(actions) == self.n_actions:
            return row.index(max(row))
        best = actions[0]
        best_v = row[best]
        for a in actions:
            v = row[a]
            if v > best_v:
                best, best_v = a, v
        return best

    def write(self, state, action: int, value: float) -> None:
        row = self.rows.get(state)
        if row is None:
            row = [0.0] * self.n_actions
            self.rows[state] = row
            self.visits[state] = [0] * self.n_actions
        row[action] = value
        self.visits[state][action] += 1
        mag = value if value >= 0.0 else -value
        if mag > self.max_abs:
            self.max_abs = mag

    def checksum(self) -> float:
        return math.fsum(v for row in self.rows.values() for v in row)

    def __len__(self) -> int:
        return len(self.rows)


class BoundViolation(NamedTuple):
    table: str
    state: tuple
    action: int
    value: float
    bound: float


@dataclass
class ConvergenceMonitor:
    """Runtime check that every table write stays inside the zero-init bounds."""

    discount: float
    r_max: float = R_MAX
    tolerance: float = 1e-9
    l_max: int = 0
    violations: list = field(default_factory=list)

    def __post_init__(self):
        self.bound_q1 = self.r_max / (1.0 - self.discount)
        self.bound_q2 = self.l_max * self.r_max / (1.0 - self.discount)

    def observe_region_length(self, interval_count: int) -> None:
        if interval_count > self.l_max:
            self.l_max = interval_count
            self.bound_q2 = self.l_max * self.r_max / (1.0 - self.discount)

    def check_offload(self, state, action, value) -> None:
        if abs(value) > self.bound_q1 + self.tolerance:
            self.violations.append(BoundViolation("offload", tuple(state), action, value, self.bound_q1))

    def check_velocity(self, state, action, value) -> None:
        if abs(value) > self.bound_q2 + self.tolerance:
            self.violations.append(BoundViolation("velocity", tuple(state), action, value, self.bound_q2))

    def report(self) -> dict:
        return {
            "r_max": self.r_max,
            "l_max": self.l_max,
            "bound_q1": self.bound_q1,
            "bound_q2": self.bound_q2,
            "violations": len(self.violations),
        }


def select_action(table: QTable, state, legal, epsilon: float, rng) -> int:
    """Epsilon-greedy over the legal set; greedy ties resolve to the lowest id."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return legal[int(rng.integers(len(legal)))]
    return table.argmax(state, legal)


def update_offload(table, state, action, reward, next_state, next_legal, hyper,
                   monitor=None) -> float:
    """One temporal-difference step on the offload table; bootstraps only over
    actions that will actually be legal in the next state."""
    nxt = 0.0 if next_state is None else table.max_over(next_state, next_legal)
    rows = table.rows
    row = rows.get(state)
    if row is None:
        row = [0.0] * table.n_actions
        rows[state] = row
        table.visits[state] = [0] * table.n_actions
    old = row[action]
    new = old + hyper.learning_rate * (reward + hyper.discount * nxt - old)
    row[action] = new
    table.visits[state][action] += 1
    mag = new if new >= 0.0 else -new
    if mag > table.max_abs:
        table.max_abs = mag
    if monitor is not None:
        monitor.check_offload(state, action, new)
    return new


def update_velocity(table, state, action, region_reward, next_state, hyper,
                    monitor=None) -> float:
    """One temporal-difference step on the velocity table; the journey's last
    region bootstraps from zero."""
    old = table.value(state, action)
    nxt = 0.0 if next_state is None else table.max_over(next_state, range(table.n_actions))
    new = old + hyper.learning_rate * (region_reward + hyper.discount * nxt - old)
    table.write(state, action, new)
    if monitor is not None:
        monitor.check_velocity(state, action, new)
    return new


class TrainResult(NamedTuple):
    q1: QTable
    q2: QTable
    reward_series: list
    t_mean_series: list
    moving_time_series: list
    monitor: ConvergenceMonitor
    env: Environment
    final_epsilon: float


class EvalResult(NamedTuple):
    mean_t_mean_s: float
    mean_moving_time_s: float
    t_means: list
    moving_times: list
    illegal_actions: int
    traces: list


def _run_episode(env, q1, q2, hyper, eps, decay, rng, learn, velocity_controller,
                 offload_rule, monitor, episode, record=False):
    """One full journey; returns (episode summary, epsilon after the episode)."""
    vel_state, _ = env.reset(record=record)
    n_regions = len(env.regions)
    velocity_values = env.velocity_actions
    vel_action_ids = range(len(velocity_values))
    learn_velocity = learn and velocity_controller is None
    learn_offload = learn and offload_rule is None
    pending = None
    for region_idx in range(n_regions):
        if velocity_controller is None:
            a_vel = select_action(q2, vel_state, vel_action_ids, eps if learn else 0.0, rng)
            velocity = velocity_values[a_vel]
        else:
            a_vel = None
            velocity = velocity_controller.choose(episode, region_idx, vel_state, env)
        traversal, next_vel = env.step_region(velocity)
        state = env.current_offload_state
        legal = env.legal_actions(state)
        if pending is not None:
            ps, pa, pr = pending
            update_offload(q1, ps, pa, pr, state, legal, hyper, monitor)
            pending = None
        for _ in range(traversal.interval_count):
            if offload_rule is None:
                action = select_action(q1, state, legal, eps if learn else 0.0, rng)
            else:
                action = offload_rule(env, state)
            _, reward, next_state, done = env.step_interval(action)
            if learn:
                eps = eps - decay if eps > decay else 0.0
            if done:
                if learn_offload:
                    pending = (state, action, reward)
                break
            if learn_offload:
                update_offload(q1, state, action, reward, next_state, legal, hyper, monitor)
            state = next_state
        if monitor is not None:
            monitor.observe_region_length(traversal.interval_count)
        region_total = env.last_region_reward
        if learn_velocity:
            terminal = region_idx == n_regions - 1
            update_velocity(q2, vel_state, a_vel, region_total,
                            None if terminal else next_vel, hyper, monitor)
        elif velocity_controller is not None:
            velocity_controller.region_done(episode, region_idx, velocity,
                                            traversal, region_total)
        vel_state = next_vel
    if pending is not None:
        ps, pa, pr = pending
        update_offload(q1, ps, pa, pr, None, (), hyper, monitor)
    summary = env.episode_summary()
    if velocity_controller is not None:
        velocity_controller.episode_done(episode, summary)
    return summary, eps


def train(scenario: ScenarioConfig, hyper: Hyperparams | None = None, seed=0, *,
          topology_seed=None, episodes: int | None = None,
          velocity_controller=None, offload_rule=None) -> TrainResult:
    """Run the nested training loop for the configured number of episodes.

    Per region the velocity agent (or a controller standing in for it) picks a
    target, then the offload agent steps every interval, updating its table
    each step; the accumulated region reward updates the velocity table once.
    The per-episode series records the mean region reward.
    """
    hyper = hyper or scenario.hyper
    episodes = hyper.episodes if episodes is None else episodes
    ss = as_seed_sequence(seed)
    env_ss, agent_ss = ss.spawn(2)
    env = Environment(scenario, env_ss, topology_seed=topology_seed)
    rng = np.random.default_rng(agent_ss)
    q1 = QTable(len(env.regions) + 1)
    q2 = QTable(len(scenario.velocity_set_mps))
    monitor = ConvergenceMonitor(discount=hyper.discount)
    eps = hyper.epsilon
    step_decay = hyper.epsilon_decay if hyper.epsilon_decay_unit == "step" else 0.0
    episode_decay = hyper.epsilon_decay if hyper.epsilon_decay_unit == "episode" else 0.0
    reward_series = []
    t_means = []
    moving_times = []
    n_regions = len(env.regions)
    for episode in range(episodes):
        summary, eps = _run_episode(env, q1, q2, hyper, eps, step_decay, rng, True,
                                    velocity_controller, offload_rule, monitor, episode)
        eps = eps - episode_decay if eps > episode_decay else 0.0
        reward_series.append(sum(summary.region_rewards) / n_regions)
        t_means.append(summary.t_mean_s)
        moving_times.append(summary.moving_time_s)
    return TrainResult(q1, q2, reward_series, t_means, moving_times, monitor, env, eps)


def greedy_policy_eval(q1: QTable, q2: QTable, scenario: ScenarioConfig, seed=0,
                       episodes: int = 1, *, topology_seed=None,
                       velocity_controller=None, offload_rule=None,
                       record_traces: bool = False) -> EvalResult:
    """Evaluate trained tables greedily (no exploration, no updates)."""
    ss = as_seed_sequence(seed)
    env_ss, _ = ss.spawn(2)
    env = Environment(scenario, env_ss, topology_seed=topology_seed)
    hyper = scenario.hyper
    t_means = []
    moving_times = []
    traces = []
    illegal = 0
    for episode in range(episodes):
        summary, _ = _run_episode(env, q1, q2, hyper, 0.0, 0.0, None, False,
                                  velocity_controller, offload_rule, None, episode,
                                  record=record_traces)
        t_means.append(summary.t_mean_s)
        moving_times.append(summary.moving_time_s)
        illegal += summary.illegal_actions
        if record_traces:
            traces.append(summary.trace)
    return EvalResult(
        mean_t_mean_s=sum(t_means) / len(t_means),
        mean_moving_time_s=sum(moving_times) / len(moving_times),
        t_means=t_means,
        moving_times=moving_times,
        illegal_actions=illegal,
        traces=traces,
    )


def moving_average(series, window: int = 100) -> list:
    """Trailing moving average with a growing head window."""
    out = []
    acc = 0.0
    for i, v in enumerate(series):
        acc += v
        if i >= window:
            acc -= series[i - window]
            out.append(acc / window)
        else:
            out.append(acc / (i + 1))
    return out


# -- snapshots ---------------------------------------------------------------


def save_qtable(table: QTable, path, kind: str) -> None:
    """Write a table as a flat, versioned JSON record list."""
    fields = OFFLOAD_STATE_FIELDS if kind == "offload" else VELOCITY_STATE_FIELDS
    records = []
    for state in sorted(table.rows):
        row = table.rows[state]
        visits = table.visits[state]
        for action in range(table.n_actions):
            if visits[action] == 0 and row[action] == 0.0:
                continue
            records.append([list(state), action, row[action], visits[action]])
    payload = {
        "schema": QTABLE_SCHEMA,
        "kind": kind,
        "n_actions": table.n_actions,
        "state_fields": fields,
        "records": records,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_qtable(path) -> tuple[QTable, str]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema") != QTABLE_SCHEMA:
        raise ValueError(f"unsupported table schema: {payload.get('schema')!r}")
    kind = payload["kind"]
    cls = OffloadState if kind == "offload" else VelocityState
    table = QTable(int(payload["n_actions"]))
    for state_list, action, value, visits in payload["records"]:
        state = cls(*state_list)
        row = table.rows.get(state)
        if row is None:
            row = [0.0] * table.n_actions
            table.rows[state] = row
            table.visits[state] = [0] * table.n_actions
        row[int(action)] = float(value)
        table.visits[state][int(action)] = int(visits)
        if abs(value) > table.max_abs:
            table.max_abs = abs(value)
    return table, kind
