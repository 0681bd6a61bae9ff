"""Per-interval and per-region rewards for the dual learners.

The instantaneous reward blends two exponential terms: one driven by how far
the interval's completion time stays below its all-local bound, one driven by
how well the region's traversal fits inside its share of the journey's time
budget.  A preference factor trades the two off; illegal actions earn -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ILLEGAL_REWARD = -1.0


@dataclass(frozen=True)
class RewardParams:
    """Reward shaping constants for one concrete region chain.

    ``region_weights`` apportion the journey budget ``due_time_s`` to regions
    by length share; ``slowest_time_s`` is the journey time at the slowest
    allowed velocity and must exceed the budget so the pacing term has a
    positive normalizer.
    """

    preference_theta: float
    due_time_s: float
    slowest_time_s: float
    region_weights: tuple[float, ...]
    interval_s: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.preference_theta < 1.0):
            raise ValueError(f"preference_theta must be in [0, 1), got {self.preference_theta!r}")
        if self.due_time_s <= 0:
            raise ValueError("due_time_s must be positive")
        if self.slowest_time_s <= self.due_time_s:
            raise ValueError(
                f"slowest_time_s ({self.slowest_time_s}) must exceed due_time_s "
                f"({self.due_time_s}); the pacing normalizer would not be positive"
            )
        if self.interval_s <= 0:
            raise ValueError("interval_s must be positive")
        total = math.fsum(self.region_weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"region weights must sum to 1 within 1e-12, got {total!r}")


def pacing_term(interval_count: int, region_weight: float, params: RewardParams) -> float:
    """The velocity-pacing exponential, constant across a region's intervals.

    Equals e exactly when the region's interval count fits its share of the
    journey budget (interval_s * count <= weight * due_time) and decays as
    the overshoot grows relative to the slack the slowest velocity would add.
    """
    if interval_count < 1:
        raise ValueError("interval_count must be >= 1")
    per_interval_budget = region_weight * params.due_time_s / interval_count
    overshoot = max(params.interval_s - per_interval_budget, 0.0)
    normalizer = (region_weight / interval_count) * (params.slowest_time_s - params.due_time_s)
    return math.exp(1.0 - overshoot / normalizer)


def instant_reward(
    total_s: float,
    local_bound_s: float,
    interval_count: int,
    region_weight: float,
    params: RewardParams,
    legal: bool = True,
) -> float:
    """Reward for one interval, or -1 for an illegal action."""
    if not legal:
        return ILLEGAL_REWARD
    if local_bound_s <= 0:
        raise ValueError("local_bound_s must be positive")
    theta = params.preference_theta
    offload_part = (1.0 - theta) * math.exp(1.0 - total_s / local_bound_s)
    return offload_part + theta * pacing_term(interval_count, region_weight, params)


def region_reward(interval_rewards) -> float:
    """Accumulated reward over one region's intervals."""
    rewards = list(interval_rewards)
    if not rewards:
        raise ValueError("a region produces at least one interval reward")
    return math.fsum(rewards)
