"""How the per-interval reward trades completion time against journey pacing.

The first exponential rewards finishing below the all-local bound; the second
rewards keeping the region's interval count inside its share of the journey
budget and is constant across a region's intervals.  Illegal offloads (no
channel) earn a flat -1.
"""

import math

from orbit_mec import RewardParams, instant_reward, region_reward
from orbit_mec.rewards import pacing_term

# A 20-region journey: 14800 m expected, budget at the velocity midpoint.
params = RewardParams(
    preference_theta=0.1,
    due_time_s=1184.0,
    slowest_time_s=2960.0,
    region_weights=(200.0 / 14800.0,) + (14600.0 / 14800.0,),
    interval_s=1.0,
)
weight = params.region_weights[0]  # a 200 m cellular region

print("== completion-time term (theta = 0.1, budget met) ==")
for ratio in (0.05, 0.25, 0.5, 1.0):
    r = instant_reward(ratio * 2.56, 2.56, 10, weight, params)
    print(f"  T/bound = {ratio:4.2f}: reward {r:.4f}")

print("\n== pacing term vs interval count (region share of the budget: "
      f"{weight * params.due_time_s:.1f} s) ==")
for count in (10, 16, 20, 30, 40):
    term = pacing_term(count, weight, params)
    mark = "budget met -> e" if term == math.e else ""
    print(f"  {count:3d} intervals: pacing exp {term:.4f} {mark}")

print("\n== a region's accumulated reward ==")
per_interval = [instant_reward(0.2, 2.56, 16, weight, params)] * 15 + [-1.0]
print(f"  15 good intervals and one illegal offload: {region_reward(per_interval):.3f}")
print(f"  reward range per interval: (-1, {math.e:.4f}]")
