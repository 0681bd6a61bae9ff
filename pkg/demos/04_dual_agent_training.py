"""Train the two learners on a small chain and inspect what they picked up.

The offload table gets one update per interval; the velocity table one per
region with the accumulated region reward.  A bound monitor checks every
write against the zero-initialization envelopes.
"""

from orbit_mec import Hyperparams, greedy_policy_eval, train
from orbit_mec.qlearning import moving_average
from orbit_mec.scenario import ScenarioConfig

scenario = ScenarioConfig(
    n_regions=4,
    satellite_regions=(3,),
    cellular_length_set_m=(100.0, 200.0),
    satellite_length_set_m=(400.0,),
    cellular_mec_hz_set=(12e9, 18e9),
    satellite_mec_hz_set=(55e9,),
    n_dead_regions=1,
    velocity_set_mps=(5.0, 10.0, 15.0, 20.0),
    initial_velocity_mps=10.0,
    hyper=Hyperparams(episodes=2000, epsilon=0.05, epsilon_decay=2e-5),
    eval_episodes=50,
)

result = train(scenario, seed=7)
avg = moving_average(result.reward_series, 100)
print("== training ==")
print(f"episodes: {len(result.reward_series)}, final epsilon {result.final_epsilon:.4f}")
print("mean region reward (100-episode moving average):")
for mark in (99, 499, 999, 1499, 1999):
    print(f"  episode {mark + 1:5d}: {avg[mark]:8.2f}")
print(f"offload table: {len(result.q1)} states; velocity table: {len(result.q2)} states")
print(f"bound monitor: {result.monitor.report()}")

print("\n== greedy evaluation (no exploration, no updates) ==")
ev = greedy_policy_eval(result.q1, result.q2, scenario, seed=99, episodes=50,
                        topology_seed=None)
print(f"mean completion time {ev.mean_t_mean_s:.3f} s, moving time {ev.mean_moving_time_s:.1f} s")

print("\n== learned per-region target velocities ==")
for state in sorted(result.q2.rows):
    row = result.q2.rows[state]
    best = max(range(len(row)), key=lambda i: row[i])
    if state.entry_velocity_mps == 10.0 or state.prev_region > 0:
        print(f"  region {state.curr_region} (entry {state.entry_velocity_mps:.0f} m/s): "
              f"target {scenario.velocity_set_mps[best]:.0f} m/s")
