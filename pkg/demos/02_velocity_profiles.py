"""Trapezoidal traversal of a coverage region: ramp, cruise, interval count.

The travel time has a closed form; slower targets stretch the traversal and
therefore the number of offloading intervals spent in the region.
"""

from orbit_mec import VelocityPlan, instantaneous_velocity, interval_count, region_travel_time
from orbit_mec.mobility import InfeasiblePlanError, feasibility_check, traverse_region

print("== accelerate 5 -> 20 m/s across 300 m (a = 2 m/s^2) ==")
plan = VelocityPlan(entry_velocity_mps=5, target_velocity_mps=20, accel_mps2=2,
                    region_length_m=300)
print(f"travel time {region_travel_time(plan):.4f} s -> {interval_count(plan)} intervals")
profile = [instantaneous_velocity(plan, l) for l in range(1, 11)]
print("velocity over the first 10 intervals:", profile)

print("\n== travel time vs target across a 200 m region (entry 10 m/s) ==")
for goal in (5, 8, 10, 14, 20):
    p = VelocityPlan(10, goal, 2, 200)
    print(f"  target {goal:2d} m/s: {region_travel_time(p):7.3f} s, "
          f"{interval_count(p):3d} intervals")

print("\n== braking limits ==")
velocity_set = tuple(float(v) for v in range(5, 21))
tight = VelocityPlan(20, 5, 2, 50)
try:
    region_travel_time(tight)
except InfeasiblePlanError as err:
    print(f"cannot brake 20 -> 5 m/s in 50 m: slowest reachable {err.reachable_mps:.2f} m/s")
resolved = feasibility_check(tight, velocity_set)
print(f"resolved target from the velocity set: {resolved.resolved_target_mps} m/s")
trav = traverse_region(tight, velocity_set)
print(f"clamped traversal: {trav.travel_time_s:.3f} s at exit "
      f"{trav.exit_velocity_mps} m/s, {trav.interval_count} intervals")
