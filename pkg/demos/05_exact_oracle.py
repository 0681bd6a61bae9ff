"""Exact optima on the deterministic desk instances, and how close the
trained policy lands.

The solver enumerates velocity assignments and optimizes interval decisions
by dynamic programming over the carried server; on these pinned instances the
learned policy should come within a few percent of the optimum.
"""

from orbit_mec import desk_instances, solve_exact
from orbit_mec.harness import oracle_gap
from orbit_mec.oracle import solve_decomposed

for name, instance in desk_instances().items():
    print(f"== {name} ==")
    solution = solve_exact(instance)
    print(f"optimum: mean delay {solution.t_mean_s:.6f} s at velocities "
          f"{solution.velocity_assignment}, moving time {solution.moving_time_s:.2f} s")
    decisions = {r.region_id: r.servers[:6] for r in solution.regions}
    print(f"first decisions per region: {decisions}")
    decomposed = solve_decomposed(instance)
    print(f"per-region decomposition objective: {decomposed.t_mean_s:.6f} s "
          f"(joint {solution.t_mean_s:.6f} s)")
    report = oracle_gap(instance.scenario, episodes=4000, seed=0)
    print(f"trained policy: {report.policy_t_mean_s:.6f} s "
          f"-> gap {report.gap * 100:.2f}%\n")
