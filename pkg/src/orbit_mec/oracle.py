"""Exact solver for deterministic desk-scale instances.

Velocity assignments are enumerated outright; per-interval decisions are then
optimized by dynamic programming with the previous server as state, which is
equivalent to brute force over decision sequences (the carried server is the
only coupling between intervals) at a fraction of the cost.  Guards reject
instances large enough for the enumeration to run away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .delays import TIER_CELLULAR, TIER_SATELLITE
from .environment import reward_params_for
from .mobility import VelocityPlan, traverse_region
from .scenario import FixedDraws, RegionDescriptor, ScenarioConfig

MAX_REGIONS = 3
MAX_VELOCITIES = 4
MAX_WORK = 10_000_000


class InvalidInstanceError(ValueError):
    """The instance violates the desk-scale guards."""


class OracleInfeasibleError(ValueError):
    """No decision satisfies the constraints; names the violated one."""

    def __init__(self, message: str, constraint: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class DeterministicInstance:
    """A fully pinned scenario small enough for exact search."""

    scenario: ScenarioConfig

    def __post_init__(self):
        sc = self.scenario
        if sc.fixed is None:
            raise InvalidInstanceError("instance requires a scenario with fixed draws")
        if sc.n_regions > MAX_REGIONS:
            raise InvalidInstanceError(f"at most {MAX_REGIONS} regions, got {sc.n_regions}")
        if len(sc.velocity_set_mps) > MAX_VELOCITIES:
            raise InvalidInstanceError(
                f"at most {MAX_VELOCITIES} velocities, got {len(sc.velocity_set_mps)}"
            )
        if self.work_estimate() > MAX_WORK:
            raise InvalidInstanceError(
                f"joint decision space estimate {self.work_estimate()} exceeds {MAX_WORK}"
            )

    def work_estimate(self) -> int:
        sc = self.scenario
        v_min = min(sc.velocity_set_mps)
        max_intervals = sum(
            max(1, math.floor(r.length_m / v_min / sc.interval_s)) for r in sc.fixed.regions
        )
        states = (sc.n_regions + 1) ** 2
        return len(sc.velocity_set_mps) ** sc.n_regions * max_intervals * states


class RegionDecisions(NamedTuple):
    region_id: int
    target_velocity_mps: float
    travel_time_s: float
    interval_count: int
    servers: tuple


class OracleSolution(NamedTuple):
    t_mean_s: float
    total_delay_s: float
    moving_time_s: float
    velocity_assignment: tuple
    regions: tuple


class _IntervalCosts(NamedTuple):
    bound: float
    offload_base: list  # com + server compute, indexed by server id (0 unused)


def _instance_tables(sc: ScenarioConfig):
    """Cost lookups shared by the solvers, mirroring the environment algebra."""
    n = sc.n_regions
    regions = sc.fixed.regions
    phi = sc.cycles_per_bit
    from .delays import cellular_rate

    cell_rate = cellular_rate(sc.radio)
    sat_prop = 2.0 * (sc.radio.sat_dist_gs_m + sc.radio.sat_dist_se_m) / sc.radio.light_speed_mps
    sat_inv = 1.0 / sc.radio.sat_uplink_bps + 1.0 / sc.radio.sat_downlink_bps
    is_cell = [False] + [r.tier == TIER_CELLULAR for r in regions]
    is_sat = [False] + [r.tier == TIER_SATELLITE for r in regions]
    ratio_applies = [
        [p != c and (p != 0 or c != 0) and (is_cell[p] or is_cell[c]) for c in range(n + 1)]
        for p in range(n + 1)
    ]
    cross = [
        [
            sc.migration.cross_tier_cost_s
            if (is_cell[p] and is_sat[c]) or (is_sat[p] and is_cell[c])
            else 0.0
            for c in range(n + 1)
        ]
        for p in range(n + 1)
    ]

    def interval_costs(region: RegionDescriptor, data_bits: float, local_hz: float) -> _IntervalCosts:
        bound = data_bits * phi / local_hz
        rt = data_bits + sc.result_ratio * data_bits
        if region.tier == TIER_CELLULAR:
            com = rt / cell_rate
        else:
            com = sat_prop + rt * sat_inv
        base = [0.0] * (n + 1)
        for m in range(1, n + 1):
            base[m] = com + data_bits * phi / regions[m - 1].mec_cpu_hz
        return _IntervalCosts(bound, base)

    def migration(prev: int, curr: int, mec_s: float) -> float:
        cost = 0.0
        if ratio_applies[prev][curr]:
            cost += sc.migration.migration_ratio * mec_s
        cost += cross[prev][curr]
        return cost

    def mec_time(region_server: int, data_bits: float) -> float:
        return data_bits * phi / regions[region_server - 1].mec_cpu_hz

    return interval_costs, migration, mec_time


def _kinematic_profile(sc: ScenarioConfig, assignment):
    """Entry-chained traversals with the same clamping the environment applies."""
    entry = sc.initial_velocity_mps
    profile = []
    for region, target in zip(sc.fixed.regions, assignment):
        plan = VelocityPlan(entry, float(target), sc.accel_mps2, region.length_m, sc.interval_s)
        trav = traverse_region(plan, sc.velocity_set_mps)
        profile.append(trav)
        entry = trav.exit_velocity_mps
    return profile


def _dp_region(sc, tables, region_idx: int, interval_count: int, start_costs):
    """Extend the prev-server cost frontier through one region's intervals.

    ``start_costs[p]`` is the best accumulated delay arriving at the region
    with previous server p (inf when unreachable); returns the frontier after
    the region plus parent pointers for path reconstruction.
    """
    interval_costs, migration, mec_time = tables
    sc_fixed = sc.fixed
    region = sc_fixed.regions[region_idx]
    n = sc.n_regions
    mu = region.channel_available
    costs = list(start_costs)
    parents = []
    inf = math.inf
    for l in range(interval_count):
        data = sc_fixed.data_bits[region_idx][l]
        hz = sc_fixed.local_cpu_hz[region_idx][l]
        ic = interval_costs(region, data, hz)
        new_costs = [inf] * (n + 1)
        parent = [(-1)] * (n + 1)
        # Local execution: always allowed, meets the local bound exactly.
        best_prev = -1
        best = inf
        for p in range(n + 1):
            if costs[p] < best:
                best, best_prev = costs[p], p
        if best_prev >= 0:
            new_costs[0] = best + ic.bound
            parent[0] = best_prev
        if mu:
            for m in range(1, n + 1):
                t_mec = mec_time(m, data)
                for p in range(n + 1):
                    if costs[p] == inf:
                        continue
                    total = ic.offload_base[m] + migration(p, m, t_mec)
                    if total > ic.bound:
                        continue
                    cand = costs[p] + total
                    if cand < new_costs[m]:
                        new_costs[m] = cand
                        parent[m] = p
        costs = new_costs
        parents.append(parent)
    return costs, parents


def _reconstruct(parents_per_region, end_state: int):
    """Walk parent pointers backwards; each interval's state is its action."""
    decisions = []
    state = end_state
    for parents in reversed(parents_per_region):
        servers = []
        for parent in reversed(parents):
            servers.append(state)
            state = parent[state]
        decisions.append(tuple(reversed(servers)))
    decisions.reverse()
    return decisions, state


def solve_exact(instance: DeterministicInstance) -> OracleSolution:
    """Global optimum of the journey-level problem.

    Enumerates every velocity assignment, keeps those whose total travel time
    fits the journey budget, and optimizes interval decisions exactly under
    the per-interval local bound and the one-server rule.
    """
    sc = instance.scenario
    tables = _instance_tables(sc)
    params = reward_params_for(sc, sc.fixed.regions)
    t_move = params.due_time_s
    n = sc.n_regions
    inf = math.inf
    best = None
    any_feasible_velocity = False
    from itertools import product

    for assignment in product(sc.velocity_set_mps, repeat=n):
        profile = _kinematic_profile(sc, assignment)
        if sum(t.travel_time_s for t in profile) > t_move + 1e-9:
            continue
        any_feasible_velocity = True
        costs = [inf] * (n + 1)
        costs[0] = 0.0
        parents_per_region = []
        for region_idx, trav in enumerate(profile):
            costs, parents = _dp_region(sc, tables, region_idx, trav.interval_count, costs)
            parents_per_region.append(parents)
        end_state = min(range(n + 1), key=lambda s: costs[s])
        total = costs[end_state]
        count = sum(t.interval_count for t in profile)
        t_mean = total / count
        if best is None or t_mean < best[0]:
            decisions, _ = _reconstruct(parents_per_region, end_state)
            regions = tuple(
                RegionDecisions(i + 1, profile[i].exit_velocity_mps, profile[i].travel_time_s,
                                profile[i].interval_count, decisions[i])
                for i in range(n)
            )
            best = (
                t_mean,
                OracleSolution(
                    t_mean_s=t_mean,
                    total_delay_s=total,
                    moving_time_s=sum(t.travel_time_s for t in profile),
                    velocity_assignment=tuple(float(v) for v in assignment),
                    regions=regions,
                ),
            )
    if not any_feasible_velocity:
        raise OracleInfeasibleError(
            f"no velocity assignment satisfies the journey budget ({t_move:.6g} s)",
            constraint="journey-budget",
        )
    solution = best[1]
    audit_solution(instance, solution)
    return solution


class RegionSolution(NamedTuple):
    region_id: int
    mean_delay_s: float
    total_delay_s: float
    target_velocity_mps: float
    travel_time_s: float
    interval_count: int
    servers: tuple
    exit_velocity_mps: float
    end_server: int


def solve_region_exact(instance: DeterministicInstance, region_id: int,
                       entry_velocity_mps=None, initial_prev: int = 0) -> RegionSolution:
    """Optimum of one region's subproblem under its share of the journey
    budget (the region's length fraction of the total)."""
    sc = instance.scenario
    tables = _instance_tables(sc)
    params = reward_params_for(sc, sc.fixed.regions)
    idx = region_id - 1
    region = sc.fixed.regions[idx]
    budget = params.region_weights[idx] * params.due_time_s
    entry = sc.initial_velocity_mps if entry_velocity_mps is None else float(entry_velocity_mps)
    n = sc.n_regions
    inf = math.inf
    best = None
    for target in sc.velocity_set_mps:
        plan = VelocityPlan(entry, float(target), sc.accel_mps2, region.length_m, sc.interval_s)
        trav = traverse_region(plan, sc.velocity_set_mps)
        if trav.travel_time_s > budget + 1e-9:
            continue
        costs = [inf] * (n + 1)
        costs[initial_prev] = 0.0
        costs_out, parents = _dp_region(sc, tables, idx, trav.interval_count, costs)
        end_state = min(range(n + 1), key=lambda s: costs_out[s])
        total = costs_out[end_state]
        mean = total / trav.interval_count
        if best is None or mean < best.mean_delay_s:
            decisions, _ = _reconstruct([parents], end_state)
            best = RegionSolution(region_id, mean, total, trav.exit_velocity_mps,
                                  trav.travel_time_s, trav.interval_count, decisions[0],
                                  trav.exit_velocity_mps, end_state)
    if best is None:
        raise OracleInfeasibleError(
            f"region {region_id}: no velocity fits its budget share ({budget:.6g} s)",
            constraint="region-budget",
        )
    return best


class DecomposedSolution(NamedTuple):
    regions: tuple
    t_mean_s: float
    total_delay_s: float
    moving_time_s: float


def solve_decomposed(instance: DeterministicInstance) -> DecomposedSolution:
    """Chain the per-region optima (entry velocity and carried server flow
    from one region to the next) and report the concatenated objective."""
    sc = instance.scenario
    entry = sc.initial_velocity_mps
    prev = 0
    out = []
    total = 0.0
    count = 0
    moving = 0.0
    for region_id in range(1, sc.n_regions + 1):
        sol = solve_region_exact(instance, region_id, entry_velocity_mps=entry,
                                 initial_prev=prev)
        out.append(sol)
        total += sol.total_delay_s
        count += sol.interval_count
        moving += sol.travel_time_s
        entry = sol.exit_velocity_mps
        prev = sol.end_server
    return DecomposedSolution(tuple(out), total / count, total, moving)


def audit_solution(instance: DeterministicInstance, solution: OracleSolution) -> None:
    """Recheck the returned solution against every constraint exactly."""
    sc = instance.scenario
    tables = _instance_tables(sc)
    interval_costs, migration, mec_time = tables
    params = reward_params_for(sc, sc.fixed.regions)
    if solution.moving_time_s > params.due_time_s + 1e-9:
        raise AssertionError("journey budget violated by returned solution")
    prev = 0
    total = 0.0
    count = 0
    for region_sol in solution.regions:
        idx = region_sol.region_id - 1
        region = sc.fixed.regions[idx]
        for l, server in enumerate(region_sol.servers):
            data = sc.fixed.data_bits[idx][l]
            hz = sc.fixed.local_cpu_hz[idx][l]
            ic = interval_costs(region, data, hz)
            if server == 0:
                t = ic.bound
            else:
                if not region.channel_available:
                    raise AssertionError("offload decision in a dead region")
                t = ic.offload_base[server] + migration(prev, server, mec_time(server, data))
                if t > ic.bound:
                    raise AssertionError("per-interval local bound violated")
            total += t
            count += 1
            prev = server
    if not math.isclose(total / count, solution.t_mean_s, rel_tol=1e-12):
        raise AssertionError("objective mismatch in returned solution")


# -- desk-scale reference instances -----------------------------------------


def _constant_seq(value: float, length: int) -> tuple:
    return tuple([value] * length)


def desk_instance_all_local() -> DeterministicInstance:
    """Single covered-less region: every decision is forced local."""
    region = RegionDescriptor(1, TIER_CELLULAR, 100.0, 0, 15e9)
    fixed = FixedDraws(
        regions=(region,),
        data_bits=(_constant_seq(3.2e6, 20),),
        local_cpu_hz=(_constant_seq(1e9, 20),),
    )
    sc = ScenarioConfig(
        n_regions=1,
        satellite_regions=(),
        n_dead_regions=1,
        data_bits_set=(3.2e6,),
        local_cpu_hz_set=(1e9,),
        velocity_set_mps=(5.0, 10.0),
        initial_velocity_mps=5.0,
        eval_episodes=1,
        fixed=fixed,
    )
    return DeterministicInstance(sc)


def desk_instance_offload_all() -> DeterministicInstance:
    """Single covered region with a fast server and free migrations: the
    optimum offloads every interval."""
    from .delays import MigrationParams

    region = RegionDescriptor(1, TIER_CELLULAR, 100.0, 1, 50e9)
    fixed = FixedDraws(
        regions=(region,),
        data_bits=(_constant_seq(3.2e6, 20),),
        local_cpu_hz=(_constant_seq(1e9, 20),),
    )
    sc = ScenarioConfig(
        n_regions=1,
        satellite_regions=(),
        n_dead_regions=0,
        data_bits_set=(3.2e6,),
        local_cpu_hz_set=(1e9,),
        migration=MigrationParams(0.0, 0.5),
        velocity_set_mps=(5.0, 10.0),
        initial_velocity_mps=5.0,
        eval_episodes=1,
        fixed=fixed,
    )
    return DeterministicInstance(sc)


def desk_instance_dead_sprint() -> DeterministicInstance:
    """Covered region followed by a dead one: the optimum lingers where
    offloading is cheap and sprints through the dead region."""
    fixed = FixedDraws(
        regions=(
            RegionDescriptor(1, TIER_CELLULAR, 100.0, 1, 15e9),
            RegionDescriptor(2, TIER_CELLULAR, 100.0, 0, 15e9),
        ),
        data_bits=(_constant_seq(3.2e6, 20), _constant_seq(3.2e6, 20)),
        local_cpu_hz=(_constant_seq(1e9, 20), _constant_seq(1e9, 20)),
    )
    sc = ScenarioConfig(
        n_regions=2,
        satellite_regions=(),
        n_dead_regions=1,
        data_bits_set=(3.2e6,),
        local_cpu_hz_set=(1e9,),
        velocity_set_mps=(5.0, 8.0),
        initial_velocity_mps=5.0,
        theta=0.5,
        due_time_s=33.0,
        eval_episodes=1,
        fixed=fixed,
    )
    return DeterministicInstance(sc)


def desk_instances() -> dict:
    return {
        "all-local": desk_instance_all_local(),
        "offload-all": desk_instance_offload_all(),
        "dead-sprint": desk_instance_dead_sprint(),
    }
