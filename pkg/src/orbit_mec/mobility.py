"""Trapezoidal velocity profiles across coverage regions.

A region is traversed by ramping from the entry velocity toward a target at
constant acceleration magnitude, then cruising at the target.  Travel time
has a closed form; the interval count is the number of whole offloading
periods that fit in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class InfeasiblePlanError(ValueError):
    """The region is too short to brake down to the requested target.

    Carries the slowest velocity actually reachable so callers can clamp.
    """

    def __init__(self, message: str, reachable_mps: float):
        super().__init__(message)
        self.reachable_mps = reachable_mps


@dataclass(frozen=True)
class VelocityPlan:
    entry_velocity_mps: float
    target_velocity_mps: float
    accel_mps2: float
    region_length_m: float
    interval_s: float = 1.0

    def __post_init__(self):
        if self.entry_velocity_mps <= 0 or self.target_velocity_mps <= 0:
            raise ValueError("velocities must be positive")
        if self.accel_mps2 <= 0:
            raise ValueError("accel_mps2 must be positive")
        if self.region_length_m <= 0:
            raise ValueError("region_length_m must be positive")
        if self.interval_s <= 0:
            raise ValueError("interval_s must be positive")


class RegionTraversal(NamedTuple):
    travel_time_s: float
    interval_count: int
    exit_velocity_mps: float


class FeasibilityResult(NamedTuple):
    feasible: bool
    resolved_target_mps: float


def instantaneous_velocity(plan: VelocityPlan, l: int) -> float:
    """Velocity during the l-th interval (1-based) of the region.

    The ramp advances by ``accel * interval_s`` per interval and clamps at
    the target; a plan already at its target stays constant.
    """
    if l < 1:
        raise ValueError(f"interval index must be >= 1, got {l}")
    v0 = plan.entry_velocity_mps
    goal = plan.target_velocity_mps
    step = plan.accel_mps2 * plan.interval_s * l
    if v0 < goal:
        return min(v0 + step, goal)
    if v0 > goal:
        return max(v0 - step, goal)
    return v0


def region_travel_time(plan: VelocityPlan) -> float:
    """Seconds to cross the region: ramp phase plus cruise at the target.

    Raises :class:`InfeasiblePlanError` when braking distance exceeds the
    region length, i.e. the target cannot be reached before the far edge.
    """
    v0 = plan.entry_velocity_mps
    goal = plan.target_velocity_mps
    c = plan.region_length_m
    a = plan.accel_mps2
    if v0 <= goal:
        return (c + (goal - v0) ** 2 / (2.0 * a)) / goal
    ramp_dist = (v0 - goal) ** 2 / (2.0 * a)
    if ramp_dist > c:
        reachable = math.sqrt(v0 * v0 - 2.0 * a * c)
        raise InfeasiblePlanError(
            f"region of {c} m is too short to brake from {v0} to {goal} m/s "
            f"(needs {ramp_dist:.6g} m); slowest reachable velocity is {reachable:.6g} m/s",
            reachable_mps=reachable,
        )
    return (c - ramp_dist) / goal


def interval_count(plan: VelocityPlan) -> int:
    """Whole offloading intervals during the traversal, at least 1."""
    t = region_travel_time(plan)
    return max(1, math.floor(t / plan.interval_s))


def feasibility_check(plan: VelocityPlan, velocity_set) -> FeasibilityResult:
    """Resolve a plan's target against the region geometry.

    Decelerations that cannot complete are clamped up to the slowest member
    of ``velocity_set`` that is reachable within the region; everything else
    is feasible as requested.
    """
    v0 = plan.entry_velocity_mps
    goal = plan.target_velocity_mps
    if v0 <= goal:
        return FeasibilityResult(True, goal)
    ramp_dist = (v0 - goal) ** 2 / (2.0 * plan.accel_mps2)
    if ramp_dist <= plan.region_length_m:
        return FeasibilityResult(True, goal)
    reachable = math.sqrt(v0 * v0 - 2.0 * plan.accel_mps2 * plan.region_length_m)
    candidates = [v for v in velocity_set if v >= reachable]
    if not candidates:
        # Entry velocity itself is always reachable (zero ramp).
        return FeasibilityResult(False, v0)
    return FeasibilityResult(False, min(candidates))


def traverse_region(plan: VelocityPlan, velocity_set) -> RegionTraversal:
    """Travel time, interval count, and exit velocity with clamping applied."""
    resolved = feasibility_check(plan, velocity_set)
    if resolved.resolved_target_mps != plan.target_velocity_mps:
        plan = VelocityPlan(
            plan.entry_velocity_mps,
            resolved.resolved_target_mps,
            plan.accel_mps2,
            plan.region_length_m,
            plan.interval_s,
        )
    t = region_travel_time(plan)
    return RegionTraversal(t, max(1, math.floor(t / plan.interval_s)), plan.target_velocity_mps)
