"""Simulator and learning engine for a robot that crosses a chain of
cellular/satellite coverage regions while offloading periodic compute tasks
to edge servers.

The library provides the delay algebra of one offloading interval, the
trapezoidal velocity kinematics of one region, an episodic environment that
composes them, a dual-table Q-learning scheme (per-interval offloading agent
plus per-region velocity agent) with baselines and rule ablations, an exact
solver for deterministic desk-scale instances, and an experiment harness with
seeded replications and CSV/JSON artifacts.

Start with :func:`orbit_mec.scenario.reference_setup` for the reference setup or
the scripts under ``demos/`` for narrative walkthroughs.
"""

__version__ = "0.1.0"

from .delays import (
    ComputeParams,
    DelayBreakdown,
    MigrationParams,
    OffloadTarget,
    RadioParams,
    TaskSpec,
    cellular_com_delay,
    cellular_rate,
    interval_delay,
    local_delay,
    mec_delay,
    migration_delay,
    satellite_com_delay,
)
from .environment import Environment, OffloadState, VelocityState
from .mobility import (
    RegionTraversal,
    VelocityPlan,
    feasibility_check,
    instantaneous_velocity,
    interval_count,
    region_travel_time,
)
from .oracle import DeterministicInstance, desk_instances, solve_exact, solve_region_exact
from .qlearning import (
    ConvergenceMonitor,
    Hyperparams,
    QTable,
    greedy_policy_eval,
    select_action,
    train,
    update_offload,
    update_velocity,
)
from .rewards import RewardParams, instant_reward, region_reward
from .scenario import RegionDescriptor, ScenarioConfig, load_scenario, reference_setup, save_scenario
