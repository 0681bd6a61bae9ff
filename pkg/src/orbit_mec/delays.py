"""Per-interval delay components of the offloading model.

All functions are pure and operate in SI units (seconds, bits, Hz, W, m).
A task is either computed on the robot (server id 0) or fully offloaded to
one edge server reached through the current coverage region's access point;
the two branches are mutually exclusive within an interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

TIER_NONE = "none"
TIER_CELLULAR = "cellular"
TIER_SATELLITE = "satellite"

LIGHT_SPEED_MPS = 2.998e8


class InvalidParameterError(ValueError):
    """A physical parameter is missing, non-finite, or out of range."""


class InfeasibleLinkError(ValueError):
    """An offload was requested over a link with zero capacity."""


class IllegalOffloadError(RuntimeError):
    """An offload was requested in a region with no usable channel."""


def _require_positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class RadioParams:
    """Radio-link description for one scenario.

    Cellular uplink/downlink share one Shannon-rate link; the satellite path
    is described by its two hop rates and the two hop distances, with the
    propagation delay counted once per direction.
    """

    bandwidth_hz: float
    tx_power_w: float
    channel_gain_sq: float
    noise_power_w: float
    sat_uplink_bps: float
    sat_downlink_bps: float
    sat_dist_gs_m: float
    sat_dist_se_m: float
    light_speed_mps: float = LIGHT_SPEED_MPS

    def __post_init__(self):
        for name in (
            "bandwidth_hz",
            "tx_power_w",
            "channel_gain_sq",
            "noise_power_w",
            "sat_uplink_bps",
            "sat_downlink_bps",
            "sat_dist_gs_m",
            "sat_dist_se_m",
            "light_speed_mps",
        ):
            _require_positive(name, getattr(self, name))
        if abs(self.light_speed_mps - LIGHT_SPEED_MPS) > 1e-3 * LIGHT_SPEED_MPS:
            raise InvalidParameterError(
                f"light_speed_mps must be within 0.1% of {LIGHT_SPEED_MPS}, got {self.light_speed_mps!r}"
            )


@dataclass(frozen=True)
class ComputeParams:
    """CPU-side description of one interval: workload density and frequencies.

    ``mec_cpu_hz`` may be omitted when the interval runs locally.
    """

    cycles_per_bit: float
    local_cpu_hz: float
    mec_cpu_hz: float | None = None

    def __post_init__(self):
        _require_positive("cycles_per_bit", self.cycles_per_bit)
        _require_positive("local_cpu_hz", self.local_cpu_hz)
        if self.mec_cpu_hz is not None:
            _require_positive("mec_cpu_hz", self.mec_cpu_hz)


@dataclass(frozen=True)
class TaskSpec:
    """One generated task: bits to upload and bits coming back."""

    upload_bits: float
    result_bits: float = 0.0

    def __post_init__(self):
        _require_positive("upload_bits", self.upload_bits)
        if not (math.isfinite(self.result_bits) and self.result_bits >= 0):
            raise InvalidParameterError(f"result_bits must be >= 0, got {self.result_bits!r}")


@dataclass(frozen=True)
class MigrationParams:
    """Service-migration cost model: a fraction of the current server's
    compute time per server change, plus a flat surcharge for changes that
    cross the cellular/satellite boundary."""

    migration_ratio: float
    cross_tier_cost_s: float

    def __post_init__(self):
        if not (0.0 <= self.migration_ratio <= 1.0):
            raise InvalidParameterError(f"migration_ratio must be in [0, 1], got {self.migration_ratio!r}")
        if not (math.isfinite(self.cross_tier_cost_s) and self.cross_tier_cost_s >= 0):
            raise InvalidParameterError(f"cross_tier_cost_s must be >= 0, got {self.cross_tier_cost_s!r}")


class OffloadTarget(NamedTuple):
    """Where one interval's task runs: server 0 is the robot itself."""

    server_id: int
    tier: str


LOCAL_TARGET = OffloadTarget(0, TIER_NONE)


def make_target(server_id: int, satellite_servers=()) -> OffloadTarget:
    """Build a validated target; non-local tier follows the server partition."""
    if server_id == 0:
        return LOCAL_TARGET
    if server_id < 0:
        raise InvalidParameterError(f"server_id must be >= 0, got {server_id}")
    tier = TIER_SATELLITE if server_id in satellite_servers else TIER_CELLULAR
    return OffloadTarget(server_id, tier)


def _validate_target(target: OffloadTarget):
    if target.server_id == 0:
        if target.tier != TIER_NONE:
            raise InvalidParameterError(f"local target must have tier 'none', got {target.tier!r}")
    elif target.tier not in (TIER_CELLULAR, TIER_SATELLITE):
        raise InvalidParameterError(f"server {target.server_id} must be cellular or satellite, got {target.tier!r}")


class DelayBreakdown(NamedTuple):
    """Per-interval delay components, all in seconds."""

    local_s: float
    com_s: float
    mec_s: float
    mig_s: float
    total_s: float


def local_delay(task: TaskSpec, compute: ComputeParams, target: OffloadTarget) -> float:
    """Seconds to compute the task on the robot; 0 when the task is offloaded."""
    _validate_target(target)
    _require_positive("local_cpu_hz", compute.local_cpu_hz)
    if target.server_id != 0:
        return 0.0
    return task.upload_bits * compute.cycles_per_bit / compute.local_cpu_hz


def cellular_rate(radio: RadioParams) -> float:
    """Shannon rate of the cellular link in bits per second.

    Zero transmit power is allowed here (rate 0); offloading over a zero-rate
    link is rejected by :func:`cellular_com_delay`.
    """
    snr = radio.tx_power_w * radio.channel_gain_sq / radio.noise_power_w
    return radio.bandwidth_hz * math.log2(1.0 + snr)


def cellular_com_delay(task: TaskSpec, radio: RadioParams, target: OffloadTarget) -> float:
    """Round-trip transfer time over the cellular link; 0 when local."""
    _validate_target(target)
    if target.server_id == 0:
        return 0.0
    rate = cellular_rate(radio)
    if rate <= 0.0:
        raise InfeasibleLinkError("cellular rate is zero; cannot offload over this link")
    return (task.upload_bits + task.result_bits) / rate


def satellite_com_delay(task: TaskSpec, radio: RadioParams, target: OffloadTarget) -> float:
    """Round-trip transfer time over the two-hop satellite path; 0 when local.

    Counts the robot-satellite and satellite-ground propagation once per
    direction plus the serialization time of both hops.
    """
    _validate_target(target)
    if target.server_id == 0:
        return 0.0
    if radio.sat_uplink_bps <= 0.0 or radio.sat_downlink_bps <= 0.0:
        raise InfeasibleLinkError("satellite hop rate is zero; cannot offload over this link")
    propagation = 2.0 * (radio.sat_dist_gs_m + radio.sat_dist_se_m) / radio.light_speed_mps
    serialization = (task.upload_bits + task.result_bits) * (
        1.0 / radio.sat_uplink_bps + 1.0 / radio.sat_downlink_bps
    )
    return propagation + serialization


def mec_delay(task: TaskSpec, compute: ComputeParams, target: OffloadTarget) -> float:
    """Seconds the selected edge server spends computing the task; 0 when local."""
    _validate_target(target)
    if target.server_id == 0:
        return 0.0
    if compute.mec_cpu_hz is None:
        raise InvalidParameterError(f"no MEC frequency configured for offload target {target.server_id}")
    return task.upload_bits * compute.cycles_per_bit / compute.mec_cpu_hz


def migration_delay(
    prev: OffloadTarget, curr: OffloadTarget, mec_s: float, mig: MigrationParams
) -> float:
    """Service-migration seconds charged in the current interval.

    A server change touching at least one cellular server costs a fraction of
    the current interval's server compute time; any cellular/satellite
    crossing additionally costs the flat cross-tier surcharge.  Changes
    between two satellite servers are free under this rule.
    """
    _validate_target(prev)
    _validate_target(curr)
    cost = 0.0
    changed = prev.server_id != curr.server_id
    any_server = prev.server_id != 0 or curr.server_id != 0
    touches_cellular = prev.tier == TIER_CELLULAR or curr.tier == TIER_CELLULAR
    if changed and any_server and touches_cellular:
        cost += mig.migration_ratio * mec_s
    crosses = (prev.tier == TIER_CELLULAR and curr.tier == TIER_SATELLITE) or (
        prev.tier == TIER_SATELLITE and curr.tier == TIER_CELLULAR
    )
    if crosses:
        cost += mig.cross_tier_cost_s
    return cost


def interval_delay(
    task: TaskSpec,
    radio: RadioParams,
    compute: ComputeParams,
    migration: MigrationParams,
    prev: OffloadTarget,
    target: OffloadTarget,
    region_tier: str,
    channel_available: int,
) -> DelayBreakdown:
    """Full completion-time breakdown for one interval.

    The communication path is the current region's access tier regardless of
    where the selected server sits (servers interconnect over wired backhaul).
    Offloading with ``channel_available == 0`` raises
    :class:`IllegalOffloadError`; the caller decides how to absorb it.
    """
    if channel_available not in (0, 1):
        raise InvalidParameterError(f"channel_available must be 0 or 1, got {channel_available!r}")
    if target.server_id != 0 and channel_available == 0:
        raise IllegalOffloadError(
            f"cannot offload to server {target.server_id}: no channel available in this region"
        )
    t_local = local_delay(task, compute, target)
    if target.server_id == 0:
        return DelayBreakdown(t_local, 0.0, 0.0, 0.0, t_local)
    if region_tier == TIER_CELLULAR:
        t_com = cellular_com_delay(task, radio, target)
    elif region_tier == TIER_SATELLITE:
        t_com = satellite_com_delay(task, radio, target)
    else:
        raise InvalidParameterError(f"region_tier must be cellular or satellite, got {region_tier!r}")
    t_mec = mec_delay(task, compute, target)
    t_mig = migration_delay(prev, target, t_mec, migration)
    return DelayBreakdown(t_local, t_com, t_mec, t_mig, t_local + t_com + t_mec + t_mig)
