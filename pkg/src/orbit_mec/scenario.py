"""Scenario configuration: region chain, radio/compute constants, learning
hyperparameters, and the JSON config format used by the CLI.

A scenario describes distributions (draw sets); a concrete topology is drawn
per replication.  Deterministic instances pin every draw through ``fixed``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .delays import (
    TIER_CELLULAR,
    TIER_SATELLITE,
    MigrationParams,
    RadioParams,
)

CONFIG_SCHEMA = "orbit-mec/scenario-1"


class ConfigError(ValueError):
    """Configuration rejected; the message carries a ``$.path`` diagnostic."""


class RegionDescriptor(NamedTuple):
    """One concrete coverage region with its co-located edge server."""

    region_id: int
    tier: str
    length_m: float
    channel_available: int
    mec_cpu_hz: float


@dataclass(frozen=True)
class Hyperparams:
    """Learning constants; exploration decays linearly to a floor of zero.

    ``epsilon_decay_unit`` selects whether the decay applies once per episode
    (default; 4e-6 over a 10k-episode run ends near 0.01) or once per interval
    step (which extinguishes exploration within a handful of episodes on
    region chains of realistic length).
    """

    learning_rate: float = 0.1
    discount: float = 0.9
    epsilon: float = 0.05
    epsilon_decay: float = 4e-6
    epsilon_decay_unit: str = "episode"
    episodes: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.learning_rate < 1.0):
            raise ConfigError(f"$.hyper.learning_rate: must be in (0, 1), got {self.learning_rate!r}")
        if not (0.0 <= self.discount < 1.0):
            raise ConfigError(f"$.hyper.discount: must be in [0, 1), got {self.discount!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError(f"$.hyper.epsilon: must be in [0, 1], got {self.epsilon!r}")
        if self.epsilon_decay < 0:
            raise ConfigError("$.hyper.epsilon_decay: must be >= 0")
        if self.epsilon_decay_unit not in ("episode", "step"):
            raise ConfigError(
                f"$.hyper.epsilon_decay_unit: must be 'episode' or 'step', got {self.epsilon_decay_unit!r}")
        if self.episodes < 1:
            raise ConfigError("$.hyper.episodes: must be >= 1")


@dataclass(frozen=True)
class FixedDraws:
    """Pinned topology and per-interval draws for a deterministic instance.

    ``data_bits[n][l]`` and ``local_cpu_hz[n][l]`` give the draw for interval
    l (0-based) of region n+1; sequences must cover the slowest traversal.
    """

    regions: tuple[RegionDescriptor, ...]
    data_bits: tuple[tuple[float, ...], ...]
    local_cpu_hz: tuple[tuple[float, ...], ...]


def _reference_radio() -> RadioParams:
    return RadioParams(
        bandwidth_hz=1e7,
        tx_power_w=0.2,
        channel_gain_sq=1e-6,
        noise_power_w=2e-12,
        sat_uplink_bps=1e7,
        sat_downlink_bps=1e8,
        sat_dist_gs_m=1e6,
        sat_dist_se_m=1e6,
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete experiment description.

    Defaults reproduce the reference simulation setup: a 20-region chain with
    a satellite stretch in the middle, kilobyte-scale tasks each second, and
    a velocity range of 5-20 m/s.
    """

    n_regions: int = 20
    satellite_regions: tuple[int, ...] = tuple(range(8, 14))
    cellular_length_set_m: tuple[float, ...] = (100.0, 200.0, 300.0)
    satellite_length_set_m: tuple[float, ...] = (1000.0, 2000.0, 3000.0)
    cellular_mec_hz_set: tuple[float, ...] = tuple(float(g) * 1e9 for g in range(10, 20))
    satellite_mec_hz_set: tuple[float, ...] = tuple(float(g) * 1e9 for g in range(50, 60))
    n_dead_regions: int = 4
    radio: RadioParams = field(default_factory=_reference_radio)
    cycles_per_bit: float = 800.0
    data_bits_set: tuple[float, ...] = (8e5, 2e6, 3.2e6, 4.4e6, 5.6e6)
    local_cpu_hz_set: tuple[float, ...] = (0.5e9, 0.6e9, 0.7e9, 0.8e9, 0.9e9, 1.0e9)
    result_ratio: float = 0.1
    migration: MigrationParams = field(default_factory=lambda: MigrationParams(0.1, 0.5))
    velocity_set_mps: tuple[float, ...] = tuple(float(v) for v in range(5, 21))
    accel_mps2: float = 2.0
    interval_s: float = 1.0
    initial_velocity_mps: float = 10.0
    theta: float = 0.1
    due_time_s: float | None = None
    hyper: Hyperparams = field(default_factory=Hyperparams)
    replications: int = 20
    eval_episodes: int = 1000
    master_seed: int = 0
    fixed: FixedDraws | None = None

    def __post_init__(self):
        if self.n_regions < 1:
            raise ConfigError("$.n_regions: must be >= 1")
        for rid in self.satellite_regions:
            if not (1 <= rid <= self.n_regions):
                raise ConfigError(f"$.satellite_regions: region id {rid} outside 1..{self.n_regions}")
        for name in ("cellular_length_set_m", "satellite_length_set_m", "cellular_mec_hz_set",
                     "satellite_mec_hz_set", "data_bits_set", "local_cpu_hz_set", "velocity_set_mps"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"$.{name}: draw set must be non-empty")
            if any(v <= 0 for v in values):
                raise ConfigError(f"$.{name}: all values must be positive")
        if not (0 <= self.n_dead_regions <= self.n_regions):
            raise ConfigError(f"$.n_dead_regions: must be in 0..{self.n_regions}")
        if not (0.0 <= self.result_ratio):
            raise ConfigError("$.result_ratio: must be >= 0")
        if not (0.0 <= self.theta < 1.0):
            raise ConfigError(f"$.theta: must be in [0, 1), got {self.theta!r}")
        if self.accel_mps2 <= 0:
            raise ConfigError("$.accel_mps2: must be positive")
        if self.interval_s <= 0:
            raise ConfigError("$.interval_s: must be positive")
        if self.initial_velocity_mps <= 0:
            raise ConfigError("$.initial_velocity_mps: must be positive")
        if self.due_time_s is not None and self.due_time_s <= 0:
            raise ConfigError("$.due_time_s: must be positive when set")
        if self.replications < 1:
            raise ConfigError("$.replications: must be >= 1")
        if self.eval_episodes < 1:
            raise ConfigError("$.eval_episodes: must be >= 1")
        if self.fixed is not None:
            self._validate_fixed()

    def _validate_fixed(self):
        fx = self.fixed
        if len(fx.regions) != self.n_regions:
            raise ConfigError(
                f"$.fixed.regions: expected {self.n_regions} regions, got {len(fx.regions)}"
            )
        sat = set(self.satellite_regions)
        for i, region in enumerate(fx.regions):
            if region.region_id != i + 1:
                raise ConfigError(f"$.fixed.regions[{i}].region_id: must be {i + 1}")
            want = TIER_SATELLITE if region.region_id in sat else TIER_CELLULAR
            if region.tier != want:
                raise ConfigError(
                    f"$.fixed.regions[{i}].tier: {region.tier!r} conflicts with satellite_regions"
                )
            if region.channel_available not in (0, 1):
                raise ConfigError(f"$.fixed.regions[{i}].channel_available: must be 0 or 1")
            if region.length_m <= 0 or region.mec_cpu_hz <= 0:
                raise ConfigError(f"$.fixed.regions[{i}]: lengths and frequencies must be positive")
        if len(fx.data_bits) != self.n_regions or len(fx.local_cpu_hz) != self.n_regions:
            raise ConfigError("$.fixed: one draw sequence per region is required")
        v_min = min(self.velocity_set_mps)
        for i, region in enumerate(fx.regions):
            need = max(1, math.floor(region.length_m / v_min / self.interval_s))
            for name, seq in (("data_bits", fx.data_bits[i]), ("local_cpu_hz", fx.local_cpu_hz[i])):
                if len(seq) < need:
                    raise ConfigError(
                        f"$.fixed.{name}[{i}]: needs at least {need} values to cover the slowest "
                        f"traversal, got {len(seq)}"
                    )
                if any(v <= 0 for v in seq):
                    raise ConfigError(f"$.fixed.{name}[{i}]: all values must be positive")

    # -- derived quantities ------------------------------------------------

    def tier_of(self, region_id: int) -> str:
        return TIER_SATELLITE if region_id in self.satellite_regions else TIER_CELLULAR

    def expected_chain_length_m(self) -> float:
        total = 0.0
        for rid in range(1, self.n_regions + 1):
            lengths = (
                self.satellite_length_set_m
                if self.tier_of(rid) == TIER_SATELLITE
                else self.cellular_length_set_m
            )
            total += sum(lengths) / len(lengths)
        return total

    def resolved_due_time_s(self) -> float:
        """Journey budget; defaults to the expected chain length at the
        midpoint of the velocity range."""
        if self.due_time_s is not None:
            return self.due_time_s
        midpoint = (min(self.velocity_set_mps) + max(self.velocity_set_mps)) / 2.0
        if self.fixed is not None:
            total = sum(r.length_m for r in self.fixed.regions)
        else:
            total = self.expected_chain_length_m()
        return total / midpoint


def reference_setup() -> ScenarioConfig:
    """The reference simulation setup with all defaults spelled out."""
    return ScenarioConfig()


# -- JSON round trip --------------------------------------------------------


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    d = {
        "schema": CONFIG_SCHEMA,
        "n_regions": cfg.n_regions,
        "satellite_regions": list(cfg.satellite_regions),
        "cellular_length_set_m": list(cfg.cellular_length_set_m),
        "satellite_length_set_m": list(cfg.satellite_length_set_m),
        "cellular_mec_hz_set": list(cfg.cellular_mec_hz_set),
        "satellite_mec_hz_set": list(cfg.satellite_mec_hz_set),
        "n_dead_regions": cfg.n_dead_regions,
        "radio": {
            "bandwidth_hz": cfg.radio.bandwidth_hz,
            "tx_power_w": cfg.radio.tx_power_w,
            "channel_gain_sq": cfg.radio.channel_gain_sq,
            "noise_power_w": cfg.radio.noise_power_w,
            "sat_uplink_bps": cfg.radio.sat_uplink_bps,
            "sat_downlink_bps": cfg.radio.sat_downlink_bps,
            "sat_dist_gs_m": cfg.radio.sat_dist_gs_m,
            "sat_dist_se_m": cfg.radio.sat_dist_se_m,
            "light_speed_mps": cfg.radio.light_speed_mps,
        },
        "cycles_per_bit": cfg.cycles_per_bit,
        "data_bits_set": list(cfg.data_bits_set),
        "local_cpu_hz_set": list(cfg.local_cpu_hz_set),
        "result_ratio": cfg.result_ratio,
        "migration": {
            "migration_ratio": cfg.migration.migration_ratio,
            "cross_tier_cost_s": cfg.migration.cross_tier_cost_s,
        },
        "velocity_set_mps": list(cfg.velocity_set_mps),
        "accel_mps2": cfg.accel_mps2,
        "interval_s": cfg.interval_s,
        "initial_velocity_mps": cfg.initial_velocity_mps,
        "theta": cfg.theta,
        "due_time_s": cfg.due_time_s,
        "hyper": {
            "learning_rate": cfg.hyper.learning_rate,
            "discount": cfg.hyper.discount,
            "epsilon": cfg.hyper.epsilon,
            "epsilon_decay": cfg.hyper.epsilon_decay,
            "epsilon_decay_unit": cfg.hyper.epsilon_decay_unit,
            "episodes": cfg.hyper.episodes,
        },
        "replications": cfg.replications,
        "eval_episodes": cfg.eval_episodes,
        "master_seed": cfg.master_seed,
    }
    if cfg.fixed is not None:
        d["fixed"] = {
            "regions": [
                {
                    "region_id": r.region_id,
                    "tier": r.tier,
                    "length_m": r.length_m,
                    "channel_available": r.channel_available,
                    "mec_cpu_hz": r.mec_cpu_hz,
                }
                for r in cfg.fixed.regions
            ],
            "data_bits": [list(seq) for seq in cfg.fixed.data_bits],
            "local_cpu_hz": [list(seq) for seq in cfg.fixed.local_cpu_hz],
        }
    return d


def _get(d: dict, key: str, kind, path: str, default=None, required=True):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    value = d[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def scenario_from_dict(d: dict) -> ScenarioConfig:
    if not isinstance(d, dict):
        raise ConfigError("$: config must be a JSON object")
    schema = d.get("schema")
    if schema != CONFIG_SCHEMA:
        raise ConfigError(f"$.schema: expected {CONFIG_SCHEMA!r}, got {schema!r}")

    def seq(key, path="$"):
        value = d.get(key)
        if not isinstance(value, list):
            raise ConfigError(f"{path}.{key}: expected a list")
        return tuple(float(v) for v in value)

    radio_d = d.get("radio")
    if not isinstance(radio_d, dict):
        raise ConfigError("$.radio: expected an object")
    try:
        radio = RadioParams(
            bandwidth_hz=_get(radio_d, "bandwidth_hz", float, "$.radio"),
            tx_power_w=_get(radio_d, "tx_power_w", float, "$.radio"),
            channel_gain_sq=_get(radio_d, "channel_gain_sq", float, "$.radio"),
            noise_power_w=_get(radio_d, "noise_power_w", float, "$.radio"),
            sat_uplink_bps=_get(radio_d, "sat_uplink_bps", float, "$.radio"),
            sat_downlink_bps=_get(radio_d, "sat_downlink_bps", float, "$.radio"),
            sat_dist_gs_m=_get(radio_d, "sat_dist_gs_m", float, "$.radio"),
            sat_dist_se_m=_get(radio_d, "sat_dist_se_m", float, "$.radio"),
            light_speed_mps=_get(radio_d, "light_speed_mps", float, "$.radio", default=2.998e8, required=False),
        )
    except ValueError as exc:
        raise ConfigError(f"$.radio: {exc}") from exc

    mig_d = d.get("migration")
    if not isinstance(mig_d, dict):
        raise ConfigError("$.migration: expected an object")
    try:
        migration = MigrationParams(
            migration_ratio=_get(mig_d, "migration_ratio", float, "$.migration"),
            cross_tier_cost_s=_get(mig_d, "cross_tier_cost_s", float, "$.migration"),
        )
    except ValueError as exc:
        raise ConfigError(f"$.migration: {exc}") from exc

    hyper_d = d.get("hyper")
    if not isinstance(hyper_d, dict):
        raise ConfigError("$.hyper: expected an object")
    hyper = Hyperparams(
        learning_rate=_get(hyper_d, "learning_rate", float, "$.hyper"),
        discount=_get(hyper_d, "discount", float, "$.hyper"),
        epsilon=_get(hyper_d, "epsilon", float, "$.hyper"),
        epsilon_decay=_get(hyper_d, "epsilon_decay", float, "$.hyper"),
        epsilon_decay_unit=_get(hyper_d, "epsilon_decay_unit", str, "$.hyper",
                                default="episode", required=False),
        episodes=_get(hyper_d, "episodes", int, "$.hyper"),
    )

    fixed = None
    if d.get("fixed") is not None:
        fx = d["fixed"]
        if not isinstance(fx, dict):
            raise ConfigError("$.fixed: expected an object")
        rows = fx.get("regions")
        if not isinstance(rows, list):
            raise ConfigError("$.fixed.regions: expected a list")
        regions = []
        for i, row in enumerate(rows):
            path = f"$.fixed.regions[{i}]"
            if not isinstance(row, dict):
                raise ConfigError(f"{path}: expected an object")
            regions.append(
                RegionDescriptor(
                    region_id=_get(row, "region_id", int, path),
                    tier=_get(row, "tier", str, path),
                    length_m=_get(row, "length_m", float, path),
                    channel_available=_get(row, "channel_available", int, path),
                    mec_cpu_hz=_get(row, "mec_cpu_hz", float, path),
                )
            )
        bits = fx.get("data_bits")
        cpus = fx.get("local_cpu_hz")
        if not isinstance(bits, list) or not isinstance(cpus, list):
            raise ConfigError("$.fixed.data_bits / $.fixed.local_cpu_hz: expected lists")
        fixed = FixedDraws(
            regions=tuple(regions),
            data_bits=tuple(tuple(float(v) for v in seq) for seq in bits),
            local_cpu_hz=tuple(tuple(float(v) for v in seq) for seq in cpus),
        )

    due = d.get("due_time_s")
    if due is not None:
        due = float(due)

    return ScenarioConfig(
        n_regions=_get(d, "n_regions", int, "$"),
        satellite_regions=tuple(int(v) for v in d.get("satellite_regions", [])),
        cellular_length_set_m=seq("cellular_length_set_m"),
        satellite_length_set_m=seq("satellite_length_set_m"),
        cellular_mec_hz_set=seq("cellular_mec_hz_set"),
        satellite_mec_hz_set=seq("satellite_mec_hz_set"),
        n_dead_regions=_get(d, "n_dead_regions", int, "$"),
        radio=radio,
        cycles_per_bit=_get(d, "cycles_per_bit", float, "$"),
        data_bits_set=seq("data_bits_set"),
        local_cpu_hz_set=seq("local_cpu_hz_set"),
        result_ratio=_get(d, "result_ratio", float, "$"),
        migration=migration,
        velocity_set_mps=seq("velocity_set_mps"),
        accel_mps2=_get(d, "accel_mps2", float, "$"),
        interval_s=_get(d, "interval_s", float, "$"),
        initial_velocity_mps=_get(d, "initial_velocity_mps", float, "$"),
        theta=_get(d, "theta", float, "$"),
        due_time_s=due,
        hyper=hyper,
        replications=_get(d, "replications", int, "$"),
        eval_episodes=_get(d, "eval_episodes", int, "$"),
        master_seed=_get(d, "master_seed", int, "$"),
        fixed=fixed,
    )


def canonical_json(cfg: ScenarioConfig) -> str:
    """Stable serialization used both for files and for config hashing."""
    return json.dumps(scenario_to_dict(cfg), sort_keys=True, indent=2) + "\n"


def save_scenario(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(cfg))


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"$: not valid JSON ({exc})") from exc
    return scenario_from_dict(data)


def with_data_increment(cfg: ScenarioConfig, delta_mb: float) -> ScenarioConfig:
    """Shift every task-size draw by a fixed increment (megabytes)."""
    delta_bits = delta_mb * 8e6
    return replace(cfg, data_bits_set=tuple(v + delta_bits for v in cfg.data_bits_set))
