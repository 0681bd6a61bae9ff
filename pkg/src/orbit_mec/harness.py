"""Experiment runner: seeded replications, worker pool, CSV/JSON artifacts.

Every emitted byte is a pure function of (config, master seed): seeds derive
from documented splits, workers return results that are aggregated in request
order, floats are written with shortest round-trip formatting, and manifests
carry no wall-clock state.  Partial runs resume from per-replication result
files recorded under the manifest's config hash.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import zlib
from dataclasses import dataclass, replace
from multiprocessing import Pool
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import stats as _scipy_stats

from . import __version__
from .delays import MigrationParams
from .oracle import DeterministicInstance, solve_exact
from .policies import run_policy
from .qlearning import greedy_policy_eval, load_qtable, moving_average
from .scenario import (
    ScenarioConfig,
    canonical_json,
    scenario_to_dict,
    with_data_increment,
)

MANIFEST_SCHEMA = "orbit-mec/manifest-1"
SWEEP_AXES = ("NCH", "rho", "theta", "deltaD")

SEED_SPLIT_DOC = (
    "topology=SeedSequence([master, rep, 0]); "
    "train=SeedSequence([master, rep, 1, crc32(tag)]); "
    "eval=SeedSequence([master, rep, 2, crc32(tag)])"
)


def topology_seed(master_seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, rep, 0])


def train_seed(master_seed: int, rep: int, tag: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, rep, 1, zlib.crc32(tag.encode())])


def eval_seed(master_seed: int, rep: int, tag: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, rep, 2, zlib.crc32(tag.encode())])


def config_hash(scenario: ScenarioConfig) -> str:
    return hashlib.sha256(canonical_json(scenario).encode()).hexdigest()


def worker_count(requested=None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("ORBIT_MEC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class PolicyStats(NamedTuple):
    tag: str
    replications: int
    t_mean_mean_s: float
    t_mean_std_s: float
    t_mean_ci95_s: float
    moving_mean_s: float
    moving_std_s: float
    moving_ci95_s: float


@dataclass
class MetricsSummary:
    policies: dict
    replications: int
    axis: str | None = None
    axis_value: float | None = None


def _stats_for(tag: str, t_means, movings) -> PolicyStats:
    n = len(t_means)

    def mean(xs):
        return math.fsum(xs) / len(xs)

    def std(xs):
        if len(xs) < 2:
            return 0.0
        m = mean(xs)
        return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1))

    def ci95(xs):
        if len(xs) < 2:
            return 0.0
        t_crit = float(_scipy_stats.t.ppf(0.975, len(xs) - 1))
        return t_crit * std(xs) / math.sqrt(len(xs))

    return PolicyStats(tag, n, mean(t_means), std(t_means), ci95(t_means),
                       mean(movings), std(movings), ci95(movings))


def _safe_tag(tag: str) -> str:
    return tag.replace(":", "_").replace("/", "_")


def _run_job(args):
    scenario, tag, rep, episodes, eval_episodes = args
    topo = topology_seed(scenario.master_seed, rep)
    result = run_policy(
        tag,
        scenario,
        train_seed=train_seed(scenario.master_seed, rep, tag),
        eval_seed=eval_seed(scenario.master_seed, rep, tag),
        topology_seed=topo,
        episodes=episodes,
        eval_episodes=eval_episodes,
    )
    return {
        "tag": tag,
        "replication": rep,
        "t_mean_s": result.t_mean_s,
        "moving_time_s": result.moving_time_s,
        "t_means": result.t_means,
        "moving_times": result.moving_times,
        "reward_series": result.reward_series,
        "illegal_actions": result.illegal_actions,
        "extras": _jsonable(result.extras),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        return obj
    return str(obj)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def run_experiment(scenario: ScenarioConfig, policy_tags, out_dir, *,
                   episodes=None, replications=None, eval_episodes=None,
                   workers=None, reward_window: int = 100) -> MetricsSummary:
    """Train/evaluate each policy across replications and write artifacts.

    Artifacts: reward_curves.csv (per-episode series with a moving average),
    replications.csv (raw per-replication metrics), summary.csv (aggregates),
    and manifest.json (config hash, seeds, versions).  Existing per-replication
    results under the same config hash are reused instead of recomputed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_dir = out / "results"
    results_dir.mkdir(exist_ok=True)
    policy_tags = list(policy_tags)
    reps = replications if replications is not None else scenario.replications
    digest = config_hash(scenario)

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config_hash": digest,
        "config": scenario_to_dict(scenario),
        "master_seed": scenario.master_seed,
        "policies": policy_tags,
        "replications": reps,
        "episodes": episodes if episodes is not None else scenario.hyper.episodes,
        "eval_episodes": eval_episodes if eval_episodes is not None else scenario.eval_episodes,
        "seed_split": SEED_SPLIT_DOC,
        "version": __version__,
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")

    run_key = {
        "config_hash": digest,
        "episodes": manifest["episodes"],
        "eval_episodes": manifest["eval_episodes"],
    }
    jobs = []
    cached = {}
    for tag in policy_tags:
        for rep in range(reps):
            path = results_dir / f"{_safe_tag(tag)}__rep{rep}.json"
            if path.exists():
                with open(path, "r", encoding="utf-8") as fh:
                    stored = json.load(fh)
                if all(stored.get(k) == v for k, v in run_key.items()):
                    cached[(tag, rep)] = stored["result"]
                    continue
            jobs.append((scenario, tag, rep, episodes, eval_episodes))

    n_workers = min(worker_count(workers), max(1, len(jobs)))
    if jobs:
        if n_workers > 1:
            with Pool(processes=n_workers) as pool:
                fresh = pool.map(_run_job, jobs)
        else:
            fresh = [_run_job(job) for job in jobs]
        for job, result in zip(jobs, fresh):
            _, tag, rep, _, _ = job
            path = results_dir / f"{_safe_tag(tag)}__rep{rep}.json"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                json.dump({**run_key, "result": result}, fh, sort_keys=True)
                fh.write("\n")
            cached[(tag, rep)] = result

    # Aggregate in request order so output bytes are reproducible.
    rep_rows = []
    reward_rows = []
    summary = {}
    for tag in policy_tags:
        t_means = []
        movings = []
        for rep in range(reps):
            result = cached[(tag, rep)]
            t_means.append(result["t_mean_s"])
            movings.append(result["moving_time_s"])
            rep_rows.append((tag, rep, result["t_mean_s"], result["moving_time_s"],
                             result["illegal_actions"]))
            series = result.get("reward_series")
            if series:
                avg = moving_average(series, reward_window)
                for episode, (raw, ma) in enumerate(zip(series, avg)):
                    reward_rows.append((tag, rep, episode, raw, ma))
        summary[tag] = _stats_for(tag, t_means, movings)

    _write_csv(out / "replications.csv",
               ["policy", "replication", "t_mean_s", "moving_time_s", "illegal_actions"],
               rep_rows)
    _write_csv(out / "reward_curves.csv",
               ["policy", "replication", "episode", "region_reward_mean", f"moving_avg_{reward_window}"],
               reward_rows)
    _write_csv(out / "summary.csv",
               ["policy", "replications", "t_mean_mean_s", "t_mean_std_s", "t_mean_ci95_s",
                "moving_mean_s", "moving_std_s", "moving_ci95_s"],
               [tuple(summary[tag]) for tag in policy_tags])
    return MetricsSummary(policies=summary, replications=reps)


def apply_axis(scenario: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Return the scenario with one swept parameter replaced."""
    if axis == "NCH":
        return replace(scenario, n_dead_regions=int(value))
    if axis == "rho":
        return replace(scenario, migration=MigrationParams(
            float(value), scenario.migration.cross_tier_cost_s))
    if axis == "theta":
        return replace(scenario, theta=float(value))
    if axis == "deltaD":
        return with_data_increment(scenario, float(value))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(scenario: ScenarioConfig, axis: str, values, policy_tags, out_dir, *,
          episodes=None, replications=None, eval_episodes=None, workers=None) -> list:
    """One experiment per axis value under a shared master seed stream.

    Writes each value's artifacts in its own subdirectory plus merged
    scatter.csv / sweep_summary.csv across values.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    policy_tags = list(policy_tags)
    summaries = []
    scatter_rows = []
    summary_rows = []
    for value in values:
        sub = out / f"{axis}_{value:g}"
        cfg = apply_axis(scenario, axis, value)
        summary = run_experiment(cfg, policy_tags, sub, episodes=episodes,
                                 replications=replications, eval_episodes=eval_episodes,
                                 workers=workers)
        summary.axis = axis
        summary.axis_value = float(value)
        summaries.append(summary)
        reps_path = sub / "replications.csv"
        with open(reps_path, "r", encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                tag, rep, t_mean, moving, _ = line.rstrip("\n").split(",")
                scatter_rows.append((tag, axis, float(value), int(rep),
                                     float(t_mean), float(moving)))
        for tag in policy_tags:
            st = summary.policies[tag]
            summary_rows.append((tag, axis, float(value), st.replications,
                                 st.t_mean_mean_s, st.t_mean_std_s,
                                 st.moving_mean_s, st.moving_std_s))
    _write_csv(out / "scatter.csv",
               ["policy", "axis", "value", "replication", "t_mean_s", "moving_time_s"],
               scatter_rows)
    _write_csv(out / "sweep_summary.csv",
               ["policy", "axis", "value", "replications", "t_mean_mean_s", "t_mean_std_s",
                "moving_mean_s", "moving_std_s"],
               summary_rows)
    return summaries


class GapReport(NamedTuple):
    policy_t_mean_s: float
    optimum_t_mean_s: float
    gap: float
    optimum_assignment: tuple
    monitor: dict


def oracle_gap(scenario: ScenarioConfig, *, episodes=None, seed: int = 0,
               out_dir=None) -> GapReport:
    """Train the joint scheme on a deterministic instance, evaluate greedily,
    and report the relative distance to the exact optimum."""
    instance = DeterministicInstance(scenario)
    optimum = solve_exact(instance)
    from .qlearning import train

    result = train(scenario, seed=np.random.SeedSequence([scenario.master_seed, seed, 1]),
                   topology_seed=np.random.SeedSequence([scenario.master_seed, seed, 0]),
                   episodes=episodes)
    ev = greedy_policy_eval(result.q1, result.q2, scenario,
                            seed=np.random.SeedSequence([scenario.master_seed, seed, 2]),
                            episodes=1,
                            topology_seed=np.random.SeedSequence([scenario.master_seed, seed, 0]))
    gap = (ev.mean_t_mean_s - optimum.t_mean_s) / optimum.t_mean_s
    report = GapReport(ev.mean_t_mean_s, optimum.t_mean_s, gap,
                       optimum.velocity_assignment, result.monitor.report())
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "policy_t_mean_s": report.policy_t_mean_s,
            "optimum_t_mean_s": report.optimum_t_mean_s,
            "gap": report.gap,
            "optimum_assignment": list(report.optimum_assignment),
            "config_hash": config_hash(scenario),
            "monitor": report.monitor,
        }
        with open(out / "oracle_gap.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return report


def evaluate_tables(scenario: ScenarioConfig, q1_path, q2_path, *, episodes=None,
                    rep: int = 0) -> dict:
    """Greedy evaluation of saved table snapshots on the scenario's topology."""
    q1, kind1 = load_qtable(q1_path)
    q2, kind2 = load_qtable(q2_path)
    if kind1 != "offload" or kind2 != "velocity":
        raise ValueError(f"expected offload+velocity snapshots, got {kind1}+{kind2}")
    ev = greedy_policy_eval(
        q1, q2, scenario,
        seed=eval_seed(scenario.master_seed, rep, "evaluate"),
        episodes=episodes if episodes is not None else scenario.eval_episodes,
        topology_seed=topology_seed(scenario.master_seed, rep),
    )
    return {
        "t_mean_s": ev.mean_t_mean_s,
        "moving_time_s": ev.mean_moving_time_s,
        "episodes": len(ev.t_means),
        "illegal_actions": ev.illegal_actions,
    }
