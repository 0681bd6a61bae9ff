"""Command-line front end for the experiment harness.

Subcommands: train, evaluate, sweep, oracle-gap, preset.  Config files are
JSON scenarios (see ``preset --paper-iv``); outputs are CSV plus a JSON
manifest.  The worker pool is capped by ORBIT_MEC_THREADS.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    SWEEP_AXES,
    evaluate_tables,
    oracle_gap,
    run_experiment,
    sweep,
    train_seed,
    topology_seed,
)
from .oracle import desk_instances
from .scenario import ConfigError, canonical_json, load_scenario, reference_setup


def _load_config(args):
    scenario = load_scenario(args.config)
    if getattr(args, "seed", None) is not None:
        scenario = replace(scenario, master_seed=args.seed)
    if getattr(args, "replications", None) is not None:
        scenario = replace(scenario, replications=args.replications)
    return scenario


def _add_common(parser):
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--replications", type=int, default=None)
    parser.add_argument("--episodes", type=int, default=None, help="training episodes per replication")
    parser.add_argument("--eval-episodes", type=int, default=None)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker pool size (default: ORBIT_MEC_THREADS or CPU count)")


def _cmd_train(args):
    scenario = _load_config(args)
    tags = [t for t in args.policy.split(",") if t]
    summary = run_experiment(scenario, tags, args.out, episodes=args.episodes,
                             replications=args.replications, eval_episodes=args.eval_episodes,
                             workers=args.workers)
    for tag in tags:
        st = summary.policies[tag]
        print(f"{tag}: t_mean {st.t_mean_mean_s:.6g} +- {st.t_mean_ci95_s:.3g} s "
              f"| moving {st.moving_mean_s:.6g} s | n={st.replications}")
    if args.save_tables:
        from .policies import parse_policy_tag
        from .qlearning import save_qtable, train as train_tables

        out = Path(args.out)
        for tag in tags:
            kind = parse_policy_tag(tag).kind
            if kind == "local":
                continue
            result = train_tables(scenario, seed=train_seed(scenario.master_seed, 0, tag),
                                  topology_seed=topology_seed(scenario.master_seed, 0),
                                  episodes=args.episodes)
            save_qtable(result.q1, out / f"{tag.replace(':', '_')}_q1.json", "offload")
            save_qtable(result.q2, out / f"{tag.replace(':', '_')}_q2.json", "velocity")
    return 0


def _cmd_evaluate(args):
    scenario = _load_config(args)
    metrics = evaluate_tables(scenario, args.q1, args.q2, episodes=args.eval_episodes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "evaluation.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(metrics, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"t_mean {metrics['t_mean_s']:.6g} s | moving {metrics['moving_time_s']:.6g} s "
          f"| episodes {metrics['episodes']}")
    return 0


def _cmd_sweep(args):
    scenario = _load_config(args)
    tags = [t for t in args.policy.split(",") if t]
    values = [float(v) for v in args.values.split(",") if v]
    sweep(scenario, args.axis, values, tags, args.out, episodes=args.episodes,
          replications=args.replications, eval_episodes=args.eval_episodes,
          workers=args.workers)
    print(f"swept {args.axis} over {values}; artifacts in {args.out}")
    return 0


def _cmd_oracle_gap(args):
    scenario = _load_config(args)
    report = oracle_gap(scenario, episodes=args.episodes, seed=args.seed or 0,
                        out_dir=args.out)
    print(f"policy t_mean {report.policy_t_mean_s:.6g} s | optimum "
          f"{report.optimum_t_mean_s:.6g} s | gap {report.gap * 100:.3f}%")
    return 0


def _cmd_preset(args):
    if args.desk is not None:
        names = list(desk_instances())
        try:
            instance = desk_instances()[names[args.desk - 1]]
        except IndexError:
            print(f"--desk must be 1..{len(names)}", file=sys.stderr)
            return 2
        text = canonical_json(instance.scenario)
    elif args.paper_iv:
        text = canonical_json(reference_setup())
    else:
        print("preset requires --paper-iv or --desk N", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbit-mec",
                                     description="coverage-chain offloading experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train/evaluate policies across replications")
    _add_common(p_train)
    p_train.add_argument("--policy", required=True,
                         help="comma list: proposed|conventional:<v>|local:<v>|greedy|case1|case2")
    p_train.add_argument("--save-tables", action="store_true",
                         help="also write replication-0 table snapshots per policy")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("evaluate", help="greedy evaluation of saved table snapshots")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--q1", required=True, help="offload table snapshot JSON")
    p_eval.add_argument("--q2", required=True, help="velocity table snapshot JSON")
    p_eval.add_argument("--eval-episodes", type=int, default=None)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="repeat an experiment along one parameter axis")
    _add_common(p_sweep)
    p_sweep.add_argument("--policy", required=True)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True, help="comma list of axis values")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_gap = sub.add_parser("oracle-gap", help="trained policy vs exact optimum on a fixed instance")
    p_gap.add_argument("--config", required=True, help="scenario JSON with a fixed section")
    p_gap.add_argument("--seed", type=int, default=None)
    p_gap.add_argument("--episodes", type=int, default=None)
    p_gap.add_argument("--out", default=None)
    p_gap.set_defaults(func=_cmd_oracle_gap)

    p_preset = sub.add_parser("preset", help="emit a ready-made scenario config")
    p_preset.add_argument("--paper-iv", action="store_true",
                          help="the reference 20-region setup")
    p_preset.add_argument("--desk", type=int, default=None,
                          help="deterministic desk instance 1..3")
    p_preset.add_argument("--out", default=None)
    p_preset.set_defaults(func=_cmd_preset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
