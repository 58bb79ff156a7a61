"""Command-line entry point.

Subcommands mirror the workflow: generate scenario batches, train an agent,
evaluate a checkpoint or the threshold baseline, sweep a hyperparameter
grid, and export plot-ready metrics.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from camlab.agent import RecurrentPolicy, TrainConfig, TrainingDivergenceError, evaluate
from camlab.conjunction import ScenarioGenerationError
from camlab.env import EnvConfig
from camlab.harness import (
    SUMMARY_WINDOW,
    evaluate_baseline,
    export_metrics,
    generate_scenario_batch,
    grid_search,
    load_grid_spec,
    load_scenario_config,
    load_scenarios,
    load_train_config,
    ranking_table,
    run_and_persist,
    summary_from_metrics_file,
)
from camlab.nets import CheckpointError, load_params
from camlab.textio import ParseError, save_record, write_table


def _cmd_generate(args) -> int:
    base = load_scenario_config(args.config) if args.config else None
    paths = generate_scenario_batch(args.count, args.seed, args.out, base_config=base)
    print(f"wrote {len(paths)} scenario files to {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = load_train_config(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.episodes is not None:
        cfg = replace(cfg, n_episodes=args.episodes)
    scenarios = load_scenarios(args.scenarios)
    _, metrics_path, checkpoint_path = run_and_persist(cfg, scenarios, args.out)
    summary = summary_from_metrics_file(metrics_path)
    print(f"trained {cfg.n_episodes} episodes on {len(scenarios[: cfg.n_environments])} scenario(s)")
    print(f"mean cumulative reward over final {SUMMARY_WINDOW} episodes: {summary}")
    print(f"metrics: {metrics_path}")
    print(f"checkpoint: {checkpoint_path}")
    return 0


def _cmd_evaluate(args) -> int:
    if (args.checkpoint is None) == (not args.baseline):
        raise ValueError("pass exactly one of --checkpoint or --baseline")
    scenarios = load_scenarios(args.scenarios)
    env_cfg = EnvConfig()
    if args.baseline:
        metrics = evaluate_baseline(scenarios, args.seeds, env_cfg=env_cfg, base_seed=args.seed)
        label = "baseline"
    else:
        params = load_params(args.checkpoint)
        policy = RecurrentPolicy(params)
        metrics = evaluate(policy, scenarios, args.seeds, env_cfg=env_cfg, base_seed=args.seed)
        label = str(args.checkpoint)
    record = {
        "policy": label,
        "n_rollouts": metrics.n_rollouts,
        "mean_cumulative_reward": metrics.mean_cumulative_reward,
        "std_cumulative_reward": metrics.std_cumulative_reward,
        "collision_rate": metrics.collision_rate,
        "mean_fuel_used": metrics.mean_fuel_used,
    }
    for key, value in record.items():
        print(f"{key} = {value}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_record(out_dir / "evaluation.txt", record)
        print(f"wrote {out_dir / 'evaluation.txt'}")
    return 0


def _cmd_sweep(args) -> int:
    spec = load_grid_spec(args.config)
    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    scenarios = load_scenarios(args.scenarios)
    records = grid_search(spec, scenarios, out_dir=args.out)
    header, rows = ranking_table(records)
    ranking_path = Path(args.out) / "ranking.csv"
    write_table(ranking_path, header, rows)
    best = records[0]
    print(f"ran {len(records)} grid runs; ranking written to {ranking_path}")
    print(
        f"best: cell {best.cell_index} rep {best.repetition} "
        f"summary {best.summary} (seed {best.config.rng_seed})"
    )
    return 0


def _cmd_export(args) -> int:
    export_metrics(args.metrics, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camlab",
        description="Conjunction-avoidance workbench: scenarios, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a batch of scenario files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, required=True, help="number of scenarios")
    p.add_argument("--seed", type=int, default=0, help="batch master seed")
    p.add_argument("--config", help="base scenario config file (optional)")
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("train", help="train an agent and persist the run")
    p.add_argument("--scenarios", required=True, help="scenario file or directory")
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--config", help="training config file (optional)")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--episodes", type=int, help="override n_episodes")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint or the baseline")
    p.add_argument("--scenarios", required=True, help="scenario file or directory")
    p.add_argument("--checkpoint", help="trained parameter checkpoint")
    p.add_argument("--baseline", action="store_true", help="use the threshold baseline")
    p.add_argument("--seeds", type=int, default=20, help="observation seeds per scenario")
    p.add_argument("--seed", type=int, default=0, help="base observation seed")
    p.add_argument("--out", help="directory for the evaluation record (optional)")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("sweep", help="grid-search hyperparameters")
    p.add_argument("--config", required=True, help="grid spec file")
    p.add_argument("--scenarios", required=True, help="scenario file or directory")
    p.add_argument("--out", required=True, help="sweep output directory")
    p.add_argument("--seed", type=int, help="override the grid master seed")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("export", help="write plot-ready metrics with moving averages")
    p.add_argument("--metrics", required=True, help="metrics.csv from a training run")
    p.add_argument("--out", required=True, help="output table path")
    p.set_defaults(handler=_cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (
        ParseError,
        ValueError,
        FileNotFoundError,
        ScenarioGenerationError,
        CheckpointError,
        TrainingDivergenceError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
