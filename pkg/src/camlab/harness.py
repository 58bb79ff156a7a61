"""Reproducibility surface: config files, metrics persistence, scenario
batches, and grid search.

Every run is reconstructible from its persisted config and seed: loading a
saved config and rerunning reproduces the saved metrics exactly on the same
build. Grid rankings are computed from the persisted metrics files, never
from in-memory copies.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from camlab.agent import TrainConfig, TrainingDivergenceError, TrainingMetrics, TrainResult, train
from camlab.conjunction import (
    ConjunctionScenario,
    ScenarioConfig,
    ScenarioGenerationError,
    generate_scenario,
    sample_scenario_config,
    save_scenario,
    scenario_config_from_record,
    scenario_config_to_record,
)
from camlab.env import EnvConfig
from camlab.nets import load_params, save_params
from camlab import textio

METRICS_HEADER = ["episode", "cumulative_reward", "mean_loss", "epsilon"]
SUMMARY_WINDOW = 20

TRAIN_CONFIG_FIELDS = tuple(f.name for f in dataclasses.fields(TrainConfig))
_INT_TRAIN_FIELDS = {
    "batch_size",
    "hidden_size",
    "n_episodes",
    "buffer_capacity",
    "n_environments",
    "epsilon_decay_episodes",
    "seq_len",
    "rng_seed",
}


def train_config_to_record(cfg: TrainConfig) -> dict:
    """Flat record of TrainConfig fields; an unset decay window is omitted."""
    record = {}
    for name in TRAIN_CONFIG_FIELDS:
        value = getattr(cfg, name)
        if value is None:
            continue
        record[name] = value
    return record


def train_config_from_record(record: dict) -> TrainConfig:
    """Build a TrainConfig from a record, rejecting unknown keys."""
    unknown = sorted(set(record) - set(TRAIN_CONFIG_FIELDS))
    if unknown:
        raise ValueError(f"unknown TrainConfig fields: {', '.join(unknown)}")
    return TrainConfig(**record)


def save_train_config(path, cfg: TrainConfig) -> None:
    textio.save_record(path, train_config_to_record(cfg))


def load_train_config(path) -> TrainConfig:
    return train_config_from_record(textio.load_record(path))


def save_scenario_config(path, cfg: ScenarioConfig) -> None:
    textio.save_record(path, scenario_config_to_record(cfg))


def load_scenario_config(path) -> ScenarioConfig:
    return scenario_config_from_record(textio.load_record(path))


def save_metrics(path, metrics: TrainingMetrics) -> None:
    """Persist per-episode metrics as a delimited table.

    Wall-clock durations are intentionally excluded so repeated runs of the
    same seed write byte-identical files.
    """
    rows = zip(metrics.episodes, metrics.cumulative_rewards, metrics.mean_losses, metrics.epsilons)
    textio.write_table(path, METRICS_HEADER, rows)


def load_metrics(path) -> TrainingMetrics:
    """Read a metrics table back; wall-clock columns are not persisted and
    load as zeros."""
    header, rows = textio.read_table(path)
    if header != METRICS_HEADER:
        raise textio.ParseError(f"unexpected metrics header {header}", 1)
    return TrainingMetrics(
        episodes=tuple(int(r["episode"]) for r in rows),
        cumulative_rewards=tuple(float(r["cumulative_reward"]) for r in rows),
        mean_losses=tuple(float(r["mean_loss"]) for r in rows),
        epsilons=tuple(float(r["epsilon"]) for r in rows),
        wall_clock=tuple(0.0 for _ in rows),
    )


def summary_from_metrics_file(path, window: int = SUMMARY_WINDOW) -> float:
    """Mean cumulative reward over the final `window` persisted episodes."""
    metrics = load_metrics(path)
    if not metrics.cumulative_rewards:
        return float("nan")
    tail = metrics.cumulative_rewards[-window:]
    return float(np.mean(tail))


def scenario_batch_seed(seed: int, index: int) -> np.random.Generator:
    """The generator that drives scenario `index` of a batch."""
    return np.random.default_rng([seed, index])


def generate_scenario_batch(
    n: int,
    seed: int,
    out_dir,
    base_config: ScenarioConfig | None = None,
) -> list[Path]:
    """Write n scenario files whose draws derive from (seed, index).

    With a base_config, every scenario shares its geometry settings and only
    the per-scenario seed varies; otherwise each config is drawn from the
    default distributions. Generation failures abort with the failing index.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for index in range(n):
        rng = scenario_batch_seed(seed, index)
        if base_config is None:
            cfg = sample_scenario_config(rng)
        else:
            cfg = replace(base_config, rng_seed=int(rng.integers(2**63)))
        try:
            scenario = generate_scenario(cfg)
        except ScenarioGenerationError as err:
            raise ScenarioGenerationError(f"scenario {index} of {n} failed: {err}") from err
        path = out_dir / f"scenario_{index:05d}.txt"
        save_scenario(path, scenario)
        paths.append(path)
    return paths


@dataclass(frozen=True)
class GridSpec:
    """A hyperparameter grid: field name -> candidate values.

    Cells enumerate the Cartesian product in lexicographic field order; each
    cell runs `repetitions` times with seeds derived from (master_seed,
    cell_index, repetition). Non-swept fields come from `base`.
    """

    grid: dict
    repetitions: int = 1
    master_seed: int = 0
    base: TrainConfig = TrainConfig()

    def __post_init__(self) -> None:
        if not self.grid:
            raise ValueError("grid must name at least one field")
        unknown = sorted(set(self.grid) - set(TRAIN_CONFIG_FIELDS))
        if unknown:
            raise ValueError(f"grid names unknown TrainConfig fields: {', '.join(unknown)}")
        for name, values in self.grid.items():
            if not values:
                raise ValueError(f"grid field {name!r} has no candidate values")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be at least 1, got {self.repetitions}")

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.grid))

    @property
    def n_cells(self) -> int:
        return int(np.prod([len(self.grid[name]) for name in self.field_names]))

    def cell(self, index: int) -> dict:
        """Field assignments of cell `index` in product order."""
        combos = list(itertools.product(*(self.grid[name] for name in self.field_names)))
        return dict(zip(self.field_names, combos[index]))


def derive_cell_seed(master_seed: int, cell_index: int, repetition: int) -> int:
    """Deterministic per-run seed; the formula is part of the file contract."""
    return master_seed * 1_000_003 + cell_index * 1_009 + repetition


def grid_spec_to_record(spec: GridSpec) -> dict:
    record = {
        "repetitions": spec.repetitions,
        "master_seed": spec.master_seed,
        "base": train_config_to_record(spec.base),
        "grid": {
            name: ",".join(textio._format_scalar(v) for v in values)
            for name, values in spec.grid.items()
        },
    }
    return record


def grid_spec_from_record(record: dict) -> GridSpec:
    try:
        raw_grid = record["grid"]
    except KeyError:
        raise ValueError("grid spec record missing 'grid' section") from None
    grid = {}
    for name, joined in raw_grid.items():
        parts = [p.strip() for p in str(joined).split(",") if p.strip()]
        values = [textio._parse_scalar(p) for p in parts]
        if name in _INT_TRAIN_FIELDS:
            values = [int(v) for v in values]
        grid[name] = tuple(values)
    base_record = record.get("base", {})
    return GridSpec(
        grid=grid,
        repetitions=record.get("repetitions", 1),
        master_seed=record.get("master_seed", 0),
        base=train_config_from_record(base_record) if base_record else TrainConfig(),
    )


def save_grid_spec(path, spec: GridSpec) -> None:
    textio.save_record(path, grid_spec_to_record(spec))


def load_grid_spec(path) -> GridSpec:
    return grid_spec_from_record(textio.load_record(path))


@dataclass(frozen=True)
class RunRecord:
    """One grid cell's outcome, summarized from its persisted metrics."""

    config: TrainConfig
    cell_index: int
    repetition: int
    summary: float
    failed: bool
    metrics_path: str | None
    checkpoint_path: str | None


def run_and_persist(cfg: TrainConfig, scenarios, out_dir, env_cfg=None) -> tuple[TrainResult, Path, Path]:
    """Train once and write config, metrics, and checkpoint under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = train(cfg, scenarios, env_cfg=env_cfg)
    config_path = out_dir / "config.txt"
    metrics_path = out_dir / "metrics.csv"
    checkpoint_path = out_dir / "checkpoint.npz"
    save_train_config(config_path, cfg)
    save_metrics(metrics_path, result.metrics)
    save_params(checkpoint_path, result.params)
    return result, metrics_path, checkpoint_path


def grid_search(
    spec: GridSpec,
    scenarios,
    out_dir=None,
    env_cfg: EnvConfig | None = None,
) -> list[RunRecord]:
    """Train every grid cell x repetition and rank by persisted summaries.

    Ranking is descending mean cumulative reward over the final
    SUMMARY_WINDOW episodes, computed from each run's metrics file. A run
    that diverges is recorded as failed and ranks last; it never aborts the
    sweep.
    """
    temp = None
    if out_dir is None:
        temp = tempfile.TemporaryDirectory()
        out_root = Path(temp.name)
        keep_paths = False
    else:
        out_root = Path(out_dir)
        keep_paths = True
    records = []
    try:
        for cell_index in range(spec.n_cells):
            overrides = spec.cell(cell_index)
            for repetition in range(spec.repetitions):
                seed = derive_cell_seed(spec.master_seed, cell_index, repetition)
                cfg = replace(spec.base, rng_seed=seed, **overrides)
                run_dir = out_root / f"cell_{cell_index:03d}_rep_{repetition:02d}"
                try:
                    _, metrics_path, checkpoint_path = run_and_persist(
                        cfg, scenarios, run_dir, env_cfg=env_cfg
                    )
                except TrainingDivergenceError:
                    records.append(
                        RunRecord(
                            config=cfg,
                            cell_index=cell_index,
                            repetition=repetition,
                            summary=float("nan"),
                            failed=True,
                            metrics_path=None,
                            checkpoint_path=None,
                        )
                    )
                    continue
                records.append(
                    RunRecord(
                        config=cfg,
                        cell_index=cell_index,
                        repetition=repetition,
                        summary=summary_from_metrics_file(metrics_path),
                        failed=False,
                        metrics_path=str(metrics_path) if keep_paths else None,
                        checkpoint_path=str(checkpoint_path) if keep_paths else None,
                    )
                )
    finally:
        if temp is not None:
            temp.cleanup()

    def rank_key(record: RunRecord):
        bad = record.failed or math.isnan(record.summary)
        return (1 if bad else 0, -record.summary if not bad else 0.0)

    return sorted(records, key=rank_key)


def ranking_table(records: list[RunRecord]) -> tuple[list[str], list[list]]:
    """Header and rows for persisting a grid ranking."""
    header = ["rank", "cell_index", "repetition", "summary", "failed", "rng_seed"]
    rows = []
    for rank, record in enumerate(records):
        rows.append(
            [
                rank,
                record.cell_index,
                record.repetition,
                record.summary,
                record.failed,
                record.config.rng_seed,
            ]
        )
    return header, rows


def export_metrics(metrics_path, out_path, window: int = SUMMARY_WINDOW) -> None:
    """Write a plot-ready table: raw metrics plus trailing moving averages."""
    metrics = load_metrics(metrics_path)
    rewards = np.array(metrics.cumulative_rewards)
    losses = np.array(metrics.mean_losses)
    header = METRICS_HEADER + [f"reward_ma{window}", f"loss_ma{window}"]
    rows = []
    for k in range(len(metrics.episodes)):
        lo = max(0, k - window + 1)
        reward_ma = float(np.mean(rewards[lo : k + 1]))
        tail_losses = losses[lo : k + 1]
        finite = tail_losses[np.isfinite(tail_losses)]
        loss_ma = float(np.mean(finite)) if finite.size else float("nan")
        rows.append(
            [
                metrics.episodes[k],
                metrics.cumulative_rewards[k],
                metrics.mean_losses[k],
                metrics.epsilons[k],
                reward_ma,
                loss_ma,
            ]
        )
    textio.write_table(out_path, header, rows)


def evaluate_baseline(scenarios, n_seeds: int, env_cfg=None, base_seed: int = 0):
    """Evaluate the threshold baseline across scenarios.

    The baseline policy is bound to one scenario at a time, so rollouts run
    per scenario and are pooled. Rollout k (scenario-major) uses observation
    seed base_seed + k, matching evaluate() on a single shared policy.
    """
    from camlab.agent import BaselinePolicy, EvalMetrics, evaluate

    rewards: list[float] = []
    collision_total = 0.0
    fuel_total = 0.0
    for index, scenario in enumerate(scenarios):
        policy = BaselinePolicy(scenario, env_cfg or EnvConfig())
        part = evaluate(
            policy,
            [scenario],
            n_seeds,
            env_cfg=env_cfg,
            base_seed=base_seed + index * n_seeds,
        )
        rewards.extend(part.cumulative_rewards)
        collision_total += part.collision_rate * part.n_rollouts
        fuel_total += part.mean_fuel_used * part.n_rollouts
    rewards_arr = np.array(rewards)
    return EvalMetrics(
        mean_cumulative_reward=float(np.mean(rewards_arr)),
        std_cumulative_reward=float(np.std(rewards_arr)),
        collision_rate=collision_total / len(rewards),
        mean_fuel_used=fuel_total / len(rewards),
        n_rollouts=len(rewards),
        cumulative_rewards=tuple(rewards),
    )


def load_scenarios(path) -> list[ConjunctionScenario]:
    """Load one scenario file or every scenario_*.txt in a directory."""
    from camlab.conjunction import load_scenario

    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("scenario_*.txt"))
        if not files:
            raise FileNotFoundError(f"no scenario_*.txt files in {path}")
        return [load_scenario(f) for f in files]
    return [load_scenario(path)]


def load_checkpoint(path):
    """Checkpoint loading re-exported where CLI users expect it."""
    return load_params(path)
