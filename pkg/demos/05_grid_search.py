"""Run a miniature hyperparameter grid search.

Sweeps two values of the soft update rate tau over one tiny training
configuration, persists per cell metrics and checkpoints to a scratch
directory, and prints the ranking table. The full sweep configuration
lives in a text file; see save_grid_spec / load_grid_spec and the
`sweep` subcommand.
"""

import tempfile

from camlab.agent import TrainConfig
from camlab.conjunction import ScenarioConfig, generate_scenario
from camlab.harness import GridSpec, grid_search, ranking_table
from camlab.orbits import KeplerianElements

PROTECTED = KeplerianElements(
    a=7.0e6, e=0.01, i=0.9, raan=0.4, argp=1.1, mean_anomaly=0.2
)


def main():
    scenario = generate_scenario(
        ScenarioConfig(
            start_time=0.0,
            end_time=7200.0,
            n_debris=1,
            sigma_pos=0.0,
            sigma_vr=0.02,
            theta_ranges=((0.1, 0.3), (0.1, 0.3)),
            protected_elements=PROTECTED,
            rng_seed=3,
        )
    )
    base = TrainConfig(
        batch_size=8,
        hidden_size=16,
        learning_rate=1e-3,
        n_episodes=8,
        buffer_capacity=200,
        seq_len=8,
    )
    spec = GridSpec(
        grid={"tau": (0.05, 0.5), "learning_rate": (1e-3, 1e-4)},
        repetitions=1,
        master_seed=0,
        base=base,
    )
    print(f"grid cells: {spec.n_cells}, fields swept: {spec.field_names}")

    with tempfile.TemporaryDirectory() as out_dir:
        records = grid_search(spec, [scenario], out_dir=out_dir)
        print()
        print("rank  cell  rep  summary      tau    learning_rate")
        for rank, rec in enumerate(records):
            print(
                f"{rank:4d} {rec.cell_index:5d} {rec.repetition:4d} "
                f"{rec.summary:9.1f} {rec.config.tau:8.2f} {rec.config.learning_rate:10.0e}"
            )
        table = ranking_table(records)
        print()
        print(f"ranking table columns: {table[0]}")
        print(f"best cell row: {table[1][0]}")


if __name__ == "__main__":
    main()
