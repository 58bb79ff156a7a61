"""Train a small recurrent Q network on one scenario.

Uses a reduced configuration (small hidden state, few episodes) so the
demo finishes in about a minute on a laptop. The full sized run uses
TrainConfig() defaults instead; see the README for the command line
equivalent.
"""

import numpy as np

from camlab.agent import (
    BaselinePolicy,
    RecurrentPolicy,
    TrainConfig,
    evaluate,
    train,
)
from camlab.conjunction import ScenarioConfig, generate_scenario
from camlab.env import EnvConfig
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
    cfg = TrainConfig(
        batch_size=16,
        hidden_size=32,
        learning_rate=1e-3,
        n_episodes=30,
        buffer_capacity=500,
        tau=0.1,
        seq_len=8,
        rng_seed=0,
    )
    print(f"training for {cfg.n_episodes} episodes, hidden size {cfg.hidden_size}")
    result = train(cfg, scenario)

    rewards = np.array(result.metrics.cumulative_rewards)
    losses = np.array(result.metrics.mean_losses)
    print()
    print("episode  reward      loss     epsilon")
    for k in range(0, cfg.n_episodes, 5):
        loss = losses[k]
        loss_text = f"{loss:8.3f}" if np.isfinite(loss) else "     n/a"
        print(
            f"{k:7d} {rewards[k]:9.1f} {loss_text} {result.metrics.epsilons[k]:9.3f}"
        )
    print(f"first 10 episodes, mean reward: {rewards[:10].mean():9.1f}")
    print(f"last 10 episodes, mean reward:  {rewards[-10:].mean():9.1f}")

    print()
    print("=== greedy policy vs threshold baseline (5 seeds) ===")
    agent_eval = evaluate(RecurrentPolicy(result.params), [scenario], n_seeds=5)
    base_eval = evaluate(
        BaselinePolicy(scenario, EnvConfig()), [scenario], n_seeds=5
    )
    print(
        f"agent:    mean reward {agent_eval.mean_cumulative_reward:9.1f}, "
        f"collision rate {agent_eval.collision_rate:.2f}"
    )
    print(
        f"baseline: mean reward {base_eval.mean_cumulative_reward:9.1f}, "
        f"collision rate {base_eval.collision_rate:.2f}"
    )
    print()
    print("a run this small usually has not converged yet; the defaults in")
    print("TrainConfig() are the configuration the package is validated with")


if __name__ == "__main__":
    main()
