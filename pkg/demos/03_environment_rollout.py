"""Step through the collision avoidance environment by hand.

Shows the observation layout, the action encoding, and the reward
breakdown for three policies on the same scenario: coasting, a single
early prograde burn, and the threshold baseline that burns whenever
the predicted collision probability is above threshold.
"""

from camlab.agent import BaselinePolicy, ConstantPolicy, run_episode
from camlab.conjunction import ScenarioConfig, generate_scenario
from camlab.env import ConjunctionEnv, EnvConfig, decode_action, encode_action
from camlab.orbits import KeplerianElements

PROTECTED = KeplerianElements(
    a=7.0e6, e=0.01, i=0.9, raan=0.4, argp=1.1, mean_anomaly=0.2
)


def describe(label, rollout):
    print(
        f"{label:12s} reward={rollout.cumulative_reward:10.1f}  "
        f"fuel={rollout.fuel_used:5.2f}  collided={rollout.collided}  "
        f"steps={len(rollout.experiences)}"
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
    env_cfg = EnvConfig()
    print(f"debris collision time: {scenario.debris[0].collision_time:.1f} s")

    print()
    print("=== 1. Action encoding ===")
    action = encode_action(3, 0, 0, 0)
    print(f"burn 0.1*dv_scale along +x in slot 0 -> action index {action}")
    print(f"decode_action({action}) = {decode_action(action)}")
    print(f"decode_action(0) = {decode_action(0)} (coast)")

    print()
    print("=== 2. One observed step ===")
    env = ConjunctionEnv(scenario, env_cfg, observation_seed=0)
    obs = env.reset()
    print(f"fuel fraction  {obs.fuel_fraction:.3f}")
    print(f"time fraction  {obs.time_fraction:.3f}")
    print(f"tracked debris {sum(p is not None for p in obs.debris_pos)}")
    obs, reward, done, info = env.step(0)
    print(
        f"coast step: collision={reward.collision_penalty:.2f} "
        f"fuel={reward.fuel_penalty:.2f} deviation={reward.deviation_penalty:.2f} "
        f"total={reward.total:.2f}"
    )
    print(f"max collision probability this step: {info['max_collision_probability']:.3e}")

    print()
    print("=== 3. Three policies on the same scenario ===")

    class OneBurnPolicy:
        """Burn once at the first step, then coast."""

        def __init__(self):
            self.fired = False

        def reset(self):
            self.fired = False

        def act(self, observation):
            if self.fired:
                return 0
            self.fired = True
            return encode_action(3, 0, 0, 0)

    for label, policy in [
        ("coast", ConstantPolicy(0)),
        ("one burn", OneBurnPolicy()),
        ("baseline", BaselinePolicy(scenario, env_cfg)),
    ]:
        rollout = run_episode(
            ConjunctionEnv(scenario, env_cfg), policy, observation_seed=0
        )
        describe(label, rollout)


if __name__ == "__main__":
    main()
