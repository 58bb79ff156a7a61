"""Recurrent Q-learning agent: replay buffer, TD targets, training loop,
threshold baseline, and evaluation rollouts.

Episodes are stored whole so sampled windows can unroll the recurrent cell
over contiguous history. One gradient step runs per environment step once the
buffer holds at least one batch of transitions, followed by a soft update of
the target network.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from camlab.conjunction import ConjunctionScenario
from camlab.env import (
    ConjunctionEnv,
    EnvConfig,
    Observation,
    collision_probability,
    encode_action,
    find_tca,
    resolve_sigma_c,
)
from camlab.nets import (
    POSITION_SCALE,
    VELOCITY_SCALE,
    OptimizerState,
    QNetworkParams,
    RecurrentState,
    adam_step,
    backward_batch,
    forward_batch,
    init_optimizer_state,
    init_params,
    init_recurrent_state,
    q_head,
    recurrent_step,
)
from camlab.orbits import (
    DegenerateOrbitError,
    HyperbolicOrbitError,
    StateVector,
    state_to_elements,
)

N_ACTIONS = 625
# Observations are padded to this many debris slots so the network input
# width does not depend on the scenario.
MAX_TRACKED_DEBRIS = 3
OBS_INPUT_DIM = 6 + 6 * MAX_TRACKED_DEBRIS + 2

# Threshold policy: radial +x burn at 0.1 on the thrust table, slot 0.
BASELINE_BURN_ACTION = encode_action(3, 0, 0, 0)


class TrainingDivergenceError(RuntimeError):
    """The training loss became non-finite."""


class BufferNotReadyError(RuntimeError):
    """The replay buffer holds no episodes to sample from."""


def observation_to_input(obs: Observation, max_debris: int = MAX_TRACKED_DEBRIS) -> np.ndarray:
    """Flatten an observation into the network input vector.

    Positions are scaled by 1e-7 and velocities by 1e-4 so entries are O(1).
    Debris slots beyond the scenario's count are zero-filled; layout is
    protected pos, protected vel, then pos/vel per debris slot, then fuel and
    time fractions.
    """
    if len(obs.debris_pos) > max_debris:
        raise ValueError(f"observation has {len(obs.debris_pos)} debris, limit {max_debris}")
    out = np.zeros(6 + 6 * max_debris + 2)
    out[0:3] = obs.protected_pos / POSITION_SCALE
    out[3:6] = obs.protected_vel / VELOCITY_SCALE
    for k in range(len(obs.debris_pos)):
        base = 6 + 6 * k
        out[base : base + 3] = obs.debris_pos[k] / POSITION_SCALE
        out[base + 3 : base + 6] = obs.debris_vel[k] / VELOCITY_SCALE
    out[-2] = obs.fuel_fraction
    out[-1] = obs.time_fraction
    return out


@dataclass(frozen=True)
class Experience:
    """One transition: what was seen, done, and received."""

    observation: Observation
    action: int
    reward: float
    next_observation: Observation
    terminal: bool

    def __post_init__(self) -> None:
        if not 0 <= self.action < N_ACTIONS:
            raise ValueError(f"action {self.action} outside [0, {N_ACTIONS})")


class ReplayBuffer:
    """Bounded store of whole episodes, evicting oldest episodes first.

    capacity counts transitions, not episodes. A single episode longer than
    the capacity cannot be stored without breaking the bound and is rejected.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be at least 1, got {capacity}")
        self.capacity = capacity
        self._episodes: deque[tuple[Experience, ...]] = deque()
        self._n_transitions = 0

    def __len__(self) -> int:
        return self._n_transitions

    @property
    def n_episodes(self) -> int:
        return len(self._episodes)

    def store_episode(self, episode: Sequence[Experience]) -> None:
        episode = tuple(episode)
        if not episode:
            raise ValueError("cannot store an empty episode")
        if len(episode) > self.capacity:
            raise ValueError(
                f"episode of {len(episode)} transitions exceeds buffer capacity {self.capacity}"
            )
        self._episodes.append(episode)
        self._n_transitions += len(episode)
        while self._n_transitions > self.capacity:
            evicted = self._episodes.popleft()
            self._n_transitions -= len(evicted)

    def sample_sequences(
        self, batch_size: int, seq_len: int, rng: np.random.Generator
    ) -> list[tuple[Experience, ...]]:
        """batch_size windows of up to seq_len transitions.

        Each window ends at a uniformly chosen position within a uniformly
        chosen episode, so windows near an episode start come out shorter and
        never cross episode boundaries.
        """
        if not self._episodes:
            raise BufferNotReadyError("replay buffer is empty")
        if batch_size < 1 or seq_len < 1:
            raise ValueError("batch_size and seq_len must be at least 1")
        windows = []
        for _ in range(batch_size):
            episode = self._episodes[int(rng.integers(len(self._episodes)))]
            end = int(rng.integers(len(episode)))
            start = max(0, end - seq_len + 1)
            windows.append(episode[start : end + 1])
        return windows


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run."""

    batch_size: int = 50
    hidden_size: int = 128
    learning_rate: float = 1e-4
    n_episodes: int = 200
    buffer_capacity: int = 1000
    tau: float = 0.1
    n_environments: int = 1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_episodes: int | None = None
    seq_len: int = 16
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau {self.tau} outside [0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma {self.gamma} outside [0, 1]")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.hidden_size < 1 or self.seq_len < 1 or self.buffer_capacity < 1:
            raise ValueError("hidden_size, seq_len and buffer_capacity must be at least 1")
        if self.n_episodes < 0:
            raise ValueError(f"n_episodes must be non-negative, got {self.n_episodes}")
        if self.n_environments < 1:
            raise ValueError(f"n_environments must be at least 1, got {self.n_environments}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("epsilon_start", "epsilon_end"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value} outside [0, 1]")
        if self.epsilon_decay_episodes is not None and self.epsilon_decay_episodes < 1:
            raise ValueError("epsilon_decay_episodes must be at least 1 when given")

    def resolved_decay_episodes(self) -> int:
        """Episodes over which epsilon decays; defaults to half the run."""
        if self.epsilon_decay_episodes is not None:
            return self.epsilon_decay_episodes
        return max(1, self.n_episodes // 2)


def epsilon_for_episode(cfg: TrainConfig, episode: int) -> float:
    """Linear decay from epsilon_start to epsilon_end, then flat."""
    decay = cfg.resolved_decay_episodes()
    if episode >= decay:
        return cfg.epsilon_end
    fraction = episode / decay
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * fraction


@dataclass(frozen=True)
class TrainingMetrics:
    """Per-episode traces from one training run.

    wall_clock holds per-episode durations in seconds; it is kept for
    reporting only and is excluded from persisted metrics so repeated runs
    produce identical files.
    """

    episodes: tuple[int, ...]
    cumulative_rewards: tuple[float, ...]
    mean_losses: tuple[float, ...]
    epsilons: tuple[float, ...]
    wall_clock: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.episodes)
        for name in ("cumulative_rewards", "mean_losses", "epsilons", "wall_clock"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match episodes length {n}")

    def __len__(self) -> int:
        return len(self.episodes)


@dataclass(frozen=True)
class TrainResult:
    """Final parameters plus the metrics trace that produced them."""

    params: QNetworkParams
    target_params: QNetworkParams
    metrics: TrainingMetrics
    config: TrainConfig


def select_action(q_values: np.ndarray, epsilon: float, rng: np.random.Generator | None = None) -> int:
    """Epsilon-greedy: uniform with probability epsilon, else lowest-index argmax."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1]")
    q_values = np.asarray(q_values)
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("epsilon > 0 requires an rng")
        if rng.random() < epsilon:
            return int(rng.integers(q_values.shape[0]))
    return int(np.argmax(q_values))


def soft_update(online: QNetworkParams, target: QNetworkParams, tau: float) -> QNetworkParams:
    """target' = tau*online + (1 - tau)*target, element-wise."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau {tau} outside [0, 1]")
    for (name, a), (_, b) in zip(online.fields(), target.fields()):
        if a.shape != b.shape:
            raise ValueError(f"parameter shapes differ for {name}: {a.shape} vs {b.shape}")
    return online.map(lambda p, t: tau * p + (1.0 - tau) * t, target)


def _assemble_windows(
    windows: Sequence[Sequence[Experience]], seq_len: int, include_next: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Right-aligned padded input tensor and mask for a batch of windows.

    With include_next, each row carries the window observations followed by
    the final transition's next observation (for target-network unrolling).
    """
    batch = len(windows)
    extra = 1 if include_next else 0
    steps = seq_len + extra
    obs = np.zeros((batch, steps, OBS_INPUT_DIM))
    mask = np.zeros((batch, steps), dtype=bool)
    for k, window in enumerate(windows):
        vectors = [observation_to_input(e.observation) for e in window]
        if include_next:
            vectors.append(observation_to_input(window[-1].next_observation))
        length = len(vectors)
        obs[k, steps - length :] = vectors
        mask[k, steps - length :] = True
    return obs, mask


def td_target(
    windows: Sequence[Sequence[Experience]],
    target_params: QNetworkParams,
    gamma: float,
    seq_len: int | None = None,
) -> np.ndarray:
    """TD targets: y = r for terminal transitions, else r + gamma*max Q_target.

    The target network unrolls over each window's observations plus the final
    next observation, from a zero recurrent state.
    """
    if not windows:
        raise ValueError("windows must be non-empty")
    if seq_len is None:
        seq_len = max(len(w) for w in windows)
    rewards = np.array([w[-1].reward for w in windows])
    terminal = np.array([w[-1].terminal for w in windows])
    obs, mask = _assemble_windows(windows, seq_len, include_next=True)
    q_next, _ = forward_batch(obs, mask, target_params)
    return np.where(terminal, rewards, rewards + gamma * q_next.max(axis=1))


def train_step(
    windows: Sequence[Sequence[Experience]],
    online: QNetworkParams,
    target: QNetworkParams,
    opt_state: OptimizerState,
    cfg: TrainConfig,
) -> tuple[float, QNetworkParams, OptimizerState, QNetworkParams]:
    """One Adam step on the batch Huber TD loss, then a target soft update."""
    targets = td_target(windows, target, cfg.gamma, cfg.seq_len)
    obs, mask = _assemble_windows(windows, cfg.seq_len, include_next=False)
    actions = np.array([w[-1].action for w in windows])
    loss, grads = backward_batch(online, obs, mask, actions, targets)
    if not np.isfinite(loss):
        raise TrainingDivergenceError(f"training loss became non-finite: {loss}")
    online, opt_state = adam_step(online, grads, opt_state, lr=cfg.learning_rate)
    target = soft_update(online, target, cfg.tau)
    return loss, online, opt_state, target


class Policy(Protocol):
    """Anything that can drive an episode."""

    def reset(self) -> None: ...

    def act(self, observation: Observation) -> int: ...


@dataclass
class RecurrentPolicy:
    """Greedy (or epsilon-greedy) policy over a recurrent Q-network.

    The recurrent state persists across act() calls within an episode and is
    cleared by reset(), so the policy conditions on the full history seen so
    far.
    """

    params: QNetworkParams
    epsilon: float = 0.0
    rng: np.random.Generator | None = None
    _state: RecurrentState = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self._state = init_recurrent_state(self.params.hidden_size)

    def act(self, observation: Observation) -> int:
        x = observation_to_input(observation)
        self._state = recurrent_step(x, self._state, self.params)
        q = q_head(self._state.hidden, self.params)
        return select_action(q, self.epsilon, self.rng)


@dataclass
class ConstantPolicy:
    """Always returns the same action; action 0 is the do-nothing policy."""

    action: int = 0

    def reset(self) -> None:
        pass

    def act(self, observation: Observation) -> int:
        return self.action


@dataclass
class BaselinePolicy:
    """Threshold rule: burn radially when the observed collision risk crosses
    the probability threshold, otherwise coast.

    Risk is predicted from the observed (noisy) states: both objects are
    converted to elements, the closest approach over the remaining horizon is
    found, and the collision probability is evaluated with the same combined
    radius and sigma the environment uses. Observed states that fail the
    element conversion are treated as no threat.
    """

    scenario: ConjunctionScenario
    env_cfg: EnvConfig = field(default_factory=EnvConfig)

    def reset(self) -> None:
        pass

    def predicted_probability(self, observation: Observation) -> float:
        cfg = self.scenario.config
        span = cfg.end_time - cfg.start_time
        now = cfg.start_time + observation.time_fraction * span
        horizon = cfg.end_time - now
        combined = cfg.protected_radius + cfg.debris_radius
        sigma = resolve_sigma_c(self.env_cfg, self.scenario)
        try:
            protected = state_to_elements(
                StateVector(observation.protected_pos, observation.protected_vel), cfg.mu
            )
        except (HyperbolicOrbitError, DegenerateOrbitError):
            return 0.0
        worst = 0.0
        for pos, vel in zip(observation.debris_pos, observation.debris_vel):
            if horizon <= 1e-9:
                miss = float(np.linalg.norm(pos - observation.protected_pos))
            else:
                try:
                    debris = state_to_elements(StateVector(pos, vel), cfg.mu)
                except (HyperbolicOrbitError, DegenerateOrbitError):
                    continue
                _, miss = find_tca(
                    protected, debris, horizon, coarse_dt=self.env_cfg.tca_coarse_dt, mu=cfg.mu
                )
            worst = max(worst, collision_probability(miss, combined, sigma))
        return worst

    def act(self, observation: Observation) -> int:
        if self.predicted_probability(observation) > self.env_cfg.probability_threshold:
            return BASELINE_BURN_ACTION
        return 0


@dataclass(frozen=True)
class EpisodeRollout:
    """Everything recorded while driving one episode."""

    experiences: tuple[Experience, ...]
    cumulative_reward: float
    fuel_used: float
    collided: bool
    final_info: dict


def run_episode(
    env: ConjunctionEnv, policy: Policy, observation_seed: int | None = None
) -> EpisodeRollout:
    """Reset the environment and drive it with the policy until done."""
    observation = env.reset(observation_seed=observation_seed)
    policy.reset()
    capacity = env.scenario.config.fuel_capacity
    experiences = []
    total = 0.0
    info: dict = {}
    while not env.done:
        action = policy.act(observation)
        next_observation, reward, done, info = env.step(action)
        experiences.append(
            Experience(
                observation=observation,
                action=action,
                reward=float(reward.total),
                next_observation=next_observation,
                terminal=done,
            )
        )
        total += float(reward.total)
        observation = next_observation
    return EpisodeRollout(
        experiences=tuple(experiences),
        cumulative_reward=total,
        fuel_used=capacity - env.state.fuel_remaining,
        collided=bool(info.get("collision", False)),
        final_info=info,
    )


def train(
    cfg: TrainConfig,
    scenarios: ConjunctionScenario | Sequence[ConjunctionScenario],
    env_cfg: EnvConfig | None = None,
) -> TrainResult:
    """Run the full training loop.

    Episode e uses scenario e mod n_environments. After each episode is
    stored, one train_step runs per environment step taken, once the buffer
    holds at least batch_size transitions. All randomness derives from
    cfg.rng_seed, so repeated runs produce identical metrics and parameters.
    """
    if isinstance(scenarios, ConjunctionScenario):
        scenarios = [scenarios]
    if len(scenarios) < cfg.n_environments:
        raise ValueError(
            f"need at least {cfg.n_environments} scenarios, got {len(scenarios)}"
        )
    scenarios = list(scenarios[: cfg.n_environments])
    env_cfg = env_cfg or EnvConfig()
    envs = [ConjunctionEnv(s, env_cfg) for s in scenarios]

    init_ss, action_ss, sample_ss, obs_ss = np.random.SeedSequence(cfg.rng_seed).spawn(4)
    online = init_params(OBS_INPUT_DIM, cfg.hidden_size, N_ACTIONS, np.random.default_rng(init_ss))
    target = online.copy()
    opt_state = init_optimizer_state(online)
    action_rng = np.random.default_rng(action_ss)
    sample_rng = np.random.default_rng(sample_ss)
    obs_seed_rng = np.random.default_rng(obs_ss)
    buffer = ReplayBuffer(cfg.buffer_capacity)

    episodes, rewards, losses, epsilons, clocks = [], [], [], [], []
    for episode in range(cfg.n_episodes):
        started = time.perf_counter()
        epsilon = epsilon_for_episode(cfg, episode)
        policy = RecurrentPolicy(online, epsilon=epsilon, rng=action_rng)
        env = envs[episode % len(envs)]
        observation_seed = int(obs_seed_rng.integers(2**63))
        rollout = run_episode(env, policy, observation_seed=observation_seed)
        buffer.store_episode(rollout.experiences)

        step_losses = []
        for _ in range(len(rollout.experiences)):
            if len(buffer) < cfg.batch_size:
                break
            windows = buffer.sample_sequences(cfg.batch_size, cfg.seq_len, sample_rng)
            loss, online, opt_state, target = train_step(windows, online, target, opt_state, cfg)
            step_losses.append(loss)

        episodes.append(episode)
        rewards.append(rollout.cumulative_reward)
        losses.append(float(np.mean(step_losses)) if step_losses else float("nan"))
        epsilons.append(epsilon)
        clocks.append(time.perf_counter() - started)

    metrics = TrainingMetrics(
        episodes=tuple(episodes),
        cumulative_rewards=tuple(rewards),
        mean_losses=tuple(losses),
        epsilons=tuple(epsilons),
        wall_clock=tuple(clocks),
    )
    return TrainResult(params=online, target_params=target, metrics=metrics, config=cfg)


@dataclass(frozen=True)
class EvalMetrics:
    """Aggregates over greedy evaluation rollouts."""

    mean_cumulative_reward: float
    std_cumulative_reward: float
    collision_rate: float
    mean_fuel_used: float
    n_rollouts: int
    cumulative_rewards: tuple[float, ...]


def evaluate(
    policy: Policy,
    scenarios: Sequence[ConjunctionScenario],
    n_seeds: int,
    env_cfg: EnvConfig | None = None,
    base_seed: int = 0,
) -> EvalMetrics:
    """Greedy rollouts of the policy over scenarios x observation seeds.

    Rollout k (scenario-major order) uses observation seed base_seed + k, so
    two evaluations with the same arguments see identical noise.
    """
    if not scenarios:
        raise ValueError("evaluate needs at least one scenario")
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be at least 1, got {n_seeds}")
    env_cfg = env_cfg or EnvConfig()
    rewards, collisions, fuel = [], [], []
    k = 0
    for scenario in scenarios:
        env = ConjunctionEnv(scenario, env_cfg)
        for _ in range(n_seeds):
            rollout = run_episode(env, policy, observation_seed=base_seed + k)
            rewards.append(rollout.cumulative_reward)
            collisions.append(rollout.collided)
            fuel.append(rollout.fuel_used)
            k += 1
    rewards_arr = np.array(rewards)
    return EvalMetrics(
        mean_cumulative_reward=float(np.mean(rewards_arr)),
        std_cumulative_reward=float(np.std(rewards_arr)),
        collision_rate=float(np.mean(collisions)),
        mean_fuel_used=float(np.mean(fuel)),
        n_rollouts=k,
        cumulative_rewards=tuple(rewards),
    )
