"""Partially observable collision-avoidance environment.

Ground truth is exact two-body motion. Each step lasts dt_step seconds; the
action picks a per-axis impulse from a fixed thrust table plus one of five
intra-step burn instants. The agent only sees Gaussian-noised positions and
velocities plus its fuel and elapsed-time fractions. Rewards penalize
predicted collision probability at the time of closest approach, fuel use,
and drift of the osculating elements away from the episode-start orbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from camlab.conjunction import ConjunctionScenario
from camlab.orbits import (
    EARTH,
    GravParams,
    KeplerianElements,
    StateVector,
    angle_difference,
    elements_to_state,
    mean_motion,
    propagate_positions,
    state_to_elements,
    wrap_angle,
)

# Per-axis thrust multipliers; an action picks one entry per axis.
THRUST_VALUES = (0.0, 0.01, 0.05, 0.1, -0.05)
N_TIME_SLOTS = 5
N_ACTIONS = len(THRUST_VALUES) ** 3 * N_TIME_SLOTS  # 625

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class EpisodeDoneError(RuntimeError):
    """step() was called after the episode finished."""


@dataclass(frozen=True)
class EnvConfig:
    """Environment constants.

    sigma_c is the combined positional uncertainty used by the collision
    probability model; None derives sqrt(sigma_obs_pos^2 + sigma_pos^2) from
    the scenario at reset.
    """

    dt_step: float = 100.0
    sigma_obs_pos: float = 100.0
    sigma_obs_vel: float = 0.1
    dv_scale: float = 1.0
    collision_weight: float = 100.0
    fuel_weight: float = 1.0
    deviation_weight: float = 1.0
    low_fuel_weight: float = 5.0
    terminal_collision_weight: float = 1000.0
    low_fuel_threshold: float = 10.0
    probability_threshold: float = 1e-4
    deviation_thresholds: tuple[float, float, float, float, float] = (100.0, 0.01, 0.01, 0.01, 0.01)
    sigma_c: float | None = None
    tca_coarse_dt: float = 100.0

    def __post_init__(self) -> None:
        if self.dt_step <= 0.0:
            raise ValueError("dt_step must be positive")
        if self.sigma_obs_pos < 0.0 or self.sigma_obs_vel < 0.0:
            raise ValueError("observation noise scales must be non-negative")
        if self.dv_scale <= 0.0:
            raise ValueError("dv_scale must be positive")
        if self.probability_threshold <= 0.0:
            raise ValueError("probability_threshold must be positive")
        if len(self.deviation_thresholds) != 5 or any(t <= 0.0 for t in self.deviation_thresholds):
            raise ValueError("deviation_thresholds must be five positive values")
        if self.sigma_c is not None and self.sigma_c < 0.0:
            raise ValueError("sigma_c must be non-negative")


@dataclass(frozen=True)
class Observation:
    """What the agent sees: noised states plus fuel and time fractions."""

    protected_pos: np.ndarray
    protected_vel: np.ndarray
    debris_pos: tuple[np.ndarray, ...]
    debris_vel: tuple[np.ndarray, ...]
    fuel_fraction: float
    time_fraction: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.fuel_fraction <= 1.0:
            raise ValueError(f"fuel_fraction {self.fuel_fraction} outside [0, 1]")
        if not 0.0 <= self.time_fraction <= 1.0:
            raise ValueError(f"time_fraction {self.time_fraction} outside [0, 1]")


@dataclass(frozen=True)
class RewardBreakdown:
    """Non-positive penalty components and their sum."""

    collision_penalty: float
    fuel_penalty: float
    deviation_penalty: float
    total: float

    def __post_init__(self) -> None:
        if self.collision_penalty > 0.0 or self.fuel_penalty > 0.0 or self.deviation_penalty > 0.0:
            raise ValueError("reward components must be non-positive")

    @classmethod
    def build(cls, collision: float, fuel: float, deviation: float) -> "RewardBreakdown":
        return cls(collision, fuel, deviation, collision + fuel + deviation)


@dataclass
class EnvState:
    """True world state at `time`; elements are the canonical representation."""

    protected: StateVector
    debris: tuple[StateVector, ...]
    protected_elements: KeplerianElements
    reference_elements: KeplerianElements
    fuel_remaining: float
    step_index: int
    time: float


def decode_action(index: int, dv_scale: float = 1.0) -> tuple[np.ndarray, int]:
    """Split an action index into (dv 3-vector in m/s, time slot).

    The index is a base-5 number with digits (x, y, z, slot), most significant
    first; each of x, y, z selects an entry of THRUST_VALUES.
    """
    if not 0 <= index < N_ACTIONS:
        raise ValueError(f"action index {index} outside [0, {N_ACTIONS})")
    slot = index % N_TIME_SLOTS
    rest = index // N_TIME_SLOTS
    z = rest % 5
    rest //= 5
    y = rest % 5
    x = rest // 5
    dv = np.array([THRUST_VALUES[x], THRUST_VALUES[y], THRUST_VALUES[z]]) * dv_scale
    return dv, slot


def encode_action(x_idx: int, y_idx: int, z_idx: int, slot: int) -> int:
    """Inverse of decode_action's digit decomposition."""
    for digit in (x_idx, y_idx, z_idx):
        if not 0 <= digit < 5:
            raise ValueError(f"thrust digit {digit} outside [0, 5)")
    if not 0 <= slot < N_TIME_SLOTS:
        raise ValueError(f"time slot {slot} outside [0, {N_TIME_SLOTS})")
    return ((x_idx * 5 + y_idx) * 5 + z_idx) * N_TIME_SLOTS + slot


def action_fuel_units(index: int) -> float:
    """L1 thrust magnitude of an action in fuel units (independent of dv_scale)."""
    dv, _ = decode_action(index, dv_scale=1.0)
    return float(abs(dv[0]) + abs(dv[1]) + abs(dv[2]))


def apply_impulse(state: StateVector, dv: np.ndarray) -> StateVector:
    """Instantaneous velocity change; position and epoch are untouched."""
    return StateVector(state.position, state.velocity + np.asarray(dv, dtype=float), state.epoch)


def collision_probability(miss_distance: float, combined_radius: float, sigma_c: float) -> float:
    """Isotropic encounter-plane collision probability.

    p = min(1, (R^2 / (2 sigma_c^2)) * exp(-d^2 / (2 sigma_c^2))). A zero
    sigma_c degenerates to the indicator of d <= R.
    """
    if miss_distance < 0.0 or combined_radius < 0.0 or sigma_c < 0.0:
        raise ValueError("collision_probability inputs must be non-negative")
    if sigma_c == 0.0:
        return 1.0 if miss_distance <= combined_radius else 0.0
    ratio = combined_radius / sigma_c
    return min(1.0, 0.5 * ratio * ratio * math.exp(-(miss_distance * miss_distance) / (2.0 * sigma_c * sigma_c)))


def _pair_distance_fn(kep_a, epoch_a, kep_b, epoch_b, mu: GravParams):
    """Scalar distance-vs-time function between two orbits, for refinement."""
    from camlab.orbits import _pv_from_elements

    gm = mu.mu_central_body
    n_a = mean_motion(kep_a, mu)
    n_b = mean_motion(kep_b, mu)

    def distance(t: float) -> float:
        ma = wrap_angle(kep_a.mean_anomaly + n_a * (t - epoch_a))
        mb = wrap_angle(kep_b.mean_anomaly + n_b * (t - epoch_b))
        ax, ay, az, *_ = _pv_from_elements(kep_a.a, kep_a.e, kep_a.i, kep_a.raan, kep_a.argp, ma, gm)
        bx, by, bz, *_ = _pv_from_elements(kep_b.a, kep_b.e, kep_b.i, kep_b.raan, kep_b.argp, mb, gm)
        return math.sqrt((ax - bx) ** 2 + (ay - by) ** 2 + (az - bz) ** 2)

    return distance


def _golden_refine(f, lo: float, hi: float, time_tol: float) -> tuple[float, float]:
    """Golden-section minimum of f on [lo, hi]; returns (t, f(t))."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > time_tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    return t, f(t)


def find_tca(
    kep_a: KeplerianElements,
    kep_b: KeplerianElements,
    horizon: float,
    coarse_dt: float = 100.0,
    mu: GravParams = EARTH,
    epoch_a: float = 0.0,
    epoch_b: float = 0.0,
    time_tol: float = 1e-5,
) -> tuple[float, float]:
    """Time and distance of closest approach over [0, horizon].

    Coarse sampling every coarse_dt seconds locates candidate approach
    valleys; golden-section refinement shrinks every valley's bracket to
    time_tol. Close approaches between crossing orbits can be much narrower
    than the grid, so each local minimum of the scan is refined rather than
    only the best sample. The returned distance never exceeds the best
    coarse sample.

    Args:
        kep_a, kep_b: the two orbits; epochs give the time each element set
            refers to, on the same clock as `horizon`'s origin at t=0.

    Returns:
        (t_star, d_star) with t_star in [0, horizon], d_star in meters.
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if coarse_dt <= 0.0:
        raise ValueError(f"coarse_dt must be positive, got {coarse_dt}")
    ts = np.arange(0.0, horizon, coarse_dt)
    ts = np.append(ts, horizon)
    pos_a, _ = propagate_positions(kep_a, ts - epoch_a, mu)
    pos_b, _ = propagate_positions(kep_b, ts - epoch_b, mu)
    dists = np.linalg.norm(pos_a - pos_b, axis=1)
    k_best = int(np.argmin(dists))
    best_t, best_d = float(ts[k_best]), float(dists[k_best])

    candidates = {k_best}
    for k in range(len(ts)):
        left = dists[k - 1] if k > 0 else math.inf
        right = dists[k + 1] if k + 1 < len(ts) else math.inf
        # Strictly below at least one neighbor, never above either: plateaus
        # (e.g. identical orbits) add no brackets and keep the first sample.
        if (dists[k] < left and dists[k] <= right) or (dists[k] <= left and dists[k] < right):
            candidates.add(k)

    f = _pair_distance_fn(kep_a, epoch_a, kep_b, epoch_b, mu)
    for k in sorted(candidates):
        lo = float(ts[max(k - 1, 0)])
        hi = float(ts[min(k + 1, len(ts) - 1)])
        if hi <= lo:
            continue
        t_ref, d_ref = _golden_refine(f, lo, hi, time_tol)
        # Refinement must strictly beat the grid; ties keep the coarse sample.
        if d_ref < best_d:
            best_t, best_d = t_ref, d_ref
    return best_t, best_d


def _min_distance_on_window(
    kep_a, epoch_a, kep_b, epoch_b, t0: float, t1: float, mu: GravParams, n_coarse: int = 9
) -> tuple[float, float]:
    """Minimum separation between two orbits over the window [t0, t1]."""
    ts = np.linspace(t0, t1, n_coarse)
    pos_a, _ = propagate_positions(kep_a, ts - epoch_a, mu)
    pos_b, _ = propagate_positions(kep_b, ts - epoch_b, mu)
    dists = np.linalg.norm(pos_a - pos_b, axis=1)
    k = int(np.argmin(dists))
    lo = float(ts[max(k - 1, 0)])
    hi = float(ts[min(k + 1, n_coarse - 1)])
    f = _pair_distance_fn(kep_a, epoch_a, kep_b, epoch_b, mu)
    t_star, d_star = _golden_refine(f, lo, hi, 1e-5)
    if float(dists[k]) < d_star:
        return float(ts[k]), float(dists[k])
    return t_star, d_star


def observe(
    state: EnvState,
    scenario: ConjunctionScenario,
    sigma_obs_pos: float,
    sigma_obs_vel: float,
    rng: np.random.Generator,
) -> Observation:
    """Gaussian-noised view of the true state plus exact fractions."""
    if sigma_obs_pos < 0.0 or sigma_obs_vel < 0.0:
        raise ValueError("observation noise scales must be non-negative")
    cfg = scenario.config
    protected_pos = state.protected.position + rng.normal(0.0, sigma_obs_pos, size=3)
    protected_vel = state.protected.velocity + rng.normal(0.0, sigma_obs_vel, size=3)
    debris_pos = tuple(s.position + rng.normal(0.0, sigma_obs_pos, size=3) for s in state.debris)
    debris_vel = tuple(s.velocity + rng.normal(0.0, sigma_obs_vel, size=3) for s in state.debris)
    fuel_fraction = min(1.0, max(0.0, state.fuel_remaining / cfg.fuel_capacity))
    time_fraction = min(1.0, max(0.0, (state.time - cfg.start_time) / cfg.span))
    return Observation(
        protected_pos=protected_pos,
        protected_vel=protected_vel,
        debris_pos=debris_pos,
        debris_vel=debris_vel,
        fuel_fraction=fuel_fraction,
        time_fraction=time_fraction,
    )


def resolve_sigma_c(env_cfg: EnvConfig, scenario: ConjunctionScenario) -> float:
    """Combined positional uncertainty: configured value or the default mix."""
    if env_cfg.sigma_c is not None:
        return env_cfg.sigma_c
    return math.sqrt(env_cfg.sigma_obs_pos**2 + scenario.config.sigma_pos**2)


def max_collision_probability(
    state: EnvState,
    scenario: ConjunctionScenario,
    env_cfg: EnvConfig,
    details: list | None = None,
) -> float:
    """Max over debris of the collision probability at the closest approach.

    The lookahead runs from the state's current time to the episode end; once
    no time remains the instantaneous separation is used.
    """
    cfg = scenario.config
    sigma_c = resolve_sigma_c(env_cfg, scenario)
    combined_radius = cfg.protected_radius + cfg.debris_radius
    horizon = cfg.end_time - state.time
    p_max = 0.0
    for rec, debris_state in zip(scenario.debris, state.debris):
        if horizon > 1e-9:
            t_star, d_star = find_tca(
                state.protected_elements,
                rec.elements,
                horizon,
                coarse_dt=env_cfg.tca_coarse_dt,
                mu=cfg.mu,
                epoch_a=0.0,
                epoch_b=cfg.start_time - state.time,
            )
        else:
            t_star = 0.0
            d_star = float(np.linalg.norm(state.protected.position - debris_state.position))
        p = collision_probability(d_star, combined_radius, sigma_c)
        if details is not None:
            details.append({"tca_time": state.time + t_star, "tca_distance": d_star, "probability": p})
        p_max = max(p_max, p)
    return p_max


def compute_reward(
    state: EnvState,
    dv_magnitude_used: float,
    scenario: ConjunctionScenario,
    env_cfg: EnvConfig,
    collided: bool = False,
    details: list | None = None,
) -> RewardBreakdown:
    """Penalty breakdown for the state reached after applying an action.

    Components (all activate on strict threshold crossings):
      collision: -collision_weight * (1 + log10(p / threshold)) when the
          predicted max collision probability p exceeds the threshold, plus
          -terminal_collision_weight when an actual collision happened;
      fuel: -fuel_weight * spent / fuel_capacity, plus -low_fuel_weight when
          the remaining fuel is below low_fuel_threshold;
      deviation: per-element excess of |current - reference| over the
          thresholds for (a, e, i, raan, argp), each scaled by its threshold.

    dv_magnitude_used is in fuel units (L1 thrust divided by dv_scale).
    """
    cfg = scenario.config

    p = max_collision_probability(state, scenario, env_cfg, details)
    collision_penalty = 0.0
    if p > env_cfg.probability_threshold:
        collision_penalty = -env_cfg.collision_weight * (
            1.0 + math.log10(p / env_cfg.probability_threshold)
        )
    if collided:
        collision_penalty -= env_cfg.terminal_collision_weight

    fuel_penalty = -env_cfg.fuel_weight * dv_magnitude_used / cfg.fuel_capacity
    if state.fuel_remaining < env_cfg.low_fuel_threshold:
        fuel_penalty -= env_cfg.low_fuel_weight

    current = state.protected_elements
    reference = state.reference_elements
    deltas = (
        abs(current.a - reference.a),
        abs(current.e - reference.e),
        abs(angle_difference(current.i, reference.i)),
        abs(angle_difference(current.raan, reference.raan)),
        abs(angle_difference(current.argp, reference.argp)),
    )
    deviation_penalty = 0.0
    for delta, threshold in zip(deltas, env_cfg.deviation_thresholds):
        if delta > threshold:
            deviation_penalty -= env_cfg.deviation_weight * (delta - threshold) / threshold

    return RewardBreakdown.build(collision_penalty, fuel_penalty, deviation_penalty)


def _advance(kep: KeplerianElements, dt: float, mu: GravParams) -> KeplerianElements:
    """Coast: every element constant except the mean anomaly."""
    if dt == 0.0:
        return kep
    return replace(kep, mean_anomaly=wrap_angle(kep.mean_anomaly + mean_motion(kep, mu) * dt))


def _state_at(kep: KeplerianElements, epoch: float, t: float, mu: GravParams) -> StateVector:
    from camlab.orbits import _pv_from_elements

    m = wrap_angle(kep.mean_anomaly + mean_motion(kep, mu) * (t - epoch))
    px, py, pz, vx, vy, vz = _pv_from_elements(kep.a, kep.e, kep.i, kep.raan, kep.argp, m, mu.mu_central_body)
    return StateVector(np.array([px, py, pz]), np.array([vx, vy, vz]), epoch=t)


class ConjunctionEnv:
    """Sequential episode over one conjunction scenario.

    reset() and step() must be called from a single execution context;
    separate instances are fully independent.
    """

    def __init__(
        self,
        scenario: ConjunctionScenario,
        env_cfg: EnvConfig | None = None,
        observation_seed: int = 0,
    ):
        self.scenario = scenario
        self.cfg = env_cfg if env_cfg is not None else EnvConfig()
        self._observation_seed = observation_seed
        self._rng = np.random.default_rng(observation_seed)
        self._state: EnvState | None = None
        self._done = True

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise RuntimeError("environment has not been reset")
        return self._state

    @property
    def done(self) -> bool:
        return self._done

    @property
    def sigma_c(self) -> float:
        return resolve_sigma_c(self.cfg, self.scenario)

    @property
    def combined_radius(self) -> float:
        return self.scenario.config.protected_radius + self.scenario.config.debris_radius

    def reset(self, observation_seed: int | None = None) -> Observation:
        """Start a fresh episode; a given seed replaces the stored one."""
        if observation_seed is not None:
            self._observation_seed = observation_seed
        self._rng = np.random.default_rng(self._observation_seed)
        cfg = self.scenario.config
        protected_elements = cfg.protected_elements
        protected = _state_at(protected_elements, cfg.start_time, cfg.start_time, cfg.mu)
        debris = tuple(
            _state_at(rec.elements, cfg.start_time, cfg.start_time, cfg.mu)
            for rec in self.scenario.debris
        )
        self._state = EnvState(
            protected=protected,
            debris=debris,
            protected_elements=protected_elements,
            reference_elements=protected_elements,
            fuel_remaining=cfg.fuel_capacity,
            step_index=0,
            time=cfg.start_time,
        )
        self._done = False
        return observe(self._state, self.scenario, self.cfg.sigma_obs_pos, self.cfg.sigma_obs_vel, self._rng)

    def _collision_scan(
        self, segments: list[tuple[KeplerianElements, float, float, float]]
    ) -> tuple[bool, float | None, float]:
        """Check each debris against each trajectory segment of this step.

        Returns (collided, collision_time, min_distance_seen). Windows whose
        endpoint separations cannot close on the combined radius within the
        window (bounded by the endpoint relative speeds) are skipped.
        """
        cfg = self.scenario.config
        combined = self.combined_radius
        collided = False
        collision_time = None
        min_distance = math.inf
        for rec in self.scenario.debris:
            for kep, epoch, t0, t1 in segments:
                if t1 <= t0:
                    continue
                ends = np.array([t0, t1])
                pos_a, vel_a = propagate_positions(kep, ends - epoch, cfg.mu)
                pos_b, vel_b = propagate_positions(rec.elements, ends - cfg.start_time, cfg.mu)
                d_ends = np.linalg.norm(pos_a - pos_b, axis=1)
                min_distance = min(min_distance, float(np.min(d_ends)))
                v_rel = float(np.max(np.linalg.norm(vel_a - vel_b, axis=1)))
                # An object pair cannot close much faster than its endpoint
                # relative speed over one short window; 1.5 covers the drift.
                if float(np.min(d_ends)) > combined + 1.5 * v_rel * (t1 - t0):
                    continue
                t_min, d_min = _min_distance_on_window(
                    kep, epoch, rec.elements, cfg.start_time, t0, t1, cfg.mu
                )
                min_distance = min(min_distance, d_min)
                if d_min < combined and not collided:
                    collided = True
                    collision_time = t_min
        return collided, collision_time, min_distance

    def step(self, action: int) -> tuple[Observation, RewardBreakdown, bool, dict]:
        """Apply one action, advance dt_step seconds, and observe.

        Returns (observation, reward breakdown, done, info). info carries the
        collision flag and time, the minimum separation monitored during the
        step, and per-debris closest-approach diagnostics.
        """
        if self._done or self._state is None:
            raise EpisodeDoneError("episode is finished; call reset() first")
        state = self._state
        cfg = self.scenario.config
        env_cfg = self.cfg

        dv, slot = decode_action(action, env_cfg.dv_scale)
        fuel_cost = action_fuel_units(action)
        burn = fuel_cost > 0.0
        t0 = state.time
        t_end = t0 + env_cfg.dt_step
        offset = slot * env_cfg.dt_step / N_TIME_SLOTS

        elements = state.protected_elements  # valid at t0
        segments: list[tuple[KeplerianElements, float, float, float]] = []
        if burn:
            t_burn = t0 + offset
            at_burn = _advance(elements, offset, cfg.mu)
            burned = apply_impulse(_state_at(at_burn, t_burn, t_burn, cfg.mu), dv)
            after = state_to_elements(burned, cfg.mu)  # valid at t_burn
            segments.append((elements, t0, t0, t_burn))
            segments.append((after, t_burn, t_burn, t_end))
            end_elements = _advance(after, t_end - t_burn, cfg.mu)
        else:
            segments.append((elements, t0, t0, t_end))
            end_elements = _advance(elements, env_cfg.dt_step, cfg.mu)

        # Segment tuples are (elements, elements_epoch, window_start, window_end).
        collided, collision_time, min_distance = self._collision_scan(segments)

        state.protected_elements = end_elements
        state.protected = _state_at(end_elements, t_end, t_end, cfg.mu)
        state.debris = tuple(
            _state_at(rec.elements, cfg.start_time, t_end, cfg.mu) for rec in self.scenario.debris
        )
        state.fuel_remaining = state.fuel_remaining - fuel_cost
        state.step_index += 1
        state.time = t_end

        fuel_out = state.fuel_remaining <= 0.0
        if state.fuel_remaining < 0.0:
            state.fuel_remaining = 0.0
        time_out = t_end >= cfg.end_time - 1e-9
        self._done = collided or fuel_out or time_out

        details: list = []
        reward = compute_reward(state, fuel_cost, self.scenario, env_cfg, collided=collided, details=details)
        observation = observe(state, self.scenario, env_cfg.sigma_obs_pos, env_cfg.sigma_obs_vel, self._rng)
        info = {
            "collision": collided,
            "collision_time": collision_time,
            "min_distance": min_distance,
            "fuel_out": fuel_out,
            "time_out": time_out,
            "closest_approaches": details,
            "max_collision_probability": max((d["probability"] for d in details), default=0.0),
        }
        return observation, reward, self._done, info


TRACE_BASE_COLUMNS = ["step", "action", "collision_penalty", "fuel_penalty", "deviation_penalty", "reward", "done"]


def trace_header(n_debris: int) -> list[str]:
    """Column names for an episode trace with n_debris objects."""
    columns = list(TRACE_BASE_COLUMNS)
    for prefix in ("true", "obs"):
        columns += [f"{prefix}_protected_{axis}" for axis in ("x", "y", "z", "vx", "vy", "vz")]
        for k in range(n_debris):
            columns += [f"{prefix}_debris{k}_{axis}" for axis in ("x", "y", "z", "vx", "vy", "vz")]
    return columns


def trace_row(
    step: int,
    action: int,
    reward: RewardBreakdown,
    done: bool,
    state: EnvState,
    observation: Observation,
) -> list:
    """One trace line pairing the true state with what the agent saw."""
    row: list = [
        step,
        action,
        reward.collision_penalty,
        reward.fuel_penalty,
        reward.deviation_penalty,
        reward.total,
        done,
    ]
    row += list(state.protected.position) + list(state.protected.velocity)
    for s in state.debris:
        row += list(s.position) + list(s.velocity)
    row += list(observation.protected_pos) + list(observation.protected_vel)
    for pos, vel in zip(observation.debris_pos, observation.debris_vel):
        row += list(pos) + list(vel)
    return row
