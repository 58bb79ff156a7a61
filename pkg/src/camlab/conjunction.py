"""Synthetic conjunction scenarios by retrograde reconstruction.

A scenario starts from a protected object's orbit. For each debris object a
collision time is sampled uniformly over the episode, the protected object is
projected to that time, a debris position is placed around the projection
with per-axis Gaussian noise, and a debris velocity is built by rotating the
projected velocity in-plane toward the orbit normal and scaling its magnitude
with multiplicative Gaussian noise. The debris orbit is then reconstructed
retrograde: the collision-time osculating elements are rewound to the
scenario start by mean-anomaly shift, which guarantees the debris passes
(near) the sampled collision point at the sampled time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from camlab.orbits import (
    EARTH,
    TWO_PI,
    DegenerateOrbitError,
    GravParams,
    HyperbolicOrbitError,
    KeplerianElements,
    StateVector,
    mean_motion,
    propagate,
    state_to_elements,
    wrap_angle,
)
from camlab import textio

# Default stochastic ranges for scenario batches.
DEFAULT_THETA_RANGES = ((0.01, math.pi / 8.0), (math.pi / 8.0, math.pi / 4.0))
DEFAULT_PROTECTED_RADIUS = 10.0
DEFAULT_DEBRIS_RADIUS = 5.0
DEFAULT_FUEL_CAPACITY = 20.0

# Bounded retries for hyperbolic or degenerate reconstructions.
MAX_RECONSTRUCT_RETRIES = 100


class ScenarioGenerationError(RuntimeError):
    """Scenario generation exhausted its retry budget."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Stochastic parameters and fixed geometry of one conjunction scenario.

    Attributes:
        start_time, end_time: episode bounds, s.
        n_debris: number of debris objects to reconstruct.
        sigma_pos: per-axis std of debris placement around the projected
            protected position, m.
        sigma_vr: std of the multiplicative velocity-magnitude noise.
        theta_ranges: two (low, high) intervals, rad; the rotation angle is
            drawn uniformly from one of them, each picked with probability 1/2.
        protected_elements: protected-object orbit at start_time.
        protected_radius, debris_radius: hard-body radii, m.
        fuel_capacity: fuel units available per episode.
        mu: central-body gravitational parameter.
        rng_seed: seed making generation a pure function of this config.
    """

    start_time: float
    end_time: float
    n_debris: int
    sigma_pos: float
    sigma_vr: float
    theta_ranges: tuple[tuple[float, float], tuple[float, float]]
    protected_elements: KeplerianElements
    protected_radius: float = DEFAULT_PROTECTED_RADIUS
    debris_radius: float = DEFAULT_DEBRIS_RADIUS
    fuel_capacity: float = DEFAULT_FUEL_CAPACITY
    mu: GravParams = EARTH
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.start_time < self.end_time:
            raise ValueError("start_time must precede end_time")
        if self.n_debris < 1:
            raise ValueError(f"n_debris must be >= 1, got {self.n_debris}")
        if self.sigma_pos < 0.0 or self.sigma_vr < 0.0:
            raise ValueError("sigma_pos and sigma_vr must be non-negative")
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.theta_ranges)
        if len(ranges) != 2:
            raise ValueError("theta_ranges must hold exactly two intervals")
        for lo, hi in ranges:
            if not (0.0 < lo <= hi < math.pi):
                raise ValueError(f"theta range ({lo}, {hi}) must satisfy 0 < low <= high < pi")
        object.__setattr__(self, "theta_ranges", ranges)
        if self.protected_radius <= 0.0 or self.debris_radius <= 0.0:
            raise ValueError("object radii must be positive")
        if self.fuel_capacity <= 0.0:
            raise ValueError("fuel_capacity must be positive")

    @property
    def span(self) -> float:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class DebrisRecord:
    """One reconstructed debris object.

    elements are the orbit at the scenario start; collision_state is the
    debris state at collision_time that the reconstruction targeted.
    """

    elements: KeplerianElements
    collision_time: float
    collision_state: StateVector


@dataclass(frozen=True)
class ConjunctionScenario:
    config: ScenarioConfig
    debris: tuple[DebrisRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "debris", tuple(self.debris))
        if len(self.debris) != self.config.n_debris:
            raise ValueError(
                f"scenario holds {len(self.debris)} debris records, config says {self.config.n_debris}"
            )


def sample_collision_time(start: float, end: float, rng: np.random.Generator) -> float:
    """Uniform draw in [start, end]."""
    if start > end:
        raise ValueError(f"start {start} exceeds end {end}")
    return float(rng.uniform(start, end))


def place_debris_position(
    projected_pos: np.ndarray, sigma_pos: float, rng: np.random.Generator
) -> np.ndarray:
    """Gaussian placement around the projected position, independent per axis."""
    if sigma_pos < 0.0:
        raise ValueError(f"sigma_pos must be non-negative, got {sigma_pos}")
    return np.asarray(projected_pos, dtype=float) + rng.normal(0.0, sigma_pos, size=3)


def rotate_velocity(vel: np.ndarray, pos: np.ndarray, theta: float) -> np.ndarray:
    """Rotate vel by theta toward the orbit normal w = pos x vel.

    Since w is orthogonal to vel, cos(theta)*vel + |vel|*sin(theta)*unit(w)
    preserves the speed exactly in real arithmetic.
    """
    vel = np.asarray(vel, dtype=float)
    pos = np.asarray(pos, dtype=float)
    w = np.cross(pos, vel)
    wn = float(np.linalg.norm(w))
    scale = float(np.linalg.norm(pos)) * float(np.linalg.norm(vel))
    if wn == 0.0 or wn <= 1e-12 * scale:
        raise DegenerateOrbitError("position and velocity are collinear; no rotation plane")
    return math.cos(theta) * vel + float(np.linalg.norm(vel)) * math.sin(theta) * (w / wn)


def sample_theta(
    ranges: tuple[tuple[float, float], tuple[float, float]], rng: np.random.Generator
) -> float:
    """Uniform draw from one of two intervals, each chosen with probability 1/2."""
    for lo, hi in ranges:
        if lo > hi:
            raise ValueError(f"empty theta range ({lo}, {hi})")
    lo, hi = ranges[0] if rng.random() < 0.5 else ranges[1]
    return float(rng.uniform(lo, hi))


def apply_velocity_noise(
    vel: np.ndarray, sigma_vr: float, rng: np.random.Generator
) -> np.ndarray:
    """Scale vel by s ~ Normal(1, sigma_vr); non-positive draws are redrawn."""
    if sigma_vr < 0.0:
        raise ValueError(f"sigma_vr must be non-negative, got {sigma_vr}")
    for _ in range(MAX_RECONSTRUCT_RETRIES):
        s = float(rng.normal(1.0, sigma_vr))
        if s > 0.0:
            return s * np.asarray(vel, dtype=float)
    raise ScenarioGenerationError(
        f"no positive velocity scale after {MAX_RECONSTRUCT_RETRIES} draws (sigma_vr={sigma_vr})"
    )


def reconstruct_debris(
    collision_pos: np.ndarray,
    collision_vel: np.ndarray,
    collision_time: float,
    cfg: ScenarioConfig,
) -> DebrisRecord:
    """Backtrack a collision-time state to a debris orbit at start_time.

    The orbit is the collision-time osculating one with its mean anomaly
    rewound by n*(collision_time - start_time), so forward propagation lands
    back on the collision state.

    Raises:
        HyperbolicOrbitError / DegenerateOrbitError: the sampled state is not
            a bound orbit; the caller should redraw.
    """
    if not cfg.start_time <= collision_time <= cfg.end_time:
        raise ValueError(f"collision_time {collision_time} outside the episode bounds")
    collision_state = StateVector(collision_pos, collision_vel, epoch=collision_time)
    at_collision = state_to_elements(collision_state, cfg.mu)
    rewound = wrap_angle(
        at_collision.mean_anomaly
        - mean_motion(at_collision, cfg.mu) * (collision_time - cfg.start_time)
    )
    elements = replace(at_collision, mean_anomaly=rewound)
    return DebrisRecord(elements=elements, collision_time=collision_time, collision_state=collision_state)


def generate_scenario(cfg: ScenarioConfig) -> ConjunctionScenario:
    """Generate every debris record for one scenario; pure in cfg.rng_seed."""
    rng = np.random.default_rng(cfg.rng_seed)
    debris: list[DebrisRecord] = []
    for index in range(cfg.n_debris):
        record = None
        for _ in range(MAX_RECONSTRUCT_RETRIES):
            collision_time = sample_collision_time(cfg.start_time, cfg.end_time, rng)
            projected = propagate(cfg.protected_elements, collision_time - cfg.start_time, cfg.mu)
            position = place_debris_position(projected.position, cfg.sigma_pos, rng)
            theta = sample_theta(cfg.theta_ranges, rng)
            try:
                velocity = rotate_velocity(projected.velocity, projected.position, theta)
                velocity = apply_velocity_noise(velocity, cfg.sigma_vr, rng)
                record = reconstruct_debris(position, velocity, collision_time, cfg)
            except (HyperbolicOrbitError, DegenerateOrbitError):
                continue
            break
        if record is None:
            raise ScenarioGenerationError(
                f"debris {index}: no bound orbit after {MAX_RECONSTRUCT_RETRIES} draws"
            )
        debris.append(record)
    return ConjunctionScenario(config=cfg, debris=tuple(debris))


def sample_scenario_config(
    rng: np.random.Generator, protected_elements: KeplerianElements | None = None
) -> ScenarioConfig:
    """Draw one scenario configuration from the default distributions.

    n_debris uniform in {1, 2, 3}; span uniform in [2 h, 6 h]; sigma_pos
    log-uniform in [100, 2000] m; sigma_vr uniform in [0.01, 0.1]; theta
    ranges fixed at the defaults. The protected orbit, unless supplied, is a
    near-circular low orbit with uniform angles.
    """
    if protected_elements is None:
        protected_elements = KeplerianElements(
            a=float(rng.uniform(6.8e6, 7.5e6)),
            e=float(rng.uniform(0.0, 0.05)),
            i=float(rng.uniform(0.0, math.pi)),
            raan=float(rng.uniform(0.0, TWO_PI)),
            argp=float(rng.uniform(0.0, TWO_PI)),
            mean_anomaly=float(rng.uniform(0.0, TWO_PI)),
        )
    return ScenarioConfig(
        start_time=0.0,
        end_time=float(rng.uniform(2.0, 6.0)) * 3600.0,
        n_debris=int(rng.integers(1, 4)),
        sigma_pos=float(np.exp(rng.uniform(math.log(100.0), math.log(2000.0)))),
        sigma_vr=float(rng.uniform(0.01, 0.1)),
        theta_ranges=DEFAULT_THETA_RANGES,
        protected_elements=protected_elements,
        rng_seed=int(rng.integers(0, 2**63)),
    )


def _elements_to_record(kep: KeplerianElements) -> dict:
    return {"a": kep.a, "e": kep.e, "i": kep.i, "W": kep.raan, "w": kep.argp, "M": kep.mean_anomaly}


def _elements_from_record(rec: dict) -> KeplerianElements:
    return KeplerianElements(
        a=rec["a"], e=rec["e"], i=rec["i"], raan=rec["W"], argp=rec["w"], mean_anomaly=rec["M"]
    )


def _vector_to_record(vec: np.ndarray) -> dict:
    return {"x": float(vec[0]), "y": float(vec[1]), "z": float(vec[2])}


def _vector_from_record(rec: dict) -> np.ndarray:
    return np.array([rec["x"], rec["y"], rec["z"]], dtype=float)


def scenario_config_to_record(cfg: ScenarioConfig) -> dict:
    """Nested-record form of a ScenarioConfig, mirroring its field names."""
    return {
        "start_time": cfg.start_time,
        "end_time": cfg.end_time,
        "n_debris": cfg.n_debris,
        "sigma_pos": cfg.sigma_pos,
        "sigma_vr": cfg.sigma_vr,
        "theta_ranges": [{"low": lo, "high": hi} for lo, hi in cfg.theta_ranges],
        "protected_elements": _elements_to_record(cfg.protected_elements),
        "protected_radius": cfg.protected_radius,
        "debris_radius": cfg.debris_radius,
        "fuel_capacity": cfg.fuel_capacity,
        "mu": cfg.mu.mu_central_body,
        "rng_seed": cfg.rng_seed,
    }


def scenario_config_from_record(raw: dict) -> ScenarioConfig:
    """Inverse of scenario_config_to_record."""
    try:
        return ScenarioConfig(
            start_time=raw["start_time"],
            end_time=raw["end_time"],
            n_debris=raw["n_debris"],
            sigma_pos=raw["sigma_pos"],
            sigma_vr=raw["sigma_vr"],
            theta_ranges=tuple((r["low"], r["high"]) for r in raw["theta_ranges"]),
            protected_elements=_elements_from_record(raw["protected_elements"]),
            protected_radius=raw["protected_radius"],
            debris_radius=raw["debris_radius"],
            fuel_capacity=raw["fuel_capacity"],
            mu=GravParams(raw["mu"]),
            rng_seed=raw["rng_seed"],
        )
    except KeyError as err:
        raise ValueError(f"scenario config record missing field {err.args[0]!r}") from err


def scenario_to_record(scenario: ConjunctionScenario) -> dict:
    """Nested-record form of a scenario, mirroring the dataclass fields."""
    return {
        "config": scenario_config_to_record(scenario.config),
        "debris": [
            {
                "collision_time": rec.collision_time,
                "elements": _elements_to_record(rec.elements),
                "collision_state": {
                    "position": _vector_to_record(rec.collision_state.position),
                    "velocity": _vector_to_record(rec.collision_state.velocity),
                    "epoch": rec.collision_state.epoch,
                },
            }
            for rec in scenario.debris
        ],
    }


def scenario_from_record(record: dict) -> ConjunctionScenario:
    """Inverse of scenario_to_record; raises KeyError-derived ValueError on missing fields."""
    try:
        cfg = scenario_config_from_record(record["config"])
        debris = tuple(
            DebrisRecord(
                elements=_elements_from_record(rec["elements"]),
                collision_time=rec["collision_time"],
                collision_state=StateVector(
                    _vector_from_record(rec["collision_state"]["position"]),
                    _vector_from_record(rec["collision_state"]["velocity"]),
                    epoch=rec["collision_state"]["epoch"],
                ),
            )
            for rec in record["debris"]
        )
    except KeyError as err:
        raise ValueError(f"scenario record missing field {err.args[0]!r}") from err
    return ConjunctionScenario(config=cfg, debris=debris)


def save_scenario(path, scenario: ConjunctionScenario) -> None:
    textio.save_record(path, scenario_to_record(scenario))


def load_scenario(path) -> ConjunctionScenario:
    return scenario_from_record(textio.load_record(path))
