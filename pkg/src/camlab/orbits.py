"""Two-body orbital mechanics.

Keplerian elements, Cartesian states, Kepler's equation, and exact two-body
propagation by mean-anomaly advance. Angles are radians, lengths meters,
times seconds. All functions are pure; nothing here holds mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

TWO_PI = 2.0 * math.pi

# Earth's gravitational parameter, m^3/s^2
EARTH_MU = 3.986004418e14


class HyperbolicOrbitError(ValueError):
    """State or elements describe an unbound (e >= 1) trajectory."""


class DegenerateOrbitError(ValueError):
    """State has (near-)zero angular momentum; no orbit plane is defined."""


def wrap_angle(angle: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    return wrapped


def angle_difference(a: float, b: float) -> float:
    """Signed difference a - b wrapped into (-pi, pi]."""
    d = math.fmod(a - b, TWO_PI)
    if d <= -math.pi:
        d += TWO_PI
    elif d > math.pi:
        d -= TWO_PI
    return d


@dataclass(frozen=True)
class GravParams:
    """Gravitational parameter of the central body, m^3/s^2."""

    mu_central_body: float = EARTH_MU

    def __post_init__(self) -> None:
        if not (self.mu_central_body > 0.0 and math.isfinite(self.mu_central_body)):
            raise ValueError(f"mu_central_body must be positive, got {self.mu_central_body}")


EARTH = GravParams()


@dataclass(frozen=True)
class KeplerianElements:
    """Osculating elements of a bound two-body orbit.

    Attributes:
        a: semi-major axis, m (> 0).
        e: eccentricity, in [0, 1).
        i: inclination, rad, in [0, pi].
        raan: longitude of the ascending node, rad, stored in [0, 2*pi).
        argp: argument of periapsis, rad, stored in [0, 2*pi).
        mean_anomaly: mean anomaly, rad, stored in [0, 2*pi).
    """

    a: float
    e: float
    i: float
    raan: float
    argp: float
    mean_anomaly: float

    def __post_init__(self) -> None:
        for name in ("a", "e", "i", "raan", "argp", "mean_anomaly"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.a <= 0.0:
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if self.e < 0.0:
            raise ValueError(f"eccentricity must be non-negative, got {self.e}")
        if self.e >= 1.0:
            raise HyperbolicOrbitError(f"eccentricity {self.e} is not elliptical")
        if not 0.0 <= self.i <= math.pi:
            raise ValueError(f"inclination must lie in [0, pi], got {self.i}")
        object.__setattr__(self, "raan", wrap_angle(self.raan))
        object.__setattr__(self, "argp", wrap_angle(self.argp))
        object.__setattr__(self, "mean_anomaly", wrap_angle(self.mean_anomaly))


@dataclass(frozen=True)
class StateVector:
    """Cartesian state of one object.

    Attributes:
        position: 3-vector, m.
        velocity: 3-vector, m/s.
        epoch: seconds since the scenario start.
    """

    position: np.ndarray
    velocity: np.ndarray
    epoch: float = 0.0

    def __post_init__(self) -> None:
        pos = np.array(self.position, dtype=float)
        vel = np.array(self.velocity, dtype=float)
        if pos.shape != (3,) or vel.shape != (3,):
            raise ValueError("position and velocity must be 3-vectors")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise ValueError("state components must be finite")
        pos.flags.writeable = False
        vel.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "velocity", vel)


def solve_kepler(mean_anomaly: float, e: float, tol: float = 1e-12) -> float:
    """Solve Kepler's equation E - e*sin(E) = M for the eccentric anomaly.

    Newton iteration seeded at E0 = M, falling back to bisection on [0, 2*pi]
    if Newton has not converged within 50 iterations.

    Args:
        mean_anomaly: M, rad (any value; normalized internally).
        e: eccentricity, in [0, 1).
        tol: convergence tolerance on |E - e*sin(E) - M|.

    Returns:
        Eccentric anomaly in [0, 2*pi).
    """
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity must lie in [0, 1), got {e}")
    if not tol > 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    m = wrap_angle(mean_anomaly)
    if e == 0.0:
        return m

    ecc_anomaly = m
    for _ in range(50):
        f = ecc_anomaly - e * math.sin(ecc_anomaly) - m
        if abs(f) <= tol:
            return wrap_angle(ecc_anomaly) if ecc_anomaly >= TWO_PI or ecc_anomaly < 0.0 else ecc_anomaly
        ecc_anomaly -= f / (1.0 - e * math.cos(ecc_anomaly))

    # Bisection fallback. f(E) = E - e*sin(E) - m is strictly increasing with
    # f(0) = -m <= 0 and f(2*pi) = 2*pi - m >= 0, so the root is bracketed.
    lo, hi = 0.0, TWO_PI
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = mid - e * math.sin(mid) - m
        if abs(f) <= tol:
            return mid
        if f < 0.0:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(f"Kepler solve failed to converge for M={mean_anomaly}, e={e}")


def _solve_kepler_many(mean_anomaly: np.ndarray, e: float, tol: float = 1e-12) -> np.ndarray:
    """Vectorized Kepler solve; falls back to the scalar solver per element."""
    m = np.asarray(mean_anomaly, dtype=float) % TWO_PI
    ecc_anomaly = m + e * np.sin(m)
    converged = False
    for _ in range(50):
        f = ecc_anomaly - e * np.sin(ecc_anomaly) - m
        if np.max(np.abs(f)) <= tol:
            converged = True
            break
        ecc_anomaly = ecc_anomaly - f / (1.0 - e * np.cos(ecc_anomaly))
    if not converged:
        f = ecc_anomaly - e * np.sin(ecc_anomaly) - m
        for k in np.flatnonzero(np.abs(f) > tol):
            ecc_anomaly[k] = solve_kepler(float(m[k]), e, tol)
    return ecc_anomaly % TWO_PI


def true_anomaly_from_eccentric(ecc_anomaly: float, e: float) -> float:
    """Convert eccentric anomaly to true anomaly, rad in [0, 2*pi)."""
    half = 0.5 * ecc_anomaly
    nu = 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(half), math.sqrt(1.0 - e) * math.cos(half))
    return wrap_angle(nu)


def eccentric_anomaly_from_true(true_anomaly: float, e: float) -> float:
    """Convert true anomaly to eccentric anomaly, rad in [0, 2*pi)."""
    half = 0.5 * true_anomaly
    ecc = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(half), math.sqrt(1.0 + e) * math.cos(half))
    return wrap_angle(ecc)


def _rotation_rows(i: float, raan: float, argp: float) -> tuple[tuple[float, float], ...]:
    """Rows of the perifocal-to-inertial rotation, omitting the unused z column."""
    ci, si = math.cos(i), math.sin(i)
    cw, sw = math.cos(argp), math.sin(argp)
    cr, sr = math.cos(raan), math.sin(raan)
    return (
        (cr * cw - sr * sw * ci, -cr * sw - sr * cw * ci),
        (sr * cw + cr * sw * ci, -sr * sw + cr * cw * ci),
        (sw * si, cw * si),
    )


def _pv_from_elements(
    a: float, e: float, i: float, raan: float, argp: float, mean_anomaly: float, gm: float
) -> tuple[float, float, float, float, float, float]:
    """Scalar-math core of elements_to_state, returning (px, py, pz, vx, vy, vz)."""
    ecc_anomaly = solve_kepler(mean_anomaly, e)
    ce, se = math.cos(ecc_anomaly), math.sin(ecc_anomaly)
    one_minus_ecos = 1.0 - e * ce
    r = a * one_minus_ecos
    cnu = (ce - e) / one_minus_ecos
    snu = math.sqrt(1.0 - e * e) * se / one_minus_ecos
    p = a * (1.0 - e * e)
    vcoef = math.sqrt(gm / p)
    # Perifocal components: position (r*cnu, r*snu, 0), velocity vcoef*(-snu, e + cnu, 0).
    px_pf, py_pf = r * cnu, r * snu
    vx_pf, vy_pf = -vcoef * snu, vcoef * (e + cnu)
    rows = _rotation_rows(i, raan, argp)
    return (
        rows[0][0] * px_pf + rows[0][1] * py_pf,
        rows[1][0] * px_pf + rows[1][1] * py_pf,
        rows[2][0] * px_pf + rows[2][1] * py_pf,
        rows[0][0] * vx_pf + rows[0][1] * vy_pf,
        rows[1][0] * vx_pf + rows[1][1] * vy_pf,
        rows[2][0] * vx_pf + rows[2][1] * vy_pf,
    )


def elements_to_state(kep: KeplerianElements, mu: GravParams = EARTH) -> StateVector:
    """Cartesian state at the elements' own epoch (epoch is set to 0).

    Args:
        kep: orbit elements.
        mu: central-body gravitational parameter.

    Returns:
        StateVector on the orbit defined by kep; vis-viva holds exactly up to
        rounding: v^2 = mu*(2/r - 1/a).
    """
    px, py, pz, vx, vy, vz = _pv_from_elements(
        kep.a, kep.e, kep.i, kep.raan, kep.argp, kep.mean_anomaly, mu.mu_central_body
    )
    return StateVector(np.array([px, py, pz]), np.array([vx, vy, vz]), epoch=0.0)


# Relative thresholds for the circular / equatorial special cases below.
_EPS_CIRCULAR = 1e-11
_EPS_EQUATORIAL = 1e-11


def state_to_elements(state: StateVector, mu: GravParams = EARTH) -> KeplerianElements:
    """Osculating Keplerian elements of a Cartesian state.

    Conventions for degenerate angles: an equatorial orbit takes raan = 0 with
    the node direction along +x; a circular orbit takes argp = 0 with anomaly
    measured from the node direction.

    Raises:
        DegenerateOrbitError: (near-)zero angular momentum, no orbit plane.
        HyperbolicOrbitError: the state is not on a bound elliptical orbit.
    """
    gm = mu.mu_central_body
    r = np.asarray(state.position, dtype=float)
    v = np.asarray(state.velocity, dtype=float)
    rn = float(np.linalg.norm(r))
    vn = float(np.linalg.norm(v))
    if rn == 0.0:
        raise DegenerateOrbitError("position vector is zero")

    h = np.cross(r, v)
    hn = float(np.linalg.norm(h))
    if hn <= 1e-11 * rn * vn or hn == 0.0:
        raise DegenerateOrbitError("angular momentum is (near) zero; radial trajectory")

    energy = 0.5 * vn * vn - gm / rn
    if energy >= 0.0:
        raise HyperbolicOrbitError(f"specific energy {energy} is non-negative; orbit unbound")
    a = -gm / (2.0 * energy)

    e_vec = ((vn * vn - gm / rn) * r - float(np.dot(r, v)) * v) / gm
    e = float(np.linalg.norm(e_vec))
    if e >= 1.0:
        raise HyperbolicOrbitError(f"eccentricity {e} is not elliptical")

    h_unit = h / hn
    inclination = math.acos(min(1.0, max(-1.0, float(h[2]) / hn)))

    node = np.array([-h[1], h[0], 0.0])
    nn = float(np.linalg.norm(node))
    if nn <= _EPS_EQUATORIAL * hn:
        raan = 0.0
        node_unit = np.array([1.0, 0.0, 0.0])
    else:
        raan = wrap_angle(math.atan2(float(node[1]), float(node[0])))
        node_unit = node / nn
    in_plane = np.cross(h_unit, node_unit)

    if e <= _EPS_CIRCULAR:
        argp = 0.0
        nu = math.atan2(float(np.dot(r, in_plane)), float(np.dot(r, node_unit)))
    else:
        e_unit = e_vec / e
        argp = wrap_angle(math.atan2(float(np.dot(e_vec, in_plane)), float(np.dot(e_vec, node_unit))))
        q_unit = np.cross(h_unit, e_unit)
        nu = math.atan2(float(np.dot(r, q_unit)), float(np.dot(r, e_unit)))

    ecc_anomaly = eccentric_anomaly_from_true(wrap_angle(nu), e)
    mean_anomaly = wrap_angle(ecc_anomaly - e * math.sin(ecc_anomaly))
    return KeplerianElements(a=a, e=e, i=inclination, raan=raan, argp=argp, mean_anomaly=mean_anomaly)


def mean_motion(kep: KeplerianElements, mu: GravParams = EARTH) -> float:
    """Mean angular rate n = sqrt(mu / a^3), rad/s."""
    return math.sqrt(mu.mu_central_body / kep.a**3)


def orbital_period(kep: KeplerianElements, mu: GravParams = EARTH) -> float:
    """Orbital period 2*pi*sqrt(a^3 / mu), s."""
    return TWO_PI * math.sqrt(kep.a**3 / mu.mu_central_body)


def propagate(kep: KeplerianElements, dt: float, mu: GravParams = EARTH) -> StateVector:
    """State dt seconds after the elements' reference epoch.

    Exact two-body propagation: the mean anomaly advances by n*dt and every
    other element is constant. The returned epoch equals dt.
    """
    if not math.isfinite(dt):
        raise ValueError(f"dt must be finite, got {dt}")
    gm = mu.mu_central_body
    m = wrap_angle(kep.mean_anomaly + math.sqrt(gm / kep.a**3) * dt)
    px, py, pz, vx, vy, vz = _pv_from_elements(kep.a, kep.e, kep.i, kep.raan, kep.argp, m, gm)
    return StateVector(np.array([px, py, pz]), np.array([vx, vy, vz]), epoch=dt)


def propagate_positions(
    kep: KeplerianElements, dts: np.ndarray, mu: GravParams = EARTH
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized propagation over an array of time offsets.

    Args:
        kep: orbit elements.
        dts: (n,) array of offsets from the elements' epoch, s.
        mu: central-body gravitational parameter.

    Returns:
        (positions, velocities) arrays of shape (n, 3).
    """
    gm = mu.mu_central_body
    dts = np.asarray(dts, dtype=float)
    m = (kep.mean_anomaly + math.sqrt(gm / kep.a**3) * dts) % TWO_PI
    ecc_anomaly = _solve_kepler_many(m, kep.e)
    ce, se = np.cos(ecc_anomaly), np.sin(ecc_anomaly)
    one_minus_ecos = 1.0 - kep.e * ce
    r = kep.a * one_minus_ecos
    cnu = (ce - kep.e) / one_minus_ecos
    snu = math.sqrt(1.0 - kep.e**2) * se / one_minus_ecos
    p = kep.a * (1.0 - kep.e**2)
    vcoef = math.sqrt(gm / p)
    rows = _rotation_rows(kep.i, kep.raan, kep.argp)
    px_pf, py_pf = r * cnu, r * snu
    vx_pf, vy_pf = -vcoef * snu, vcoef * (kep.e + cnu)
    positions = np.stack(
        [rows[k][0] * px_pf + rows[k][1] * py_pf for k in range(3)], axis=-1
    )
    velocities = np.stack(
        [rows[k][0] * vx_pf + rows[k][1] * vy_pf for k in range(3)], axis=-1
    )
    return positions, velocities


class Propagator(Protocol):
    """Anything that maps (elements, time offset) to a Cartesian state."""

    def state_at(self, kep: KeplerianElements, dt: float) -> StateVector: ...


@dataclass(frozen=True)
class TwoBodyPropagator:
    """Exact Keplerian propagation; the stand-in for higher-fidelity models."""

    mu: GravParams = EARTH

    def state_at(self, kep: KeplerianElements, dt: float) -> StateVector:
        return propagate(kep, dt, self.mu)
