"""Tests for two-body orbital mechanics."""

import math

import numpy as np
import pytest

from camlab.orbits import (
    EARTH,
    EARTH_MU,
    TWO_PI,
    DegenerateOrbitError,
    GravParams,
    HyperbolicOrbitError,
    KeplerianElements,
    StateVector,
    TwoBodyPropagator,
    angle_difference,
    elements_to_state,
    mean_motion,
    orbital_period,
    propagate,
    propagate_positions,
    solve_kepler,
    state_to_elements,
    wrap_angle,
)


def random_elliptical(rng):
    """A random well-conditioned elliptical orbit."""
    return KeplerianElements(
        a=rng.uniform(6.6e6, 5.0e7),
        e=rng.uniform(0.0, 0.9),
        i=rng.uniform(0.0, math.pi),
        raan=rng.uniform(0.0, TWO_PI),
        argp=rng.uniform(0.0, TWO_PI),
        mean_anomaly=rng.uniform(0.0, TWO_PI),
    )


def specific_energy(state, gm=EARTH_MU):
    r = np.linalg.norm(state.position)
    v = np.linalg.norm(state.velocity)
    return 0.5 * v * v - gm / r


class TestAngles:
    def test_wrap_angle_range(self):
        rng = np.random.default_rng(7)
        for x in rng.uniform(-50.0, 50.0, size=1000):
            w = wrap_angle(float(x))
            assert 0.0 <= w < TWO_PI
            assert math.isclose(math.sin(w), math.sin(x), abs_tol=1e-9)
            assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)

    def test_angle_difference_signed_range(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            a, b = rng.uniform(-20, 20, size=2)
            d = angle_difference(float(a), float(b))
            assert -math.pi < d <= math.pi
            assert math.isclose(math.sin(d), math.sin(a - b), abs_tol=1e-9)

    def test_angle_difference_identity(self):
        assert angle_difference(1.5, 1.5) == 0.0


class TestSolveKepler:
    def test_zero_anomaly_fixed_point(self):
        assert solve_kepler(0.0, 0.5) == 0.0

    def test_circular_orbit_identity(self):
        assert solve_kepler(1.0, 0.0) == 1.0

    def test_known_value(self):
        # Independent bisection on f(E) = E - 0.3*sin(E) - 2.0 over [0, 2*pi).
        assert solve_kepler(2.0, 0.3) == pytest.approx(2.236031495172436, abs=1e-11)

    def test_residual_below_tolerance(self):
        rng = np.random.default_rng(42)
        for _ in range(500):
            m = rng.uniform(0.0, TWO_PI)
            e = rng.uniform(0.0, 0.99)
            ecc = solve_kepler(m, e)
            assert abs(ecc - e * math.sin(ecc) - m) <= 1e-12
            assert 0.0 <= ecc < TWO_PI

    def test_high_eccentricity_near_periapsis(self):
        for m in (1e-8, 1e-4, 0.01):
            ecc = solve_kepler(m, 0.999)
            assert abs(ecc - 0.999 * math.sin(ecc) - m) <= 1e-12

    def test_monotone_in_mean_anomaly(self):
        ms = np.linspace(0.0, TWO_PI - 1e-9, 200)
        es = [solve_kepler(float(m), 0.7) for m in ms]
        assert all(b > a for a, b in zip(es, es[1:]))

    def test_rejects_bad_eccentricity(self):
        with pytest.raises(ValueError):
            solve_kepler(1.0, 1.0)
        with pytest.raises(ValueError):
            solve_kepler(1.0, -0.1)
        with pytest.raises(ValueError):
            solve_kepler(1.0, 0.5, tol=0.0)


class TestTypes:
    def test_elements_normalize_angles(self):
        kep = KeplerianElements(7e6, 0.1, 0.5, raan=7.0, argp=-1.0, mean_anomaly=4 * math.pi + 0.25)
        assert 0.0 <= kep.raan < TWO_PI
        assert kep.argp == pytest.approx(TWO_PI - 1.0)
        assert kep.mean_anomaly == pytest.approx(0.25)

    def test_elements_reject_invalid(self):
        with pytest.raises(ValueError):
            KeplerianElements(-7e6, 0.1, 0.5, 0.0, 0.0, 0.0)
        with pytest.raises(HyperbolicOrbitError):
            KeplerianElements(7e6, 1.0, 0.5, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            KeplerianElements(7e6, 0.1, 3.5, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            KeplerianElements(7e6, math.nan, 0.5, 0.0, 0.0, 0.0)

    def test_state_vector_is_immutable(self):
        s = StateVector(np.array([7e6, 0, 0]), np.array([0, 7.5e3, 0]))
        with pytest.raises((ValueError, RuntimeError)):
            s.position[0] = 0.0

    def test_state_vector_shape_check(self):
        with pytest.raises(ValueError):
            StateVector(np.zeros(2), np.zeros(3))

    def test_grav_params_positive(self):
        with pytest.raises(ValueError):
            GravParams(0.0)


class TestElementsToState:
    def test_circular_equatorial_reference(self):
        kep = KeplerianElements(a=7e6, e=0.0, i=0.0, raan=0.0, argp=0.0, mean_anomaly=0.0)
        state = elements_to_state(kep)
        assert state.position == pytest.approx([7e6, 0.0, 0.0])
        # Independent vis-viva value: sqrt(mu / a).
        assert np.linalg.norm(state.velocity) == pytest.approx(7546.053290107542, rel=1e-12)
        assert state.velocity[1] > 0.0
        assert state.velocity[0] == pytest.approx(0.0, abs=1e-9)
        assert state.velocity[2] == pytest.approx(0.0, abs=1e-9)

    def test_periapsis_radius(self):
        kep = KeplerianElements(a=8e6, e=0.3, i=1.0, raan=2.0, argp=3.0, mean_anomaly=0.0)
        state = elements_to_state(kep)
        assert np.linalg.norm(state.position) == pytest.approx(8e6 * 0.7, rel=1e-12)

    def test_vis_viva_random_orbits(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            kep = random_elliptical(rng)
            state = elements_to_state(kep)
            r = np.linalg.norm(state.position)
            v2 = float(np.dot(state.velocity, state.velocity))
            assert v2 == pytest.approx(EARTH_MU * (2.0 / r - 1.0 / kep.a), rel=1e-10)


class TestStateToElements:
    def test_inverse_of_circular_construction(self):
        kep = KeplerianElements(a=7e6, e=0.0, i=0.0, raan=0.0, argp=0.0, mean_anomaly=0.0)
        out = state_to_elements(elements_to_state(kep))
        assert out.a == pytest.approx(7e6, rel=1e-12)
        assert out.e == pytest.approx(0.0, abs=1e-12)
        assert out.i == pytest.approx(0.0, abs=1e-12)

    def test_radial_trajectory_is_degenerate(self):
        state = StateVector(np.array([7e6, 0.0, 0.0]), np.array([100.0, 0.0, 0.0]))
        with pytest.raises(DegenerateOrbitError):
            state_to_elements(state)

    def test_escape_speed_is_hyperbolic(self):
        r = 7e6
        v_escape = math.sqrt(2.0 * EARTH_MU / r)
        state = StateVector(np.array([r, 0.0, 0.0]), np.array([0.0, v_escape, 0.0]))
        with pytest.raises(HyperbolicOrbitError):
            state_to_elements(state)

    def test_round_trip_elements(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            kep = random_elliptical(rng)
            out = state_to_elements(elements_to_state(kep))
            assert out.a == pytest.approx(kep.a, rel=1e-6)
            assert out.e == pytest.approx(kep.e, abs=1e-6)
            assert out.i == pytest.approx(kep.i, abs=1e-6)
            assert angle_difference(out.raan, kep.raan) == pytest.approx(0.0, abs=1e-6)
            assert angle_difference(out.argp, kep.argp) == pytest.approx(0.0, abs=1e-6)
            assert angle_difference(out.mean_anomaly, kep.mean_anomaly) == pytest.approx(0.0, abs=1e-6)

    def test_round_trip_state(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            kep = random_elliptical(rng)
            state = elements_to_state(kep)
            back = elements_to_state(state_to_elements(state))
            assert np.allclose(back.position, state.position, rtol=1e-9, atol=1e-3)
            assert np.allclose(back.velocity, state.velocity, rtol=1e-9, atol=1e-6)


class TestPropagate:
    def test_zero_dt_matches_construction(self):
        rng = np.random.default_rng(21)
        kep = random_elliptical(rng)
        s0 = elements_to_state(kep)
        s1 = propagate(kep, 0.0)
        assert np.array_equal(s0.position, s1.position)
        assert np.array_equal(s0.velocity, s1.velocity)

    def test_full_period_returns_to_start(self):
        kep = KeplerianElements(a=7e6, e=0.2, i=0.8, raan=1.0, argp=2.0, mean_anomaly=0.5)
        period = orbital_period(kep)
        assert period == pytest.approx(5828.516637686015 * (7e6 / 7e6) ** 1.5, rel=1e-12)
        s0 = propagate(kep, 0.0)
        s1 = propagate(kep, period)
        assert np.allclose(s1.position, s0.position, rtol=1e-6, atol=1e-2)
        assert np.allclose(s1.velocity, s0.velocity, rtol=1e-6, atol=1e-5)

    def test_half_period_circular_antipodal(self):
        kep = KeplerianElements(a=7e6, e=0.0, i=0.3, raan=0.7, argp=0.0, mean_anomaly=1.2)
        period = orbital_period(kep)
        s0 = propagate(kep, 0.0)
        s1 = propagate(kep, 0.5 * period)
        assert np.allclose(s1.position, -s0.position, rtol=1e-9, atol=1e-3)

    def test_energy_and_momentum_conserved(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            kep = random_elliptical(rng)
            period = orbital_period(kep)
            e0 = -EARTH_MU / (2.0 * kep.a)
            h0 = np.linalg.norm(np.cross(*(lambda s: (s.position, s.velocity))(propagate(kep, 0.0))))
            for dt in rng.uniform(0.0, 10.0 * period, size=5):
                s = propagate(kep, float(dt))
                assert specific_energy(s) == pytest.approx(e0, rel=1e-9)
                h = np.linalg.norm(np.cross(s.position, s.velocity))
                assert h == pytest.approx(h0, rel=1e-9)

    def test_rejects_non_finite_dt(self):
        kep = KeplerianElements(7e6, 0.1, 0.5, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            propagate(kep, math.inf)

    def test_mean_motion(self):
        kep = KeplerianElements(7e6, 0.1, 0.5, 0.0, 0.0, 0.0)
        assert mean_motion(kep) == pytest.approx(TWO_PI / orbital_period(kep), rel=1e-12)


class TestPropagateMany:
    def test_matches_scalar_propagate(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            kep = random_elliptical(rng)
            dts = rng.uniform(-1e4, 1e5, size=16)
            positions, velocities = propagate_positions(kep, dts)
            for k, dt in enumerate(dts):
                s = propagate(kep, float(dt))
                assert np.allclose(positions[k], s.position, rtol=1e-9, atol=1e-3)
                assert np.allclose(velocities[k], s.velocity, rtol=1e-9, atol=1e-6)

    def test_output_shapes(self):
        kep = KeplerianElements(7e6, 0.1, 0.5, 0.0, 0.0, 0.0)
        positions, velocities = propagate_positions(kep, np.linspace(0, 1e4, 7))
        assert positions.shape == (7, 3)
        assert velocities.shape == (7, 3)


class TestPropagatorInterface:
    def test_two_body_propagator_wraps_propagate(self):
        kep = KeplerianElements(7.2e6, 0.05, 1.0, 0.2, 0.3, 0.4)
        prop = TwoBodyPropagator()
        s = prop.state_at(kep, 500.0)
        ref = propagate(kep, 500.0)
        assert np.array_equal(s.position, ref.position)
        assert s.epoch == 500.0
