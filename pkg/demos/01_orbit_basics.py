"""Walk through the two body orbit toolkit.

Covers element and state conversions, the Kepler equation solver, and
propagation, and checks that energy and angular momentum stay constant
along a propagated orbit.
"""

import numpy as np

from camlab.orbits import (
    EARTH_MU,
    KeplerianElements,
    StateVector,
    elements_to_state,
    orbital_period,
    propagate,
    solve_kepler,
    state_to_elements,
)


def specific_energy(state):
    r = np.linalg.norm(state.position)
    v = np.linalg.norm(state.velocity)
    return 0.5 * v * v - EARTH_MU / r


def main():
    print("=== 1. Kepler equation ===")
    for mean_anomaly, ecc in [(0.5, 0.0), (2.0, 0.3), (6.0, 0.9)]:
        eccentric = solve_kepler(mean_anomaly, ecc)
        residual = eccentric - ecc * np.sin(eccentric) - mean_anomaly
        print(f"M={mean_anomaly:.1f} e={ecc:.1f} -> E={eccentric:.12f} residual={residual:.2e}")

    print()
    print("=== 2. Elements <-> state round trip ===")
    kep = KeplerianElements(
        a=7.0e6, e=0.01, i=0.9, raan=0.4, argp=1.1, mean_anomaly=0.2
    )
    state = elements_to_state(kep)
    back = state_to_elements(state)
    print(f"position [m]    {state.position}")
    print(f"velocity [m/s]  {state.velocity}")
    print(f"a error [m]     {abs(back.a - kep.a):.2e}")
    print(f"e error         {abs(back.e - kep.e):.2e}")

    print()
    print("=== 3. Conservation along one period ===")
    period = orbital_period(kep)
    print(f"period = {period:.1f} s")
    e0 = specific_energy(state)
    h0 = np.cross(state.position, state.velocity)
    worst_energy = 0.0
    worst_momentum = 0.0
    for t in np.linspace(0.0, period, 25):
        st = propagate(kep, t)
        worst_energy = max(worst_energy, abs(specific_energy(st) - e0) / abs(e0))
        h = np.cross(st.position, st.velocity)
        worst_momentum = max(
            worst_momentum, np.linalg.norm(h - h0) / np.linalg.norm(h0)
        )
    print(f"max relative energy drift   {worst_energy:.2e}")
    print(f"max relative momentum drift {worst_momentum:.2e}")

    print()
    print("=== 4. State constructed from a position and velocity ===")
    r0 = np.array([7.0e6, 0.0, 0.0])
    v0 = np.array([0.0, 7.6e3, 0.5e3])
    kep2 = state_to_elements(StateVector(r0, v0))
    print(f"a = {kep2.a / 1e3:.1f} km, e = {kep2.e:.4f}, i = {np.degrees(kep2.i):.2f} deg")


if __name__ == "__main__":
    main()
