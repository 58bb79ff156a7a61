"""Collision-avoidance maneuver lab.

A desk-scale workbench for autonomous spacecraft collision avoidance:
synthetic conjunction scenarios built by retrograde reconstruction, a
partially observable maneuver environment with an impulsive-thrust action
space, and a recurrent Q-learning agent trained from scratch on numpy.
"""

from camlab.orbits import (
    EARTH,
    EARTH_MU,
    DegenerateOrbitError,
    GravParams,
    HyperbolicOrbitError,
    KeplerianElements,
    StateVector,
    TwoBodyPropagator,
    elements_to_state,
    propagate,
    solve_kepler,
    state_to_elements,
)

__all__ = [
    "EARTH",
    "EARTH_MU",
    "DegenerateOrbitError",
    "GravParams",
    "HyperbolicOrbitError",
    "KeplerianElements",
    "StateVector",
    "TwoBodyPropagator",
    "elements_to_state",
    "propagate",
    "solve_kepler",
    "state_to_elements",
]

__version__ = "0.1.0"
