"""Simulation and online parameter identification for a hybrid floating
wind / wave-energy platform (platform surge, pitch, heave plus three hinged
point absorbers)."""

from windwave_id.model import (
    ModeLayout,
    SystemParameters,
    ThetaMatrix,
    assemble_theta,
    build_regressor,
    params_from_theta,
    state_derivative,
)

__all__ = [
    "ModeLayout",
    "SystemParameters",
    "ThetaMatrix",
    "assemble_theta",
    "build_regressor",
    "params_from_theta",
    "state_derivative",
]

__version__ = "0.1.0"
