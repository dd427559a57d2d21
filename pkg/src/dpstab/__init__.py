"""Stability laboratory for smooth Degasperis-Procesi solitary waves.

Profiles, weighted essential spectra, Evans-function winding counts,
Lax-pair squared eigenfunctions, generalized-kernel projections, and
linear/nonlinear decay experiments in exponentially weighted norms.
"""
from .wave import (
    ParameterError,
    SolverError,
    WaveParams,
    DerivedConstants,
    derived_constants,
    solve_profile,
    dc_profile,
    Profile,
)

__version__ = "0.1.0"

__all__ = [
    "ParameterError",
    "SolverError",
    "WaveParams",
    "DerivedConstants",
    "derived_constants",
    "solve_profile",
    "dc_profile",
    "Profile",
    "__version__",
]
