"""Solvers and verification tools for O(n+1)-invariant Yamabe-type equations
on products of round spheres.

The invariant reduction turns the equation on S^n x S^n into a singular
radial ODE on [0, pi]; this package shoots it for nodal solutions, traces
positive-solution branches bifurcating from the constant solution, builds
the polynomial eigenfunctions that seed them, and re-verifies everything
against the geometry of the actual product manifold.
"""

from .params import (
    DerivedConstants,
    ProblemParams,
    bifurcation_lambda,
    critical_exponent,
    derive_constants,
    yamabe_parameters,
    yamabe_params,
)
from .shooter import IntegratorConfig, ShotResult, Trajectory, integrate_half

__version__ = "0.1.0"

__all__ = [
    "DerivedConstants",
    "ProblemParams",
    "IntegratorConfig",
    "ShotResult",
    "Trajectory",
    "bifurcation_lambda",
    "critical_exponent",
    "derive_constants",
    "integrate_half",
    "yamabe_parameters",
    "yamabe_params",
    "__version__",
]
