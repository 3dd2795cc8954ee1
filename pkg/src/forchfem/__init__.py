"""Galerkin finite elements for the generalized Forchheimer equation.

Solves rho_t - div(K(|grad rho|) grad rho) = f on the unit square with a flux
boundary condition, using continuous P1/P2 elements and backward Euler.
"""

from .law import GeneralizedPolynomial, two_term_law
from .mesh import unit_square_mesh
from .fespace import build_space
from .solver import SolverConfig, run_simulation
from .cases import example1, example2

__all__ = [
    "GeneralizedPolynomial",
    "two_term_law",
    "unit_square_mesh",
    "build_space",
    "SolverConfig",
    "run_simulation",
    "example1",
    "example2",
]
