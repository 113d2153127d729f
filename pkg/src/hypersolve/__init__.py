"""Solver and verification harness for linear symmetric hyperbolic systems
``A u_t + sum_i B_i u_{x_i} = 0`` on the unit cube.

Core pieces: dense pencil eigenroutines (:mod:`hypersolve.linalg`), dyadic
cell-centered grids and norms (:mod:`hypersolve.grid`), multilinear
interpolation (:mod:`hypersolve.interpolation`), the upwind splitting scheme
with CFL control and dissipative boundaries (:mod:`hypersolve.scheme`), a
problem library (:mod:`hypersolve.problems`), the empirical verification
harness (:mod:`hypersolve.harness`) and the ``hypersolve`` CLI
(:mod:`hypersolve.cli`).
"""
from ._backend import BACKEND as kernel_backend
from .grid import Grid, GridFunction, NormKind, SpaceTimeGridFunction, grid_norm, restrict, spacetime_norm
from .interpolation import interpolate, interpolate_spacetime
from .linalg import CanonicalTransform, SpectralDecomposition, SymMatrix, canonical_transform, pencil_eigenvalues, sym_eigen
from .problems import ProblemInstance, acoustics_system, advection_system, cells_in_domain, correctness_domain, elasticity_system, wave_to_acoustics
from .scheme import BoundarySpec, SymmetricSystem, cfl_timestep, check_dissipativity, energy_check, solve, step_multi

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec",
    "CanonicalTransform",
    "Grid",
    "GridFunction",
    "NormKind",
    "ProblemInstance",
    "SpaceTimeGridFunction",
    "SpectralDecomposition",
    "SymMatrix",
    "SymmetricSystem",
    "acoustics_system",
    "advection_system",
    "canonical_transform",
    "cells_in_domain",
    "cfl_timestep",
    "check_dissipativity",
    "correctness_domain",
    "elasticity_system",
    "energy_check",
    "grid_norm",
    "interpolate",
    "interpolate_spacetime",
    "kernel_backend",
    "pencil_eigenvalues",
    "restrict",
    "solve",
    "spacetime_norm",
    "step_multi",
    "sym_eigen",
    "wave_to_acoustics",
    "__version__",
]
