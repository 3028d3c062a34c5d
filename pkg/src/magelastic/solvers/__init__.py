"""Finite-element assembly and solvers for the elastic, magnetic and coupled problems."""
from .coupled import (DisplacementExtension, equilibrium_residual, magnetic_force_load, magnetic_stress_field,
                      solve, solve_coupled_model_a, solve_coupled_model_b, solve_decoupled, solve_elastic,
                      solve_magnetostatic)
from .linalg import LinearSystem, cg_solve
from .problem import AffineField, ProblemSpec, SolveReport, SolverSettings
from .single import assemble_elastic, assemble_magnetic, solve_magnetic

__all__ = [
    "AffineField", "ProblemSpec", "SolveReport", "SolverSettings", "LinearSystem", "cg_solve",
    "assemble_elastic", "assemble_magnetic", "solve_magnetic", "solve_elastic", "solve_magnetostatic",
    "solve_decoupled", "solve_coupled_model_a", "solve_coupled_model_b", "solve", "equilibrium_residual",
    "magnetic_force_load", "magnetic_stress_field", "DisplacementExtension",
]
