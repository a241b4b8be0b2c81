"""Penalty-regulated, Tikhonov-regularized Tseng dynamics for constrained monotone inclusions."""

from .errors import (
    ConstructionError,
    ContractError,
    DivergenceError,
    NonConvergenceError,
    NumericalError,
    PreconditionError,
)
from .operators import ProblemInstance, eval_V, lipschitz_modulus
from .schedules import Schedule, power_law_schedule, validate_schedule
from .integrator import IntegratorConfig, Trajectory, integrate
from .oracle import least_norm_solution, solve_auxiliary

__version__ = "0.1.0"

__all__ = [
    "ConstructionError", "ContractError", "DivergenceError", "NonConvergenceError", "NumericalError",
    "PreconditionError", "ProblemInstance", "eval_V", "lipschitz_modulus", "Schedule", "power_law_schedule",
    "validate_schedule", "IntegratorConfig", "Trajectory", "integrate", "least_norm_solution", "solve_auxiliary",
]
