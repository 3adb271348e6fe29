"""Convex-optimization kernels used by the portfolio solvers."""
from .barrier import BarrierProblem, BarrierSchedule, solve_barrier
from .lp import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, LinearProgram,
                 SolveStatus, solve_lp)
from .simplex import project_simplex

__all__ = [
    "BarrierProblem", "BarrierSchedule", "solve_barrier",
    "LinearProgram", "SolveStatus", "solve_lp", "project_simplex",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "ITERATION_LIMIT",
]
