"""Discrete heat and eigen solvers on embedded grids and the 1D model."""

from .fields import LogField
from .grid import (Grid1D, Grid2D, Operator, build_grid, build_operator,
                   build_operator_1d)
from .model1d import Interval1DSolution, solve_1d_model
from .solvers import EigenPair, GridSolution, eigen_smallest, heat_solve


def log_field(solution: GridSolution, t: float = 0.0, **kw) -> LogField:
    """Evaluator for ``f = -log u`` and ``grad f`` at a stored time."""
    return solution.log_field(t, **kw)


__all__ = [
    "EigenPair", "Grid1D", "Grid2D", "GridSolution", "Interval1DSolution",
    "LogField", "Operator", "build_grid", "build_operator", "build_operator_1d",
    "eigen_smallest", "heat_solve", "log_field", "solve_1d_model",
]
