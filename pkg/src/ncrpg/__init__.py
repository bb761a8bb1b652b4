"""Proximal gradient methods on Riemannian manifolds for nonsmooth nonconvex problems."""

from . import curvature, geometry, problems, prox, solver
from .curvature import Backtracking, ConstantStep, LevelSetBounds, StepsizeConstants, stepsize_constants
from .errors import NCRPGError
from .solver import SolveResult, SolverTrace, SplitProblem, solve

__all__ = [
    "Backtracking",
    "ConstantStep",
    "LevelSetBounds",
    "NCRPGError",
    "SolveResult",
    "SolverTrace",
    "SplitProblem",
    "StepsizeConstants",
    "curvature",
    "geometry",
    "problems",
    "prox",
    "solve",
    "solver",
    "stepsize_constants",
]

__version__ = "0.1.0"
