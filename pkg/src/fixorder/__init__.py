"""Fixed-order controller synthesis by closed-loop abscissa minimization."""

from .errors import ConvergenceError, DomainError, NonsmoothPointError
from .plant import BENCHMARK, Controller, Plant, closed_loop_poly, objective
from .poly import Poly, RootSet, abscissa, roots, shift

__all__ = [
    "BENCHMARK",
    "Controller",
    "ConvergenceError",
    "DomainError",
    "NonsmoothPointError",
    "Plant",
    "Poly",
    "RootSet",
    "abscissa",
    "closed_loop_poly",
    "objective",
    "roots",
    "shift",
]

__version__ = "0.1.0"
