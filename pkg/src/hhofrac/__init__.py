"""Hybrid High-Order discretization of Darcy flow in a porous medium crossed
by a single fracture: mixed formulation in the bulk, primal formulation in
the fracture."""

from .assembly import ProblemData
from .driver import RunResult, run_problem

__all__ = ["ProblemData", "RunResult", "run_problem"]
__version__ = "0.1.0"
