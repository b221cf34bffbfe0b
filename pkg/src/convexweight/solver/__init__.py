"""Cone-program builder and the interior-point engine."""

from .program import ConeProgram, SolveResult, SolverFailure

__all__ = ["ConeProgram", "SolveResult", "SolverFailure"]
