"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SemRobustError(Exception):
    """Base class for every error raised by semrobust."""


class InputError(SemRobustError, ValueError):
    """Malformed graph, query or model file."""


class DegenerateConditioning(SemRobustError, ArithmeticError):
    """A conditioning block of the covariance matrix is singular."""


class DegenerateEvaluation(SemRobustError, ArithmeticError):
    """An estimand ratio has a (numerically) vanishing denominator."""


class InconclusiveError(SemRobustError):
    """Random probing ran out of non-degenerate draws."""


class NumericalFailure(SemRobustError, ArithmeticError):
    """The finite-difference oracle produced unusable numbers."""


class BudgetExceeded(SemRobustError):
    """A lattice search visited more nodes than its configured cap."""

    def __init__(self, bound: int, what: str = "lattice search"):
        self.bound = bound
        super().__init__(f"{what} exceeded the budget of {bound} lattice nodes")


class NotIdentified(SemRobustError):
    """The query is not identified by the implemented criteria."""
