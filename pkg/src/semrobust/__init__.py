"""Robustness of causal claims in linear structural equation models."""

from .errors import (
    BudgetExceeded,
    DegenerateConditioning,
    DegenerateEvaluation,
    InconclusiveError,
    InputError,
    NotIdentified,
    NumericalFailure,
    SemRobustError,
)
from .graph import CausalGraph, Edge, EdgeKind
from .robustness import AnalysisConfig, Assumption, AssumptionSet, RobustnessReport, analyze
from .targets import TargetEdge, TotalEffect, parse_query

__all__ = [
    "AnalysisConfig",
    "Assumption",
    "AssumptionSet",
    "BudgetExceeded",
    "CausalGraph",
    "DegenerateConditioning",
    "DegenerateEvaluation",
    "Edge",
    "EdgeKind",
    "InconclusiveError",
    "InputError",
    "NotIdentified",
    "NumericalFailure",
    "RobustnessReport",
    "SemRobustError",
    "TargetEdge",
    "TotalEffect",
    "analyze",
    "parse_query",
]
