"""Numerical lab for continuous-state branching flows and their extremal limits."""

from .mechanism import Classification, Hints, Mechanism, classify, eval_psi

__all__ = [
    "Classification",
    "Hints",
    "Mechanism",
    "classify",
    "eval_psi",
]

__version__ = "0.1.0"
