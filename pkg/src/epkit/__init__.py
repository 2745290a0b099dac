"""Numerical verification toolkit for covering numbers, multiscale chaining
bounds, concentration inequalities, and localized least-squares rates."""

from . import chaining, discrete, gaussian, maurey, metric, regression, reports
from .rng import derive_rng

__version__ = "0.1.0"

__all__ = [
    "chaining",
    "discrete",
    "gaussian",
    "maurey",
    "metric",
    "regression",
    "reports",
    "derive_rng",
]
