"""Gittins indices for spectrally one-sided Lévy bandits observed at Poisson epochs."""

from .errors import (
    ConfigError,
    Degenerate,
    DomainError,
    IntegrabilityError,
    NoBracket,
    NonConvergent,
    NotMonotone,
    NumericalError,
    TruncationWarning,
)
from .gittins import GittinsEvaluator, IndexMeasure, Problem, convergence_sweep, reward_R_from_r
from .levy import Family, LevyModel, Orientation, RewardSpec, laplace_exponent, phi
from .numerics import InversionSpec, QuadratureSpec
from .scale import Method, ScaleEvaluator

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Degenerate",
    "DomainError",
    "Family",
    "GittinsEvaluator",
    "IndexMeasure",
    "IntegrabilityError",
    "InversionSpec",
    "LevyModel",
    "Method",
    "NoBracket",
    "NonConvergent",
    "NotMonotone",
    "NumericalError",
    "Orientation",
    "Problem",
    "QuadratureSpec",
    "RewardSpec",
    "ScaleEvaluator",
    "TruncationWarning",
    "convergence_sweep",
    "laplace_exponent",
    "phi",
    "reward_R_from_r",
]
