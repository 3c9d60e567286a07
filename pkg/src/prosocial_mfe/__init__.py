"""Mean-field equilibria of prosocial action under coarse feedback.

Agents with private intrinsic value ``w`` pick an action ``a`` at quadratic
cost ``alpha*a^2/2`` and earn ``beta`` times the society's estimate of ``w``
given what the feedback scheme reveals. The package solves the equilibrium
for full revelation (type-A), one threshold (type-B) and several thresholds
(type-Bm), and scores each design by aggregate action ``W`` and privacy ``V``.
"""

from .distributions import Distribution, EmpiricalTable, Exponential, Uniform, Weibull, parse_distribution
from .errors import (
    DomainError,
    EmptyBinError,
    InfeasibleDesignError,
    MFEError,
    ParameterError,
    QuadratureError,
    SolverError,
)
from .metrics import DesignReport, build_report, privacy_binned, privacy_type_a
from .model import ModelParams, TypeA, TypeB, TypeBm

__version__ = "0.1.0"

__all__ = [
    "DesignReport",
    "Distribution",
    "DomainError",
    "EmpiricalTable",
    "EmptyBinError",
    "Exponential",
    "InfeasibleDesignError",
    "MFEError",
    "ModelParams",
    "ParameterError",
    "QuadratureError",
    "SolverError",
    "TypeA",
    "TypeB",
    "TypeBm",
    "Uniform",
    "Weibull",
    "build_report",
    "parse_distribution",
    "privacy_binned",
    "privacy_type_a",
]
