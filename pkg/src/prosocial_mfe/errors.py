"""Exception types raised by the solvers."""


class MFEError(Exception):
    """Base class for all package errors."""


class ParameterError(MFEError, ValueError):
    """Invalid model or scheme parameters."""


class DomainError(MFEError, ValueError):
    """Argument outside the support of a distribution operation."""


class EmptyBinError(MFEError, ValueError):
    """Conditional mean requested over an interval carrying no probability mass."""


class QuadratureError(MFEError, RuntimeError):
    """Adaptive quadrature hit its subdivision cap before meeting tolerance."""


class SolverError(MFEError, RuntimeError):
    """Fixed-point iteration failed to converge.

    The last iterate is kept on ``last_iterate`` so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class InfeasibleDesignError(SolverError):
    """Thresholds produce cutoffs that violate the bin ordering."""
