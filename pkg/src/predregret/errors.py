"""Exception hierarchy shared by every module."""


class PredRegretError(Exception):
    """Base class for all package errors."""


class DomainError(PredRegretError, ValueError):
    """An argument lies outside (or on the boundary of) its admissible set."""


class NumericalDegeneracyError(PredRegretError, ArithmeticError):
    """A numerically computed matrix or quantity is degenerate."""


class NumericalFailureError(PredRegretError, ArithmeticError):
    """A result violates a mathematical guarantee beyond round-off."""


class NonConvergenceError(PredRegretError, ArithmeticError):
    """Adaptive refinement hit its cap without meeting the tolerance."""

    def __init__(self, message, previous=None, current=None):
        super().__init__(message)
        self.previous = previous
        self.current = current


class UnsupportedDimensionError(PredRegretError, ValueError):
    """The operation is only defined for a different parameter dimension."""


class InvalidHClassError(PredRegretError, ValueError):
    """Beta shape parameters do not yield a member of the smooth class H."""


class ConfigurationError(PredRegretError, ValueError):
    """Inconsistent or malformed configuration."""


class UnsupportedPairError(PredRegretError, NotImplementedError):
    """No exact predictive path exists for this model/prior pair."""
