"""Exception types shared across the package."""


class OpgError(Exception):
    """Base class for library errors."""


class DomainError(OpgError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(OpgError, ValueError):
    """A documented precondition of an operation does not hold."""


class ConvergenceError(OpgError, RuntimeError):
    """A series or quadrature did not reach its tolerance.

    The best available estimate is kept on ``best`` so callers can still
    inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NonFiniteError(OpgError, FloatingPointError):
    """An integrand or input produced NaN or infinity."""


class SchemaError(OpgError, ValueError):
    """A scenario configuration does not validate."""
