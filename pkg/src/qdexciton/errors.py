"""Exception types raised across the package."""


class QdExcitonError(Exception):
    """Base class for all package errors."""


class DomainError(QdExcitonError, ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceError(QdExcitonError):
    """The request would exceed a hard size guard."""


class ConvergenceError(QdExcitonError, RuntimeError):
    """An iterative procedure failed to converge."""


class DegenerateConditionError(QdExcitonError, ArithmeticError):
    """A quantization condition divides by a vanishing coefficient."""


class InsufficientDataError(QdExcitonError, ValueError):
    """Too few series coefficients for a reliable diagnosis."""


class NonNormalizableError(QdExcitonError, ValueError):
    """A non-terminating series was offered where a polynomial is required."""


class BracketError(QdExcitonError, ValueError):
    """An eigenvalue bracket does not isolate exactly one root."""


class ConfigError(QdExcitonError, ValueError):
    """Malformed or invalid material configuration."""
