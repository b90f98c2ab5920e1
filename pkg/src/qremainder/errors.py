"""Exception hierarchy shared by every module.

Each family maps to a stable CLI exit code (see ``EXIT_CODES``).
"""


class QRemainderError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(QRemainderError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 3


class BudgetError(QRemainderError):
    """The requested evaluation would exceed the configured term budget."""

    exit_code = 4


class ToleranceError(QRemainderError):
    """A numerical procedure did not reach its requested tolerance.

    ``estimate`` and ``error`` carry the best value achieved.
    """

    exit_code = 5

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConvergenceError(ToleranceError):
    pass


class UnsupportedModelError(QRemainderError):
    """The model lacks the metadata (monotonicity, derivative norms, shape) an operation needs."""

    exit_code = 6


class DepthError(DomainError):
    pass


class ZeroDensityError(DomainError):
    pass


class PrecisionError(QRemainderError):
    """Fixed-point precision is insufficient for the requested digit depth."""

    exit_code = 7


class RejectionBudgetError(QRemainderError):
    exit_code = 8


EXIT_CODES = {
    "ok": 0,
    "usage": 2,
    "domain": DomainError.exit_code,
    "budget": BudgetError.exit_code,
    "tolerance": ToleranceError.exit_code,
    "unsupported": UnsupportedModelError.exit_code,
    "precision": PrecisionError.exit_code,
    "rejection": RejectionBudgetError.exit_code,
}
