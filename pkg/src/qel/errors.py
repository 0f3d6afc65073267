"""Exception hierarchy shared across the package."""


class QelError(Exception):
    """Base class for all package-specific errors."""


class DomainError(QelError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class NumericalError(QelError, ArithmeticError):
    """A computation lost too much precision to be trusted."""


class TruncationError(QelError, RuntimeError):
    """An event or term budget was exhausted before a computation finished."""
