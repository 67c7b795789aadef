"""Exception types shared across the package.

The CLI maps each class to an exit code (see ``semispec.cli``).
"""


class SemispecError(Exception):
    """Base class for all package errors."""


class ParameterError(SemispecError, ValueError):
    """Invalid model or configuration parameter."""


class DataError(SemispecError, ValueError):
    """Input data is missing, malformed or too small."""


class EstimationError(SemispecError, RuntimeError):
    """An estimator cannot be formed from the available data."""


class NumericalError(SemispecError, ArithmeticError):
    """A numerical routine failed (factorization, quadrature, ...)."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
