"""Exception types shared across the package."""


class LongmemError(Exception):
    """Base class for package errors."""


class InputError(LongmemError, ValueError):
    """Malformed user input (files, flags, data values)."""

    def __init__(self, message, line=None, column=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.column = column


class NumericalError(LongmemError, ArithmeticError):
    """A matrix that must be positive definite or invertible is not."""


class EstimationError(LongmemError, RuntimeError):
    """The optimizer found no admissible point.

    ``diagnostics`` carries per-start information for post-mortem.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MonteCarloError(LongmemError, RuntimeError):
    """Too many replications failed."""
