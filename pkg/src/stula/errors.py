"""Exception hierarchy."""

from __future__ import annotations


class StulaError(Exception):
    """Base class for all package errors."""


class InvalidInputError(StulaError, ValueError):
    """Malformed or non-finite input."""


class InvalidParameterError(StulaError, ValueError):
    """A numeric parameter is outside its admissible range."""


class NonFiniteError(StulaError, ArithmeticError):
    """Evaluation produced a non-finite value."""

    def __init__(self, message: str, x=None):
        super().__init__(message)
        self.x = x


class MissingMetadataError(StulaError, KeyError):
    """A potential lacks metadata needed by the requested operation."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class StepsizeError(InvalidParameterError):
    """Stepsize exceeds the admissible bound for the scheme."""


class DivergenceError(StulaError, RuntimeError):
    """Every chain of a run left the finite region.

    The partially filled batch is kept on ``batch``.
    """

    def __init__(self, message: str, batch=None, first_nonfinite_step=None):
        super().__init__(message)
        self.batch = batch
        self.first_nonfinite_step = first_nonfinite_step


class BoxTooSmallError(StulaError, ValueError):
    """Reference grid box does not contain the bulk of the density."""

    def __init__(self, message: str, edge: str | None = None):
        super().__init__(message)
        self.edge = edge


class NumericalFailureError(StulaError, RuntimeError):
    """Iterative solver failed to converge."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class SchemaError(StulaError, ValueError):
    """CSV or config content does not match the expected schema."""


class ConfigError(StulaError, ValueError):
    """Experiment configuration failed validation."""
