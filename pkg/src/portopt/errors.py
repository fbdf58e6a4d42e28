"""Exception types raised across the toolkit."""

from __future__ import annotations


class PortoptError(Exception):
    """Base class for toolkit errors."""


class ParseError(PortoptError):
    """Malformed content in an input file."""

    def __init__(self, message: str, *, file: str | None = None,
                 row: int | None = None, column: int | None = None):
        loc = ", ".join(
            part for part in (
                file,
                f"row {row}" if row is not None else None,
                f"column {column}" if column is not None else None,
            ) if part
        )
        super().__init__(f"{message} ({loc})" if loc else message)
        self.file = file
        self.row = row
        self.column = column


class ValidationError(PortoptError):
    """Input violates a documented invariant or domain restriction."""


class ConfigError(PortoptError):
    """Inconsistent or incomplete run configuration."""


class InsufficientDataError(PortoptError):
    """Not enough observations for the requested computation."""


class InfeasibleError(PortoptError):
    """Constraint set admits no feasible portfolio."""


class SingularMatrixError(PortoptError):
    """Covariance matrix cannot be factorized."""


class DegenerateSharpeError(PortoptError):
    """Sharpe maximization is unbounded or undefined for the inputs."""


class ConvergenceError(PortoptError):
    """Iterative solver exhausted its iteration budget."""


class SamplingError(PortoptError):
    """Random portfolio generation failed to find feasible points."""
