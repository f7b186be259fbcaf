"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numeric failures (divergence, non-convergence) with 3.
"""


class MultifidError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(MultifidError):
    """Two array shapes that were required to conform do not."""

    def __init__(self, op: str, got, expected):
        self.op = op
        self.got = tuple(got)
        self.expected = tuple(expected)
        super().__init__(f"{op}: shape {self.got} does not conform to {self.expected}")


class ConfigError(MultifidError):
    """Invalid configuration value, field, or combination."""


class DomainError(MultifidError):
    """An input lies outside a benchmark's declared domain."""


class NumericError(MultifidError):
    """A numeric procedure diverged or failed to converge."""


class StaleTapeError(MultifidError):
    """A tape was asked to run its reverse sweep a second time."""


class DatasetFormatError(MultifidError):
    """A dataset directory or CSV file is malformed."""
