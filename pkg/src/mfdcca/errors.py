"""Exception hierarchy.

The CLI maps these onto exit codes: ``ConfigError`` -> 1, ``DataError`` -> 2,
``DegenerateError`` -> 3.
"""


class MfdccaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MfdccaError, ValueError):
    """Invalid analysis or generator parameters."""


class DataError(MfdccaError, ValueError):
    """Input data that cannot be analysed (empty, non-finite, ragged, too short)."""


class DegenerateError(MfdccaError, ArithmeticError):
    """A numerical degeneracy, e.g. a zero box covariance under a non-positive moment."""

    def __init__(self, message, q=None, s=None):
        self.q = q
        self.s = s
        where = []
        if q is not None:
            where.append(f"q={q:g}")
        if s is not None:
            where.append(f"s={s}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
