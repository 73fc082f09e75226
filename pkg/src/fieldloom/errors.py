"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, ``DataError``
exits 2, ``NumericError`` exits 3.
"""


class FieldloomError(Exception):
    """Base class for toolkit errors."""


class DataError(FieldloomError):
    """Unusable input data: missing files or columns, empty or degenerate sets."""


class NumericError(FieldloomError):
    """Numerical failure: non-finite losses, gradients, or parameters."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
