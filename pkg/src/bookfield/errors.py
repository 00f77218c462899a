"""Error taxonomy shared across the package.

ValueError marks invalid parameters or usage; DataError marks malformed or
unusable input data; NumericError marks a computation that failed or produced
a non-finite/non-normalizable result.  The CLI maps these to exit codes 2, 3
and 4 respectively.
"""
from __future__ import annotations

__all__ = ["DataError", "NumericError"]


class DataError(Exception):
    """Input data is malformed or insufficient."""


class NumericError(Exception):
    """A numerical procedure failed or its result is invalid."""
