"""Exception hierarchy.

All errors raised on purpose by this package derive from
:class:`LopashkaError` so callers can catch library failures in one
clause while letting genuine bugs (plain ``Exception``) escape.
"""

__all__ = [
    "LopashkaError",
    "ArgumentError",
    "AssumptionError",
    "ConsistencyError",
]


class LopashkaError(Exception):
    """Base class for all package errors."""


class ArgumentError(LopashkaError):
    """Raised when a caller-supplied argument is invalid.

    Examples: dimension mismatches, malformed problem files, grids whose
    tangential point counts are not powers of two.
    """


class AssumptionError(LopashkaError):
    """Raised when a mathematical precondition fails.

    Examples: singular leading normal coefficient, spectral gap below the
    admissible minimum, boundary-map condition number above the
    invertibility threshold, parameter outside the admissible sector.
    """


class ConsistencyError(LopashkaError):
    """Raised when an internal cross-check fails.

    These indicate a broken invariant of the computation itself, for
    instance leakage out of the stable subspace or a finite-difference
    stencil that does not reproduce its defining moment conditions.
    """
