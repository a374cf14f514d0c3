"""Exception types raised across the package."""


class TripodError(Exception):
    """Base class for all package errors."""


class NoIntersection(TripodError):
    """The plane through a point misses every arm of the tripod."""


class ZeroDirection(TripodError, ValueError):
    """A direction vector is (numerically) zero."""


class InsufficientGrid(TripodError, ValueError):
    """A grid is too small for the requested stencil."""


class InsufficientDerivOrder(TripodError, ValueError):
    """A processed grid carries the wrong number of y-derivatives."""


class OutOfRange(TripodError, ValueError):
    """A query lies outside the domain of a grid."""


class CRTError(TripodError):
    """Base class for CRT file and run-config errors."""


class BadMagic(CRTError):
    pass


class CrcMismatch(CRTError):
    pass


class SchemaMismatch(CRTError):
    pass


class SpecMismatch(TripodError, ValueError):
    """Two volumes do not share the same voxel layout."""
