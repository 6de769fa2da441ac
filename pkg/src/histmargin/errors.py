"""Exception types raised across the package."""


class HistMarginError(Exception):
    """Base class for all package errors."""


class DimensionError(HistMarginError, ValueError):
    """Point or index dimension does not match the grid."""


class DomainError(HistMarginError, ValueError):
    """A point lies outside X = [-1, 1]^d."""


class EmptySampleError(HistMarginError, ValueError):
    pass


class DatasetFormatError(HistMarginError, ValueError):
    """Malformed dataset or model file. ``row`` is 1-based when known."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class PreconditionError(HistMarginError, ValueError):
    pass


class CapacityError(HistMarginError, RuntimeError):
    """An enumeration would exceed its configured size cap."""


class EstimationError(HistMarginError, RuntimeError):
    """Too few usable points for a log-log fit."""


class OutOfRegimeError(HistMarginError, ValueError):
    """Parameters violate the constraint beta <= kappa / gamma of the width schedule."""
