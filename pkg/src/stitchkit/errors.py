"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, so every failure mode that a
user can trigger from a config file has a dedicated class here.
"""


class StitchkitError(Exception):
    """Base class for library errors."""


class InvalidRegionError(StitchkitError, ValueError):
    """An interval is out of range, empty, or regions are not adjacent."""


class DensityMatrixError(StitchkitError, ValueError):
    """An operator fails the density-matrix checks."""


class SizeLimitError(StitchkitError, ValueError):
    """A dense or replica contraction would exceed the supported size."""


class PreconditionError(StitchkitError, ValueError):
    """A documented precondition of an operation is not met."""


class AssumptionViolation(StitchkitError):
    """A spectral assumption (gap, overlap) of a transfer matrix fails.

    Attributes
    ----------
    quantity : str
        Name of the failing quantity.
    value : float
        Its measured value.
    """

    def __init__(self, message, quantity=None, value=None):
        super().__init__(message)
        self.quantity = quantity
        self.value = value


class ConvergenceError(StitchkitError):
    """Truncation or bond-dimension convergence could not be reached."""


class UnreliableEstimateError(StitchkitError, ValueError):
    """A stitched product received a non-positive factor."""
