"""Stitching estimators for purities and PT moments of one-dimensional many-body states.

Subpackages and modules
-----------------------
dense
    Exact dense-matrix oracle.
circuits
    Brickwork finite-depth circuits and factorization checks.
tn
    MPS sampling, thermal MPOs and MPDO transfer matrices.
shadows
    Randomized-measurement simulation and unbiased estimators.
stitch
    Local-to-global stitching and sample-complexity bounds.
afc
    Approximate factorization scans and diagnostics.
cli
    Batch experiment runner.
"""

__version__ = "0.1.0"

from . import afc, circuits, dense, shadows, stitch  # noqa: E402
from .errors import (  # noqa: E402
    AssumptionViolation,
    ConvergenceError,
    PreconditionError,
    StitchkitError,
)
from .regions import Interval  # noqa: E402

__all__ = [
    "__version__",
    "afc",
    "circuits",
    "dense",
    "shadows",
    "stitch",
    "Interval",
    "StitchkitError",
    "PreconditionError",
    "AssumptionViolation",
    "ConvergenceError",
]
