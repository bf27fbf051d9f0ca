"""Input validation helpers.

Small, sklearn-flavoured checks used by the estimators and the functional
API alike.  All of them return contiguous float64 arrays and raise
:class:`~relulift.errors.DimMismatch` (shapes) or ``ValueError`` (content).
"""

import numpy as np

from .errors import DimMismatch


def check_matrix(X, name="X"):
    """Coerce to a finite 2-d float64 array with at least one row/column."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise DimMismatch(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DimMismatch(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def check_vector(v, n=None, name="y"):
    """Coerce to a finite 1-d float64 array, optionally of length ``n``."""
    v = np.ascontiguousarray(v, dtype=float).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise DimMismatch(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_positive(x, name):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise ValueError(f"{name} must be a positive real, got {x!r}")
    return x


def readonly(a):
    """Return ``a`` with the writeable flag cleared (shared-safety)."""
    a = np.asarray(a)
    a.setflags(write=False)
    return a
