"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np


def as_coords(X, dim=None, name="X"):
    """Coerce ``X`` to a 2-D float64 coordinate array, optionally checking width."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got ndim={X.ndim}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"{name} has {X.shape[1]} columns, expected {dim}")
    return X


def as_binary_labels(y, n=None, name="y"):
    """Coerce ``y`` to a 1-D array of {0, 1} labels."""
    y = np.asarray(y)
    if y.ndim != 1:
        y = y.ravel()
    vals = np.unique(y)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError(f"{name} must contain only 0/1 labels, got values {vals}")
    if n is not None and y.shape[0] != n:
        raise ValueError(f"{name} has length {y.shape[0]}, expected {n}")
    return y.astype(np.int8)


def as_probabilities(p, name="scores"):
    """Coerce to 1-D float64 probabilities in [0, 1]."""
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.size and (np.nanmin(p) < 0.0 or np.nanmax(p) > 1.0 or not np.all(np.isfinite(p))):
        raise ValueError(f"{name} must be finite probabilities in [0, 1]")
    return p


def require_finite(arr, name="array"):
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def round_half_up(x):
    """Round scalar or array half-up (0.5 -> 1), unlike banker's rounding."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)
