"""Input validation helpers in the spirit of ``sklearn.utils.validation``.

scikit-learn's own checkers reject complex input, so the few shapes used
here (detuning grids, complex susceptibility samples) get dedicated helpers.
"""

import numbers

import numpy as np


def check_scalar(value, name, *, min_val=None, max_val=None, strict=False):
    """Return ``value`` as float after a bounds check."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if min_val is not None:
        if strict and value <= min_val:
            raise ValueError(f"{name} must be > {min_val}, got {value}")
        if not strict and value < min_val:
            raise ValueError(f"{name} must be >= {min_val}, got {value}")
    if max_val is not None and value > max_val:
        raise ValueError(f"{name} must be <= {max_val}, got {value}")
    return value


def check_grid(grid, name="grid", *, strict=True, min_length=1):
    """Validate a 1-D, finite, increasing real grid and return it as float64."""
    arr = np.asarray(grid, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} point(s), got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    steps = np.diff(arr)
    if strict and np.any(steps <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if not strict and np.any(steps < 0):
        raise ValueError(f"{name} must be non-decreasing")
    return arr


def check_complex(values, name="values", *, length=None):
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.size != length:
        raise ValueError(f"{name} has length {arr.size}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_array(x):
    """Return ``(array, was_scalar)`` so vectorised code can echo the input kind."""
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def scalar_or_array(arr, was_scalar):
    if was_scalar:
        out = arr.reshape(-1)[0]
        return complex(out) if np.iscomplexobj(arr) else float(out)
    return arr
