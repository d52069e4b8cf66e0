"""Input validation helpers shared by every module."""

import numbers

import numpy as np


def check_tensor(X, name="tensor", min_order=1, allow_nan=False, copy=False):
    """Validate a dense tensor and return it as a float64 ndarray.

    Parameters
    ----------
    X : array-like
        Candidate tensor.
    name : str
        Used in error messages.
    min_order : int
        Minimum number of modes.
    allow_nan : bool
        If True, NaN entries are accepted (they mark missing entries).
        Infinite entries are always rejected.
    copy : bool
        Force a copy even if ``X`` is already a float64 array.
    """
    arr = np.array(X, dtype=np.float64, copy=copy) if copy else np.asarray(X, dtype=np.float64)
    if arr.ndim < min_order:
        raise ValueError(f"{name} must have order >= {min_order}, got order {arr.ndim}")
    if any(n < 1 for n in arr.shape):
        raise ValueError(f"{name} has an empty mode: dims={arr.shape}")
    if allow_nan:
        if np.isinf(arr).any():
            raise ValueError(f"{name} contains infinite entries")
    elif not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_same_dims(A, B, what="tensors"):
    if A.shape != B.shape:
        raise ValueError(f"{what} have mismatched dims: {A.shape} vs {B.shape}")


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_fraction(value, name, low_inclusive=True):
    value = float(value)
    ok = (0.0 <= value <= 1.0) if low_inclusive else (0.0 < value <= 1.0)
    if not ok:
        bound = "[0, 1]" if low_inclusive else "(0, 1]"
        raise ValueError(f"{name} must lie in {bound}, got {value}")
    return value


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``.

    Accepts None, an integer, a ``SeedSequence`` or an existing Generator
    (returned as is).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a random generator from {seed!r}")
