"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DimensionError, NumericError, ParameterError


def check_matrix(M, name="matrix", min_rows=1, min_cols=1):
    """Return ``M`` as a finite 2-D float64 array.

    Raises
    ------
    NumericError
        If any entry is NaN or infinite.
    DimensionError
        If ``M`` is not 2-D or is smaller than ``min_rows`` x ``min_cols``.
    """
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    try:
        arr = check_array(arr, ensure_min_samples=min_rows,
                          ensure_min_features=min_cols, input_name=name)
    except ValueError as exc:
        raise DimensionError(str(exc)) from exc
    return arr


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DimensionError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name, allow_zero=False):
    value = float(value)
    if not np.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ParameterError(f"{name} must be {bound}, got {value}")
    return value


def check_probability(q, name="q"):
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {q}")
    return q
