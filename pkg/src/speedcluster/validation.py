"""Input validation helpers shared by the estimator-style APIs."""

from __future__ import annotations

import numpy as np

from .errors import EmptySeries
from .model import ObservedSeries, SpeedSeries


def as_series(x, index=None) -> np.ndarray:
    """Coerce one series to a contiguous 1-D float64 array of observed values.

    Accepts ObservedSeries, SpeedSeries (missing buckets dropped) or any
    1-D array-like without NaNs. Raises EmptySeries when nothing remains.
    """
    if isinstance(x, ObservedSeries):
        return np.ascontiguousarray(x.values, dtype=np.float64)
    if isinstance(x, SpeedSeries):
        vals = x.values[x.present_mask]
        if vals.size == 0:
            raise EmptySeries(index=index)
        return np.ascontiguousarray(vals, dtype=np.float64)
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if np.isnan(arr).any():
        arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        raise EmptySeries(index=index)
    if not np.isfinite(arr).all():
        raise ValueError("series contains non-finite values")
    return arr


def as_series_list(X) -> list[np.ndarray]:
    """Coerce a collection of (possibly ragged) series for clustering.

    Accepts a list of series (each anything as_series takes) or a 2-D array
    whose NaN cells mark missing buckets. EmptySeries errors carry the index
    of the offending row.
    """
    if isinstance(X, np.ndarray) and X.ndim == 2:
        X = list(X)
    return [as_series(x, index=i) for i, x in enumerate(X)]
