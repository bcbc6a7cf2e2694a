"""Dynamic Time Warping distance over variable-length series.

The accumulated-cost recurrence is

    cost[i][j] = d(a_i, b_j) + min(cost[i-1][j-1], cost[i][j-1], cost[i-1][j])

with cost[0][0] = 0 and infinite first row/column, so cost[n][m] is the
distance. The local distance d defaults to the absolute difference; squared
difference is available. DTW is symmetric for symmetric d and is zero on
identical inputs, but it does not satisfy the triangle inequality — nothing
here may assume it does.

Distance-only queries run on two rolling rows (O(min) memory); the full
matrix is materialized only when an alignment path is requested. An optional
Sakoe-Chiba window bounds |i - j| for speed; it is off by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .validation import as_series, as_series_list

LOCAL_DISTANCES = ("absolute", "squared")

_LOCAL_FLAGS = {"absolute": 0, "squared": 1}


def _local_flag(local: str) -> int:
    try:
        return _LOCAL_FLAGS[local]
    except KeyError:
        raise ValueError(f"local must be one of {LOCAL_DISTANCES}, got {local!r}")


def _window_arg(window) -> int:
    if window is None:
        return -1
    w = int(window)
    if w < 0:
        raise ValueError("window must be non-negative")
    return w


@nb.njit(cache=True)
def _local_dist(x, y, metric):
    d = x - y
    if metric == 0:
        return abs(d)
    return d * d


@nb.njit(cache=True)
def _dtw_cost(a, b, metric, window):
    """Distance-only DP on two rolling rows."""
    n = a.shape[0]
    m = b.shape[0]
    if window >= 0:
        # a band narrower than |n - m| admits no path; widen to keep DTW defined
        d = n - m if n > m else m - n
        if window < d:
            window = d
    prev = np.full(m + 1, np.inf)
    curr = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        curr[0] = np.inf
        lo = 1
        hi = m
        if window >= 0:
            if i - window > 1:
                lo = i - window
            if i + window < m:
                hi = i + window
        for j in range(1, m + 1):
            if j < lo or j > hi:
                curr[j] = np.inf
                continue
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if curr[j - 1] < best:
                best = curr[j - 1]
            curr[j] = _local_dist(a[i - 1], b[j - 1], metric) + best
        tmp = prev
        prev = curr
        curr = tmp
    return prev[m]


@nb.njit(cache=True)
def _dtw_matrix(a, b, metric, window):
    """Full (n+1) x (m+1) accumulated-cost matrix, for path extraction."""
    n = a.shape[0]
    m = b.shape[0]
    if window >= 0:
        d = n - m if n > m else m - n
        if window < d:
            window = d
    cost = np.full((n + 1, m + 1), np.inf)
    cost[0, 0] = 0.0
    for i in range(1, n + 1):
        lo = 1
        hi = m
        if window >= 0:
            if i - window > 1:
                lo = i - window
            if i + window < m:
                hi = i + window
        for j in range(lo, hi + 1):
            best = cost[i - 1, j - 1]
            if cost[i - 1, j] < best:
                best = cost[i - 1, j]
            if cost[i, j - 1] < best:
                best = cost[i, j - 1]
            cost[i, j] = _local_dist(a[i - 1], b[j - 1], metric) + best
    return cost


@nb.njit(cache=True, parallel=True)
def _pairwise_upper(data, lengths, rows, cols, metric, window, out):
    # independent (i, j) pairs; single write per cell keeps the result
    # bit-identical regardless of scheduling
    for p in nb.prange(rows.shape[0]):
        i = rows[p]
        j = cols[p]
        out[p] = _dtw_cost(data[i, : lengths[i]], data[j, : lengths[j]], metric, window)


@nb.njit(cache=True, parallel=True)
def _cross(data_a, len_a, data_b, len_b, metric, window, out):
    na = len_a.shape[0]
    nb_ = len_b.shape[0]
    for p in nb.prange(na * nb_):
        i = p // nb_
        j = p % nb_
        out[i, j] = _dtw_cost(
            data_a[i, : len_a[i]], data_b[j, : len_b[j]], metric, window
        )


@dataclass(frozen=True)
class AlignmentPath:
    """A monotone, continuous warping path of 1-based (i, j) index pairs."""

    pairs: tuple[tuple[int, int], ...]

    def cost(self, a, b, local: str = "absolute") -> float:
        """Sum of local distances along the path (should equal the distance)."""
        a = as_series(a)
        b = as_series(b)
        metric = _local_flag(local)
        total = 0.0
        for i, j in self.pairs:
            x = a[i - 1] - b[j - 1]
            total += abs(x) if metric == 0 else x * x
        return total


def dtw_distance(a, b, local: str = "absolute", window: int | None = None) -> float:
    """DTW distance between two non-empty series.

    `a` and `b` may be ObservedSeries, SpeedSeries (missing buckets dropped)
    or plain 1-D arrays. `window` optionally constrains |i - j|.
    """
    av = as_series(a)
    bv = as_series(b)
    return float(_dtw_cost(av, bv, _local_flag(local), _window_arg(window)))


def accumulated_cost_matrix(a, b, local: str = "absolute", window: int | None = None) -> np.ndarray:
    """The filled (n+1) x (m+1) DP matrix; corner [n, m] is the distance."""
    av = as_series(a)
    bv = as_series(b)
    return _dtw_matrix(av, bv, _local_flag(local), _window_arg(window))


def _backtrack(cost: np.ndarray) -> tuple[tuple[int, int], ...]:
    # ties broken diagonal > left > up for reproducibility
    i, j = cost.shape[0] - 1, cost.shape[1] - 1
    pairs = [(i, j)]
    while (i, j) != (1, 1):
        diag = cost[i - 1, j - 1]
        left = cost[i, j - 1]
        up = cost[i - 1, j]
        if diag <= left and diag <= up:
            i, j = i - 1, j - 1
        elif left <= up:
            j = j - 1
        else:
            i = i - 1
        pairs.append((i, j))
    pairs.reverse()
    return tuple(pairs)


def dtw_alignment(
    a, b, local: str = "absolute", window: int | None = None
) -> tuple[float, AlignmentPath]:
    """DTW distance plus the warping path recovered by backtracking."""
    av = as_series(a)
    bv = as_series(b)
    cost = _dtw_matrix(av, bv, _local_flag(local), _window_arg(window))
    return float(cost[-1, -1]), AlignmentPath(pairs=_backtrack(cost))


def pad_series(series: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pack ragged series into a padded matrix plus a lengths vector."""
    lengths = np.array([s.shape[0] for s in series], dtype=np.int64)
    data = np.zeros((len(series), int(lengths.max())), dtype=np.float64)
    for i, s in enumerate(series):
        data[i, : s.shape[0]] = s
    return data, lengths


def pairwise_distances(series, local: str = "absolute", window: int | None = None) -> np.ndarray:
    """Symmetric matrix of DTW distances; M[i][i] = 0.

    Pairs are computed independently (in parallel) and mirrored, so the
    result does not depend on scheduling. EmptySeries errors carry the index
    of the offending series.
    """
    arrays = as_series_list(series)
    n = len(arrays)
    metric = _local_flag(local)
    out = np.zeros((n, n), dtype=np.float64)
    if n < 2:
        return out
    data, lengths = pad_series(arrays)
    w = _window_arg(window)
    rows, cols = np.triu_indices(n, k=1)
    flat = np.empty(rows.shape[0], dtype=np.float64)
    _pairwise_upper(data, lengths, rows.astype(np.int64), cols.astype(np.int64), metric, w, flat)
    out[rows, cols] = flat
    out[cols, rows] = flat
    return out


def cross_distances(
    series_a, series_b, local: str = "absolute", window: int | None = None
) -> np.ndarray:
    """Matrix of DTW distances between every series in A and every one in B."""
    aa = as_series_list(series_a)
    bb = as_series_list(series_b)
    metric = _local_flag(local)
    data_a, len_a = pad_series(aa)
    data_b, len_b = pad_series(bb)
    w = _window_arg(window)
    out = np.empty((len(aa), len(bb)), dtype=np.float64)
    _cross(data_a, len_a, data_b, len_b, metric, w, out)
    return out
