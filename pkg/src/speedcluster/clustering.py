"""K-Means over variable-length series with a DTW assignment metric.

Centroids are updated by DTW barycenter averaging: each member is aligned to
the current centroid and the member values mapped to each centroid position
are averaged. Because averaging under a DTW metric is a heuristic, the update
keeps the best candidate seen (including the incoming centroid), which makes
the per-iteration inertia trace non-increasing.

Initialization is k-means++-style seeding on DTW distances, driven entirely
by the config seed; identical input order, seed and config reproduce the
model exactly, including the inertia trace.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numba as nb
import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .dtw import _dtw_matrix, _local_flag, _window_arg, cross_distances, pad_series
from .errors import TooFewSeries
from .validation import as_series, as_series_list

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ClusterConfig:
    """Knobs for one clustering run.

    Convergence is declared when assignments stop changing or the relative
    inertia change between iterations falls below convergence_epsilon.
    """

    k: int
    max_iterations: int = 50
    seed: int = 0
    convergence_epsilon: float = 1e-4
    barycenter_iterations: int = 10
    local: str = "absolute"
    window: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.barycenter_iterations < 0:
            raise ValueError("barycenter_iterations must be non-negative")
        if self.convergence_epsilon < 0:
            raise ValueError("convergence_epsilon must be non-negative")


@dataclass(frozen=True)
class Centroid:
    """A cluster center: a value series plus optional scalar features."""

    series: np.ndarray
    scalar_features: Optional[np.ndarray] = None

    def __post_init__(self):
        series = np.array(self.series, dtype=np.float64)
        if series.ndim != 1 or series.shape[0] < 1:
            raise ValueError("centroid series must be a non-empty 1-D array")
        if not np.isfinite(series).all():
            raise ValueError("centroid series must be finite")
        series.setflags(write=False)
        object.__setattr__(self, "series", series)
        if self.scalar_features is not None:
            feats = np.array(self.scalar_features, dtype=np.float64)
            feats.setflags(write=False)
            object.__setattr__(self, "scalar_features", feats)


@dataclass(frozen=True)
class ClusterModel:
    """The result of one K-Means run."""

    config: ClusterConfig
    centroids: tuple[Centroid, ...]
    assignments: dict[str, int]
    inertia_trace: tuple[float, ...]
    iterations_run: int

    def __post_init__(self):
        k = len(self.centroids)
        for sid, j in self.assignments.items():
            if not 0 <= j < k:
                raise ValueError(f"assignment of {sid!r} to cluster {j} outside [0, {k})")

    @property
    def k(self) -> int:
        return len(self.centroids)

    @property
    def inertia(self) -> float:
        return self.inertia_trace[-1]

    def members(self, cluster: int) -> tuple[str, ...]:
        return tuple(sid for sid, j in self.assignments.items() if j == cluster)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "config": asdict(self.config),
            "centroids": [
                {
                    "values": [float(v) for v in c.series],
                    "length": int(c.series.shape[0]),
                    "scalar_features": None
                    if c.scalar_features is None
                    else [float(v) for v in c.scalar_features],
                }
                for c in self.centroids
            ],
            "assignments": {sid: int(j) for sid, j in self.assignments.items()},
            "inertia_trace": [float(v) for v in self.inertia_trace],
            "iterations_run": int(self.iterations_run),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ClusterModel":
        version = doc.get("schema_version")
        if version != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema_version {version!r}")
        cfg = doc["config"]
        config = ClusterConfig(
            k=cfg["k"],
            max_iterations=cfg["max_iterations"],
            seed=cfg["seed"],
            convergence_epsilon=cfg["convergence_epsilon"],
            barycenter_iterations=cfg["barycenter_iterations"],
            local=cfg.get("local", "absolute"),
            window=cfg.get("window"),
        )
        centroids = tuple(
            Centroid(
                series=np.array(c["values"], dtype=np.float64),
                scalar_features=None
                if c.get("scalar_features") is None
                else np.array(c["scalar_features"], dtype=np.float64),
            )
            for c in doc["centroids"]
        )
        return cls(
            config=config,
            centroids=centroids,
            assignments={sid: int(j) for sid, j in doc["assignments"].items()},
            inertia_trace=tuple(float(v) for v in doc["inertia_trace"]),
            iterations_run=int(doc["iterations_run"]),
        )


def resample_series(values: np.ndarray, length: int) -> np.ndarray:
    """Linear resample onto `length` evenly spaced positions."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n == length:
        return values.copy()
    if n == 1:
        return np.full(length, values[0])
    return np.interp(np.linspace(0.0, n - 1, length), np.arange(n), values)


@nb.njit(cache=True, parallel=True)
def _dba_pass(data, lengths, centroid, metric, window, sums, counts, dists):
    """Align every member to the centroid; accumulate values per position.

    Each member writes only its own row, so the pass is schedule-independent.
    """
    for s in nb.prange(lengths.shape[0]):
        member = data[s, : lengths[s]]
        cost = _dtw_matrix(centroid, member, metric, window)
        i = centroid.shape[0]
        j = member.shape[0]
        dists[s] = cost[i, j]
        while True:
            sums[s, i - 1] += member[j - 1]
            counts[s, i - 1] += 1
            if i == 1 and j == 1:
                break
            diag = cost[i - 1, j - 1]
            left = cost[i, j - 1]
            up = cost[i - 1, j]
            if diag <= left and diag <= up:
                i -= 1
                j -= 1
            elif left <= up:
                j -= 1
            else:
                i -= 1


def update_barycenter(members, init, iterations: int = 10, local: str = "absolute",
                      window: Optional[int] = None) -> Centroid:
    """DTW barycenter averaging with a fixed iteration budget.

    Starting from `init`, repeatedly aligns each member to the current
    centroid and averages the member values mapped to each position. Returns
    the candidate (the initial centroid included) with the lowest sum of
    squared DTW distances to the members, so the result is never worse than
    the starting point. Output length equals the init length.
    """
    arrays = as_series_list(members)
    if not arrays:
        raise ValueError("members must be non-empty")
    init_values = init.series if isinstance(init, Centroid) else as_series(init)
    current = np.ascontiguousarray(init_values, dtype=np.float64)
    metric = _local_flag(local)
    w = _window_arg(window)
    data, lengths = pad_series(arrays)
    n_members = len(arrays)
    length = current.shape[0]

    best = current
    best_cost = np.inf
    for t in range(iterations + 1):
        sums = np.zeros((n_members, length), dtype=np.float64)
        counts = np.zeros((n_members, length), dtype=np.int64)
        dists = np.empty(n_members, dtype=np.float64)
        _dba_pass(data, lengths, current, metric, w, sums, counts, dists)
        cost = float(np.sum(dists * dists))
        if cost < best_cost:
            best = current
            best_cost = cost
        if t == iterations or cost == 0.0:
            break
        new = sums.sum(axis=0) / counts.sum(axis=0)
        if np.array_equal(new, current):
            break
        current = new
    return Centroid(series=best)


def _kmeanspp_indices(arrays, k: int, rng: np.random.Generator, local: str,
                      window: Optional[int]) -> list[int]:
    n = len(arrays)
    chosen = [int(rng.integers(n))]
    d2 = cross_distances(arrays, [arrays[chosen[0]]], local, window)[:, 0] ** 2
    while len(chosen) < k:
        total = float(d2.sum())
        if total > 0.0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # everything coincides with a chosen centroid; take the lowest
            # unchosen index to stay deterministic
            taken = set(chosen)
            nxt = next(i for i in range(n) if i not in taken)
        chosen.append(nxt)
        d2 = np.minimum(d2, cross_distances(arrays, [arrays[nxt]], local, window)[:, 0] ** 2)
    return chosen


def _assign(arrays, centroid_series, local, window):
    dists = cross_distances(arrays, centroid_series, local, window)
    labels = np.argmin(dists, axis=1)
    nearest = dists[np.arange(len(arrays)), labels]
    return labels, nearest


def kmeans_dtw(series, config: ClusterConfig, ids: Optional[Sequence[str]] = None) -> ClusterModel:
    """Cluster variable-length series into config.k groups under DTW.

    `ids` labels the series in the returned assignments map (defaults to
    stringified positions). Deterministic given input order, seed and config.
    """
    arrays = as_series_list(series)
    n = len(arrays)
    if n == 0:
        raise TooFewSeries("no input series")
    if config.k > n:
        raise TooFewSeries(f"k={config.k} exceeds the number of series ({n})")
    if ids is None:
        ids = [str(i) for i in range(n)]
    else:
        ids = [str(s) for s in ids]
        if len(ids) != n:
            raise ValueError("ids length does not match number of series")
        if len(set(ids)) != n:
            raise ValueError("ids must be unique")

    rng = np.random.default_rng(config.seed)
    seed_idx = _kmeanspp_indices(arrays, config.k, rng, config.local, config.window)
    # centroid length: median length of the members a seed attracts initially,
    # clamped to >= 2 (falls back to the global median for unattractive seeds)
    global_median = max(2, int(round(float(np.median([a.shape[0] for a in arrays])))))
    labels0, _ = _assign(arrays, [arrays[i] for i in seed_idx], config.local, config.window)
    centroids = []
    for j, i in enumerate(seed_idx):
        member_lengths = [arrays[p].shape[0] for p in np.flatnonzero(labels0 == j)]
        if member_lengths:
            length_j = max(2, int(round(float(np.median(member_lengths)))))
        else:
            length_j = global_median
        centroids.append(resample_series(arrays[i], length_j))

    trace: list[float] = []
    prev_labels = None
    iterations_run = 0
    for t in range(1, config.max_iterations + 1):
        labels, nearest = _assign(arrays, centroids, config.local, config.window)
        labels, nearest, centroids = _repair_empty(arrays, centroids, labels, nearest, config)
        iterations_run = t
        trace.append(float(np.sum(nearest * nearest)))
        if trace[-1] == 0.0:
            break
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        if len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if prev > 0.0 and abs(prev - cur) / prev < config.convergence_epsilon:
                break
        if t == config.max_iterations:
            break
        prev_labels = labels
        centroids = [
            update_barycenter(
                [arrays[i] for i in np.flatnonzero(labels == j)],
                Centroid(series=centroids[j]),
                config.barycenter_iterations,
                config.local,
                config.window,
            ).series
            for j in range(config.k)
        ]

    return ClusterModel(
        config=config,
        centroids=tuple(Centroid(series=c) for c in centroids),
        assignments={ids[i]: int(labels[i]) for i in range(n)},
        inertia_trace=tuple(trace),
        iterations_run=iterations_run,
    )


def _repair_empty(arrays, centroids, labels, nearest, config):
    """Reseed emptied centroids to the point farthest from its own centroid."""
    k = config.k
    centroids = list(centroids)
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return labels, nearest, centroids
        j = int(empties[0])
        p = int(np.argmax(nearest))
        centroids[j] = resample_series(arrays[p], max(2, arrays[p].shape[0]))
        labels, nearest = _assign(arrays, centroids, config.local, config.window)
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise TooFewSeries(
            "could not populate every cluster; fewer distinct series than k?"
        )
    return labels, nearest, centroids


def inertia(series, model: ClusterModel, ids: Optional[Sequence[str]] = None) -> float:
    """Recompute the sum of squared DTW distances to assigned centroids."""
    arrays = as_series_list(series)
    if ids is None:
        ids = [str(i) for i in range(len(arrays))]
    dists = cross_distances(
        arrays, [c.series for c in model.centroids], model.config.local, model.config.window
    )
    picked = dists[np.arange(len(arrays)), [model.assignments[str(s)] for s in ids]]
    return float(np.sum(picked * picked))


def select_elbow_from_curve(curve: Sequence[tuple[int, float]]) -> int:
    """Pick the k maximizing vertical distance to the chord between endpoints.

    Ties (including a perfectly linear curve, where every distance is zero)
    resolve toward the smallest k.
    """
    if len(curve) < 2:
        return curve[0][0]
    k0, v0 = curve[0]
    k1, v1 = curve[-1]
    best_k = curve[0][0]
    best_d = -np.inf
    for k, v in curve:
        chord = v0 + (v1 - v0) * (k - k0) / (k1 - k0)
        d = chord - v
        if d > best_d:
            best_k = k
            best_d = d
    return best_k


def elbow_select(series, k_range, config: ClusterConfig,
                 ids: Optional[Sequence[str]] = None) -> tuple[int, list[tuple[int, float]]]:
    """Run kmeans_dtw for each k and pick the elbow of the inertia curve."""
    ks = sorted(set(int(k) for k in k_range))
    if len(ks) < 3:
        raise ValueError("k_range must contain at least 3 distinct values")
    arrays = as_series_list(series)
    for k in ks:
        if k < 1 or k > len(arrays):
            raise TooFewSeries(f"k={k} outside [1, {len(arrays)}]")
    curve = []
    for k in ks:
        model = kmeans_dtw(arrays, replace(config, k=k), ids=ids)
        curve.append((k, model.inertia))
    return select_elbow_from_curve(curve), curve


class DtwKMeans(ClusterMixin, BaseEstimator):
    """Scikit-learn style wrapper around kmeans_dtw.

    fit accepts a list of 1-D series (ragged lengths allowed), a 2-D array
    whose NaN cells mark missing buckets, or ObservedSeries/SpeedSeries
    instances; missing values are dropped before the DTW metric sees them.
    """

    def __init__(self, k=3, max_iterations=50, seed=0, convergence_epsilon=1e-4,
                 barycenter_iterations=10, local="absolute", window=None):
        self.k = k
        self.max_iterations = max_iterations
        self.seed = seed
        self.convergence_epsilon = convergence_epsilon
        self.barycenter_iterations = barycenter_iterations
        self.local = local
        self.window = window

    def _config(self) -> ClusterConfig:
        return ClusterConfig(
            k=self.k,
            max_iterations=self.max_iterations,
            seed=self.seed,
            convergence_epsilon=self.convergence_epsilon,
            barycenter_iterations=self.barycenter_iterations,
            local=self.local,
            window=self.window,
        )

    def fit(self, X, y=None):
        model = kmeans_dtw(X, self._config())
        self.model_ = model
        self.labels_ = np.array([model.assignments[str(i)] for i in range(len(model.assignments))])
        self.cluster_centers_ = [c.series for c in model.centroids]
        self.inertia_ = model.inertia
        self.n_iter_ = model.iterations_run
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("DtwKMeans must be fitted before predict")
        arrays = as_series_list(X)
        dists = cross_distances(arrays, self.cluster_centers_, self.local, self.window)
        return np.argmin(dists, axis=1)
