"""Finding secondary roads whose traffic behavior resembles primary roads.

The features (bucket speeds, filling rate, max speed) are standard-scaled,
primary roads are averaged into a representative vector, secondary roads are
clustered with DTW K-Means on their scaled series, and the cluster whose
centroid sits closest to the representative is selected. Centroid-to-
representative distance is DTW on the series part plus a weighted Euclidean
distance on the scalar features.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .clustering import Centroid, ClusterConfig, ClusterModel, kmeans_dtw
from .dtw import dtw_distance, pairwise_distances, cross_distances
from .errors import NoPrimaryRoads, TooFewSeries
from .model import Dataset, RoadClass
from .pipeline import ScalerParams, apply_scaler, fit_scaler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrimaryRepresentative:
    """Scaled per-bucket means over primary roads, plus scalar feature means.

    Buckets observed by no primary road are NaN. scalar_features holds the
    scaled (filling_rate, max_speed) means; a scalar no primary road carries
    maps to 0, the scaled-space mean.
    """

    series: np.ndarray
    scalar_features: np.ndarray

    def __post_init__(self):
        series = np.array(self.series, dtype=np.float64)
        feats = np.array(self.scalar_features, dtype=np.float64)
        series.setflags(write=False)
        feats.setflags(write=False)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "scalar_features", feats)


@dataclass(frozen=True)
class ImportanceComparison:
    """A second partition (alternative k) with its distance table."""

    k: int
    cluster_distances: tuple[float, ...]
    selected_cluster: int
    important_street_ids: tuple[str, ...]
    model: ClusterModel


@dataclass(frozen=True)
class ImportanceResult:
    selected_cluster: int
    cluster_distances: tuple[float, ...]
    important_street_ids: tuple[str, ...]
    per_street: tuple[tuple[str, float, str], ...]
    model: ClusterModel
    representative: PrimaryRepresentative
    comparison: Optional[ImportanceComparison] = None


def _column_means(rows: np.ndarray) -> np.ndarray:
    """Per-column mean over observed entries; NaN where no row observes."""
    mask = ~np.isnan(rows)
    counts = mask.sum(axis=0)
    sums = np.where(mask, rows, 0.0).sum(axis=0)
    return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def primary_representative(ds: Dataset, params: ScalerParams) -> PrimaryRepresentative:
    """Average the scaled feature vectors of the primary-class profiles."""
    primaries = [p for p in ds.profiles if p.road_class is RoadClass.PRIMARY]
    if not primaries:
        raise NoPrimaryRoads("no primary-class profiles in the dataset")
    rows = np.vstack([apply_scaler(p, params) for p in primaries])
    buckets = ds.grid.buckets_per_week
    means = _column_means(rows)
    scalars = means[buckets:]
    return PrimaryRepresentative(
        series=means[:buckets],
        scalar_features=np.where(np.isnan(scalars), 0.0, scalars),
    )


def centroid_representative_distance(
    centroid: Centroid,
    representative: PrimaryRepresentative,
    local: str = "absolute",
    scalar_weight: float = 1.0,
) -> float:
    """DTW on the series part plus weighted Euclidean on scalar features."""
    rep_series = representative.series[~np.isnan(representative.series)]
    d = dtw_distance(centroid.series, rep_series, local=local)
    scalars = centroid.scalar_features
    if scalars is None:
        scalars = np.zeros_like(representative.scalar_features)
    scalars = np.where(np.isnan(scalars), 0.0, scalars)
    gap = scalars - representative.scalar_features
    return d + scalar_weight * float(np.sqrt(np.sum(gap * gap)))


def _attach_scalar_features(model: ClusterModel, scaled_rows: np.ndarray,
                            ids: list[str], buckets: int) -> ClusterModel:
    scalars = scaled_rows[:, buckets:]
    centroids = []
    for j in range(model.k):
        member_rows = scalars[[i for i, sid in enumerate(ids) if model.assignments[sid] == j]]
        feats = _column_means(member_rows) if member_rows.shape[0] else np.full(
            scalars.shape[1], np.nan
        )
        centroids.append(
            Centroid(
                series=model.centroids[j].series,
                scalar_features=np.where(np.isnan(feats), 0.0, feats),
            )
        )
    return replace(model, centroids=tuple(centroids))


def _cluster_secondaries(ds, k, config, params):
    secondaries = [p for p in ds.profiles if p.road_class is RoadClass.SECONDARY]
    if len(secondaries) < k:
        raise TooFewSeries(
            f"need at least k={k} secondary-class profiles, got {len(secondaries)}"
        )
    buckets = ds.grid.buckets_per_week
    ids = [p.street_id for p in secondaries]
    scaled_rows = np.vstack([apply_scaler(p, params) for p in secondaries])
    series = [row[:buckets][~np.isnan(row[:buckets])] for row in scaled_rows]
    model = kmeans_dtw(series, replace(config, k=k), ids=ids)
    model = _attach_scalar_features(model, scaled_rows, ids, buckets)
    return model, secondaries, series


def _select(model, representative, local, scalar_weight):
    distances = tuple(
        centroid_representative_distance(c, representative, local, scalar_weight)
        for c in model.centroids
    )
    return int(np.argmin(distances)), distances


def _check_distinctive(model, series, distinct_fraction: float) -> None:
    if model.k < 2:
        return
    centroid_gaps = pairwise_distances([c.series for c in model.centroids],
                                       local=model.config.local)
    min_gap = float(np.min(centroid_gaps[np.triu_indices(model.k, k=1)]))
    member_dists = cross_distances(series, [c.series for c in model.centroids],
                                   local=model.config.local)
    ids = list(model.assignments)
    assigned = member_dists[np.arange(len(series)), [model.assignments[s] for s in ids]]
    mean_member = float(assigned.mean())
    if min_gap <= distinct_fraction * mean_member:
        logger.warning(
            "cluster centroids are not distinctive: min pairwise DTW %.4g <= "
            "%.0f%% of mean member-to-centroid distance %.4g",
            min_gap, 100 * distinct_fraction, mean_member,
        )


def find_important_secondary(
    ds: Dataset,
    k: int = 3,
    config: Optional[ClusterConfig] = None,
    scalar_weight: float = 1.0,
    distinct_fraction: float = 0.1,
    compare_k: Optional[int] = None,
) -> ImportanceResult:
    """Identify the secondary roads in the cluster nearest the primary profile.

    Scales the features, averages primary roads into a representative,
    clusters the secondary roads with DTW K-Means, and returns the members
    of the argmin-distance cluster. Only secondary-class streets can appear
    in the result.
    """
    config = config if config is not None else ClusterConfig(k=k)
    params = fit_scaler(ds.profiles)
    representative = primary_representative(ds, params)
    model, secondaries, series = _cluster_secondaries(ds, k, config, params)
    _check_distinctive(model, series, distinct_fraction)
    selected, distances = _select(model, representative, config.local, scalar_weight)
    important = model.members(selected)
    by_id = {p.street_id: p for p in secondaries}
    per_street = tuple(
        (sid, by_id[sid].filling_rate, by_id[sid].road_class.value) for sid in important
    )

    comparison = None
    if compare_k is not None:
        alt_model, _, _ = _cluster_secondaries(ds, compare_k, config, params)
        alt_selected, alt_distances = _select(alt_model, representative, config.local, scalar_weight)
        comparison = ImportanceComparison(
            k=compare_k,
            cluster_distances=alt_distances,
            selected_cluster=alt_selected,
            important_street_ids=alt_model.members(alt_selected),
            model=alt_model,
        )

    return ImportanceResult(
        selected_cluster=selected,
        cluster_distances=distances,
        important_street_ids=important,
        per_street=per_street,
        model=model,
        representative=representative,
        comparison=comparison,
    )


def write_importance_csv(result: ImportanceResult, path) -> None:
    """Selected streets in the Table-3 layout; name and county stay empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["road_class", "filling_rate_pct", "street_id", "name", "county"])
        for sid, rate, road_class in result.per_street:
            writer.writerow([road_class, repr(round(rate * 100, 5)), sid, "", ""])


def importance_json_dict(result: ImportanceResult) -> dict:
    doc = {
        "selected_cluster": result.selected_cluster,
        "cluster_distances": [float(d) for d in result.cluster_distances],
        "important_street_ids": list(result.important_street_ids),
        "per_street": [
            {"street_id": sid, "filling_rate": rate, "road_class": rc}
            for sid, rate, rc in result.per_street
        ],
        "k": result.model.k,
    }
    if result.comparison is not None:
        doc["comparison"] = {
            "k": result.comparison.k,
            "cluster_distances": [float(d) for d in result.comparison.cluster_distances],
            "selected_cluster": result.comparison.selected_cluster,
            "important_street_ids": list(result.comparison.important_street_ids),
        }
    return doc
