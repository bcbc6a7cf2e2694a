"""Cluster-based speed imputation and congestion coloring.

Missing bucket speeds are filled with the mean of the observed speeds of the
street's cluster peers at that bucket; observed values are never modified,
and buckets no peer observes stay missing. Each filled value carries an
explicit imputed flag end-to-end so consumers can tell measured from
inferred color.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .clustering import ClusterModel
from .errors import NoData
from .model import Dataset, SpeedSeries, StreetProfile


class CongestionLevel(Enum):
    """Four congestion levels ordered from free-flowing to blocked."""

    FREE_FLOW = "FreeFlow"
    HEAVY = "Heavy"
    QUEUING = "Queuing"
    BLOCKED = "Blocked"

    @property
    def color(self) -> str:
        return _LEVEL_COLORS[self]

    @property
    def severity(self) -> int:
        """0 = free flow, 3 = blocked."""
        return _LEVEL_SEVERITY[self]


_LEVEL_COLORS = {
    CongestionLevel.FREE_FLOW: "green",
    CongestionLevel.HEAVY: "yellow",
    CongestionLevel.QUEUING: "red",
    CongestionLevel.BLOCKED: "black",
}

_LEVEL_SEVERITY = {
    CongestionLevel.FREE_FLOW: 0,
    CongestionLevel.HEAVY: 1,
    CongestionLevel.QUEUING: 2,
    CongestionLevel.BLOCKED: 3,
}


@dataclass(frozen=True)
class CongestionThresholds:
    """Speed-ratio boundaries between levels; invented defaults, config-exposed."""

    free_flow_ratio: float = 0.75
    heavy_ratio: float = 0.40
    blocked_speed_kmh: float = 5.0

    def __post_init__(self):
        if not 0 < self.heavy_ratio < self.free_flow_ratio <= 1:
            raise ValueError("need 0 < heavy_ratio < free_flow_ratio <= 1")
        if self.blocked_speed_kmh < 0:
            raise ValueError("blocked_speed_kmh must be non-negative")

    def to_dict(self) -> dict:
        return {
            "free_flow_ratio": self.free_flow_ratio,
            "heavy_ratio": self.heavy_ratio,
            "blocked_speed_kmh": self.blocked_speed_kmh,
        }


@dataclass(frozen=True)
class CongestionAssignment:
    street_id: str
    bucket_index: int
    speed_kmh: float
    imputed: bool
    level: CongestionLevel


@dataclass(frozen=True)
class ImputationResult:
    """An imputed dataset plus per-street flags for the filled cells."""

    dataset: Dataset
    imputed: dict[str, np.ndarray]
    cells_imputed: int
    cells_unfilled: int


def impute(ds: Dataset, model: ClusterModel) -> ImputationResult:
    """Fill missing cells from cluster-peer means at the same bucket.

    Every street in the dataset must appear in the model's assignments.
    Observed cells are left bit-identical; cells no cluster peer observes
    remain missing and are counted.
    """
    missing_ids = [p.street_id for p in ds.profiles if p.street_id not in model.assignments]
    if missing_ids:
        raise ValueError(
            f"model assignments do not cover {len(missing_ids)} streets "
            f"(first: {missing_ids[0]!r})"
        )

    by_cluster: dict[int, list[int]] = {}
    for idx, p in enumerate(ds.profiles):
        by_cluster.setdefault(model.assignments[p.street_id], []).append(idx)

    new_profiles: list[Optional[StreetProfile]] = list(ds.profiles)
    imputed_masks: dict[str, np.ndarray] = {}
    cells_imputed = 0
    cells_unfilled = 0
    for members in by_cluster.values():
        stack = np.vstack([ds.profiles[i].series.values for i in members])
        observed = ~np.isnan(stack)
        counts = observed.sum(axis=0)
        sums = np.where(observed, stack, 0.0).sum(axis=0)
        has_peer = counts > 0
        means = np.where(has_peer, sums / np.maximum(counts, 1), np.nan)
        # clamp to the peer range; a pure no-op in exact arithmetic
        lo = np.where(observed, stack, np.inf).min(axis=0)
        hi = np.where(observed, stack, -np.inf).max(axis=0)
        fills = np.where(has_peer, np.clip(means, lo, hi), np.nan)
        for i in members:
            profile = ds.profiles[i]
            row = profile.series.values
            missing = np.isnan(row)
            fill_here = missing & has_peer
            filled = np.where(fill_here, fills, row)
            imputed_masks[profile.street_id] = fill_here
            cells_imputed += int(fill_here.sum())
            cells_unfilled += int((missing & ~has_peer).sum())
            if fill_here.any():
                new_profiles[i] = profile.with_series(SpeedSeries(filled))
    return ImputationResult(
        dataset=ds.with_profiles(new_profiles),
        imputed=imputed_masks,
        cells_imputed=cells_imputed,
        cells_unfilled=cells_unfilled,
    )


def free_flow_reference(profile: StreetProfile, percentile: float = 85.0) -> float:
    """The street's expected uncongested speed.

    The joined max-speed attribute wins when present; otherwise the given
    percentile of the street's present values stands in for it.
    """
    if profile.max_speed_kmh is not None:
        return float(profile.max_speed_kmh)
    values = profile.series.values[profile.series.present_mask]
    if values.size == 0:
        raise NoData(f"street {profile.street_id!r} has no values at all")
    return float(np.percentile(values, percentile))


def classify(speed_kmh: float, reference_kmh: float,
             thresholds: CongestionThresholds = CongestionThresholds()) -> CongestionLevel:
    """Map one speed against its free-flow reference to a congestion level.

    A speed at or below the blocked threshold is Blocked regardless of the
    reference; above it, the speed ratio decides.
    """
    if speed_kmh <= thresholds.blocked_speed_kmh:
        return CongestionLevel.BLOCKED
    ratio = speed_kmh / reference_kmh
    if ratio >= thresholds.free_flow_ratio:
        return CongestionLevel.FREE_FLOW
    if ratio >= thresholds.heavy_ratio:
        return CongestionLevel.HEAVY
    return CongestionLevel.QUEUING


@dataclass(frozen=True)
class ColorifyResult:
    assignments: tuple[CongestionAssignment, ...]
    skipped_streets: tuple[str, ...]
    thresholds: CongestionThresholds


def colorify(
    ds: Dataset,
    thresholds: CongestionThresholds = CongestionThresholds(),
    imputed: Optional[dict[str, np.ndarray]] = None,
    percentile: float = 85.0,
) -> ColorifyResult:
    """One congestion assignment per (street, bucket) cell holding a value.

    `imputed` carries the per-street fill flags from impute; omitted flags
    mean the cell was measured. Streets with no data are skipped and listed.
    """
    imputed = imputed or {}
    assignments = []
    skipped = []
    for p in ds.profiles:
        try:
            reference = free_flow_reference(p, percentile=percentile)
        except NoData:
            skipped.append(p.street_id)
            continue
        flags = imputed.get(p.street_id)
        for b in np.flatnonzero(p.series.present_mask):
            speed = float(p.series.values[b])
            assignments.append(
                CongestionAssignment(
                    street_id=p.street_id,
                    bucket_index=int(b),
                    speed_kmh=speed,
                    imputed=bool(flags[b]) if flags is not None else False,
                    level=classify(speed, reference, thresholds),
                )
            )
    return ColorifyResult(
        assignments=tuple(assignments),
        skipped_streets=tuple(skipped),
        thresholds=thresholds,
    )


def summarize(result: ColorifyResult, ds: Dataset) -> dict:
    """The companion summary: cell counts and the level histogram."""
    histogram = {level.value: 0 for level in CongestionLevel}
    observed = 0
    imputed = 0
    for a in result.assignments:
        histogram[a.level.value] += 1
        if a.imputed:
            imputed += 1
        else:
            observed += 1
    unfilled = sum(
        int(np.isnan(p.series.values).sum()) for p in ds.profiles
    )
    return {
        "cells_observed": observed,
        "cells_imputed": imputed,
        "cells_unfilled": unfilled,
        "level_histogram": histogram,
    }


def write_colors_csv(result: ColorifyResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["street_id", "bucket_index", "speed_kmh", "imputed", "level", "color"])
        for a in result.assignments:
            writer.writerow([
                a.street_id,
                a.bucket_index,
                repr(a.speed_kmh),
                "true" if a.imputed else "false",
                a.level.value,
                a.level.color,
            ])


def write_tile_snapshot(result: ColorifyResult, bucket_index: int, path) -> None:
    """street_id -> color for one bucket: the tile renderer's input contract."""
    tile = {
        a.street_id: a.level.color
        for a in result.assignments
        if a.bucket_index == bucket_index
    }
    Path(path).write_text(
        json.dumps({"bucket_index": bucket_index, "colors": tile}, indent=2, sort_keys=True) + "\n"
    )
