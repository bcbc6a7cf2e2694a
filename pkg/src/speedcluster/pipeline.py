"""Ingestion, cleaning, attribute joins, scaling and file formats.

The record-level cleaning (speed thresholds, exact-duplicate removal) happens
inside ingest, before the median aggregation; the street-level filters
(minimum observed buckets, minimum filling rate) happen in clean, which also
re-sweeps aggregated values against the speed bounds so that cleaning is
total and idempotent on any dataset.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator, Optional
from zoneinfo import ZoneInfo

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import DuplicateAttributeKey, InvalidBucket, ParseError, TooFewProfiles
from .model import BucketGrid, Dataset, RoadClass, SpeedSeries, StreetProfile

SNAPSHOT_SCHEMA_VERSION = 1

RECORD_HEADER = ("street_id", "bucket_index", "speed_kmh")
RECORD_HEADER_TS = ("street_id", "timestamp_iso8601", "speed_kmh")
ATTRS_HEADER = ("street_id", "road_class", "max_speed_kmh", "length_m")


@dataclass(frozen=True)
class RawRecord:
    """One aggregated speed observation for a street in a weekly bucket."""

    street_id: str
    bucket_index: int
    speed_kmh: float


@dataclass(frozen=True)
class CleaningConfig:
    min_speed_kmh: float = 1.0
    max_speed_kmh: float = 140.0
    min_observed_buckets: int = 3
    min_filling_rate: float = 1.0 / 3.0

    def __post_init__(self):
        if not 0 <= self.min_speed_kmh < self.max_speed_kmh:
            raise ValueError("need 0 <= min_speed_kmh < max_speed_kmh")
        if not 0 <= self.min_filling_rate <= 1:
            raise ValueError("min_filling_rate must be in [0, 1]")
        if self.min_observed_buckets < 0:
            raise ValueError("min_observed_buckets must be non-negative")


@dataclass
class CleaningReport:
    """Counts of what cleaning removed; merged across pipeline stages."""

    outlier_records: int = 0
    duplicate_records: int = 0
    dropped_low_observation: int = 0
    dropped_low_filling_rate: int = 0
    unmatched_attributes: int = 0

    def merge(self, other: "CleaningReport") -> "CleaningReport":
        return CleaningReport(
            outlier_records=self.outlier_records + other.outlier_records,
            duplicate_records=self.duplicate_records + other.duplicate_records,
            dropped_low_observation=self.dropped_low_observation + other.dropped_low_observation,
            dropped_low_filling_rate=self.dropped_low_filling_rate + other.dropped_low_filling_rate,
            unmatched_attributes=self.unmatched_attributes + other.unmatched_attributes,
        )

    def to_dict(self) -> dict:
        return {
            "outlier_records": self.outlier_records,
            "duplicate_records": self.duplicate_records,
            "dropped_low_observation": self.dropped_low_observation,
            "dropped_low_filling_rate": self.dropped_low_filling_rate,
            "unmatched_attributes": self.unmatched_attributes,
        }


@dataclass(frozen=True)
class StreetAttributes:
    """GIS attributes joined onto profiles by street id."""

    road_class: RoadClass = RoadClass.OTHER
    max_speed_kmh: Optional[float] = None
    length_m: Optional[float] = None
    avg_speed_kmh: Optional[float] = None  # ingested when present; unused downstream


def ingest(records: Iterable[RawRecord], grid: BucketGrid,
           cfg: Optional[CleaningConfig] = None) -> tuple[Dataset, CleaningReport]:
    """Aggregate raw records into per-street weekly profiles.

    Exact duplicate (street, bucket, speed) triples are removed before
    aggregation; when cfg is given, speeds outside its bounds are removed
    before the median as well. Each surviving (street, bucket) cell becomes
    the median of its speeds. The output is invariant to record order.
    """
    buckets = grid.buckets_per_week
    report = CleaningReport()
    seen: set[tuple[str, int, float]] = set()
    per_street: dict[str, dict[int, list[float]]] = {}
    for rec in records:
        if not 0 <= rec.bucket_index < buckets:
            raise InvalidBucket(
                f"street {rec.street_id!r}: bucket {rec.bucket_index} outside "
                f"[0, {buckets})"
            )
        key = (rec.street_id, rec.bucket_index, rec.speed_kmh)
        if key in seen:
            report.duplicate_records += 1
            continue
        seen.add(key)
        if cfg is not None and not cfg.min_speed_kmh <= rec.speed_kmh <= cfg.max_speed_kmh:
            report.outlier_records += 1
            continue
        per_street.setdefault(rec.street_id, {}).setdefault(rec.bucket_index, []).append(
            rec.speed_kmh
        )

    profiles = []
    for sid in sorted(per_street):
        values = np.full(buckets, np.nan)
        for b, speeds in per_street[sid].items():
            values[b] = float(np.median(speeds))
        profiles.append(StreetProfile.build(sid, SpeedSeries(values)))
    return Dataset(grid=grid, profiles=tuple(profiles)), report


def clean(ds: Dataset, cfg: CleaningConfig = CleaningConfig()) -> tuple[Dataset, CleaningReport]:
    """Drop out-of-bounds values and under-observed streets.

    Values outside [min_speed, max_speed] become missing; streets with fewer
    than min_observed_buckets present buckets, or a filling rate not above
    min_filling_rate, are dropped. Idempotent: cleaning a cleaned dataset
    changes nothing.
    """
    report = CleaningReport()
    kept = []
    for p in ds.profiles:
        values = p.series.values
        bad = ~np.isnan(values) & (
            (values < cfg.min_speed_kmh) | (values > cfg.max_speed_kmh)
        )
        if bad.any():
            report.outlier_records += int(bad.sum())
            values = np.where(bad, np.nan, values)
            p = p.with_series(SpeedSeries(values))
        if p.series.n_present < cfg.min_observed_buckets:
            report.dropped_low_observation += 1
            continue
        if p.filling_rate <= cfg.min_filling_rate:
            report.dropped_low_filling_rate += 1
            continue
        kept.append(p)
    return ds.with_profiles(kept), report


@dataclass(frozen=True)
class JoinReport:
    matched: int
    unmatched_streets: int
    unused_attribute_rows: int


def join_attributes(ds: Dataset, attrs: dict[str, StreetAttributes]) -> tuple[Dataset, JoinReport]:
    """Attach road class, max speed and length by street id.

    Streets absent from attrs keep absent attributes; attr rows for unknown
    streets are ignored. Both cases are counted in the report.
    """
    matched = 0
    joined = []
    for p in ds.profiles:
        a = attrs.get(p.street_id)
        if a is None:
            joined.append(p)
            continue
        matched += 1
        joined.append(
            replace(
                p,
                road_class=a.road_class,
                max_speed_kmh=a.max_speed_kmh,
                length_m=a.length_m,
            )
        )
    ids = set(ds.street_ids)
    unused = sum(1 for sid in attrs if sid not in ids)
    return ds.with_profiles(joined), JoinReport(
        matched=matched,
        unmatched_streets=len(ds.profiles) - matched,
        unused_attribute_rows=unused,
    )


# --- standard scaling over the street feature matrix ---------------------

SCALAR_FEATURES = ("filling_rate", "max_speed_kmh")


@dataclass(frozen=True)
class ScalerParams:
    """Per-column mean and population standard deviation.

    Columns are the weekly buckets followed by filling_rate and max_speed.
    """

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        stds = np.array(self.stds, dtype=np.float64)
        if means.shape != stds.shape or means.ndim != 1:
            raise ValueError("means and stds must be 1-D and the same length")
        if np.any(stds < 0):
            raise ValueError("stds must be non-negative")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def n_features(self) -> int:
        return self.means.shape[0]


def profile_feature_vector(profile: StreetProfile) -> np.ndarray:
    """Raw feature row: bucket speeds (NaN = missing), filling rate, max speed."""
    max_speed = np.nan if profile.max_speed_kmh is None else profile.max_speed_kmh
    return np.concatenate([profile.series.values, [profile.filling_rate, max_speed]])


def fit_scaler(profiles) -> ScalerParams:
    """Column-wise moments over observed entries only; needs >= 2 profiles."""
    profiles = list(profiles)
    if len(profiles) < 2:
        raise TooFewProfiles(f"need at least 2 profiles to fit a scaler, got {len(profiles)}")
    matrix = np.vstack([profile_feature_vector(p) for p in profiles])
    mask = ~np.isnan(matrix)
    counts = mask.sum(axis=0)
    safe = np.maximum(counts, 1)
    means = np.where(mask, matrix, 0.0).sum(axis=0) / safe
    centered = np.where(mask, matrix - means, 0.0)
    stds = np.sqrt((centered**2).sum(axis=0) / safe)
    means = np.where(counts > 0, means, 0.0)
    stds = np.where(counts > 0, stds, 0.0)
    return ScalerParams(means=means, stds=stds)


def apply_scaler(profile: StreetProfile, params: ScalerParams) -> np.ndarray:
    """Scaled feature row; missing cells stay missing, constant columns map to 0."""
    row = profile_feature_vector(profile)
    if row.shape[0] != params.n_features:
        raise ValueError(
            f"profile has {row.shape[0]} features, scaler expects {params.n_features}"
        )
    safe_std = np.where(params.stds > 0, params.stds, 1.0)
    scaled = np.where(params.stds > 0, (row - params.means) / safe_std, 0.0)
    return np.where(np.isnan(row), np.nan, scaled)


def invert_scaler(row: np.ndarray, params: ScalerParams) -> np.ndarray:
    """Map a scaled row back to original units (constant columns give the mean)."""
    return np.where(np.isnan(row), np.nan, row * params.stds + params.means)


class ProfileFeatureScaler(TransformerMixin, BaseEstimator):
    """Standard scaler over street profiles, estimator-style.

    fit computes per-column means and population stds over observed entries;
    transform returns one scaled row per profile with NaN where the profile
    has no data. Scaling never fills gaps.
    """

    def fit(self, X, y=None):
        self.params_ = fit_scaler(X)
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise NotFittedError("ProfileFeatureScaler must be fitted before transform")
        return np.vstack([apply_scaler(p, self.params_) for p in X])

    def inverse_transform(self, X) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise NotFittedError("ProfileFeatureScaler must be fitted before inverse_transform")
        return np.vstack([invert_scaler(np.asarray(row, dtype=np.float64), self.params_) for row in X])


# --- file formats ---------------------------------------------------------


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad {what} {text!r}", line=line)
    if not np.isfinite(value):
        raise ParseError(f"non-finite {what} {text!r}", line=line)
    return value


def _bucket_of_timestamp(text: str, grid: BucketGrid, tz: ZoneInfo, line: int) -> int:
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ParseError(f"bad ISO-8601 timestamp {text!r}", line=line)
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(tz)
    minute_of_week = stamp.weekday() * 24 * 60 + stamp.hour * 60 + stamp.minute
    return minute_of_week // grid.bucket_minutes


def read_records_csv(path, grid: BucketGrid, timezone: str = "UTC") -> Iterator[RawRecord]:
    """Stream records from CSV; bucket-index and timestamp headers accepted.

    Timestamps fold onto the weekly grid (Monday 00:00 is bucket 0) in the
    given timezone, pooling multi-week inputs onto one week.
    """
    tz = ZoneInfo(timezone)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise ParseError("empty records file", line=1)
        if header == RECORD_HEADER:
            timestamped = False
        elif header == RECORD_HEADER_TS:
            timestamped = True
        else:
            raise ParseError(
                f"unrecognized header {','.join(header)!r}; expected "
                f"{','.join(RECORD_HEADER)!r} or {','.join(RECORD_HEADER_TS)!r}",
                line=1,
            )
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=line)
            sid = row[0].strip()
            if not sid:
                raise ParseError("empty street_id", line=line)
            if timestamped:
                bucket = _bucket_of_timestamp(row[1].strip(), grid, tz, line)
            else:
                try:
                    bucket = int(row[1])
                except ValueError:
                    raise ParseError(f"bad bucket_index {row[1]!r}", line=line)
            speed = _parse_float(row[2], "speed_kmh", line)
            yield RawRecord(street_id=sid, bucket_index=bucket, speed_kmh=speed)


def write_records_csv(ds: Dataset, path) -> None:
    """Expand a dataset back to one record per observed (street, bucket) cell."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for p in ds.profiles:
            for b in np.flatnonzero(p.series.present_mask):
                writer.writerow([p.street_id, int(b), repr(float(p.series.values[b]))])


def _optional_float(text: str, what: str, line: int) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    return _parse_float(text, what, line)


def read_attributes_csv(path) -> dict[str, StreetAttributes]:
    """Read the GIS attributes table; street_id must be unique."""
    attrs: dict[str, StreetAttributes] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty attributes file", line=1)
        if tuple(header[:4]) != ATTRS_HEADER:
            raise ParseError(
                f"unrecognized header {','.join(header)!r}; expected it to start "
                f"with {','.join(ATTRS_HEADER)!r}",
                line=1,
            )
        has_avg = "avg_speed_kmh" in header
        avg_idx = header.index("avg_speed_kmh") if has_avg else -1
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 4:
                raise ParseError(f"expected at least 4 fields, got {len(row)}", line=line)
            sid = row[0].strip()
            if not sid:
                raise ParseError("empty street_id", line=line)
            if sid in attrs:
                raise DuplicateAttributeKey(f"street_id {sid!r} appears more than once")
            attrs[sid] = StreetAttributes(
                road_class=RoadClass.parse(row[1]),
                max_speed_kmh=_optional_float(row[2], "max_speed_kmh", line),
                length_m=_optional_float(row[3], "length_m", line),
                avg_speed_kmh=_optional_float(row[avg_idx], "avg_speed_kmh", line)
                if has_avg and len(row) > avg_idx
                else None,
            )
    return attrs


def write_attributes_csv(attrs: dict[str, StreetAttributes], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ATTRS_HEADER)
        for sid, a in attrs.items():
            writer.writerow([
                sid,
                a.road_class.value,
                "" if a.max_speed_kmh is None else repr(float(a.max_speed_kmh)),
                "" if a.length_m is None else repr(float(a.length_m)),
            ])


def _bucket_columns(buckets: int) -> list[str]:
    width = max(3, len(str(buckets - 1)))
    return [f"b{b:0{width}d}" for b in range(buckets)]


def write_snapshot_csv(ds: Dataset, path) -> None:
    """One row per street: bucket value columns (empty = missing) + filling_rate."""
    buckets = ds.grid.buckets_per_week
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["street_id", *_bucket_columns(buckets), "filling_rate"])
        for p in ds.profiles:
            cells = [
                "" if np.isnan(v) else repr(float(v)) for v in p.series.values
            ]
            writer.writerow([p.street_id, *cells, repr(p.filling_rate)])


def read_snapshot_csv(path) -> Dataset:
    """Rebuild a dataset from a snapshot; the grid is inferred from the header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty snapshot file", line=1)
        if len(header) < 3 or header[0] != "street_id" or header[-1] != "filling_rate":
            raise ParseError("snapshot header must be street_id,<buckets...>,filling_rate", line=1)
        buckets = len(header) - 2
        try:
            grid = BucketGrid.with_buckets(buckets)
        except ValueError as exc:
            raise ParseError(str(exc), line=1)
        profiles = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != buckets + 2:
                raise ParseError(
                    f"expected {buckets + 2} fields, got {len(row)}", line=line
                )
            sid = row[0].strip()
            values = np.full(buckets, np.nan)
            for b, cell in enumerate(row[1 : buckets + 1]):
                if cell.strip():
                    values[b] = _parse_float(cell, "speed", line)
            profiles.append(StreetProfile.build(sid, SpeedSeries(values)))
    return Dataset(grid=grid, profiles=tuple(profiles))


def snapshot_json_dict(ds: Dataset) -> dict:
    return {
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "grid": {
            "bucket_minutes": ds.grid.bucket_minutes,
            "buckets_per_week": ds.grid.buckets_per_week,
        },
        "profiles": [
            {
                "street_id": p.street_id,
                "filling_rate": p.filling_rate,
                "values": [None if np.isnan(v) else float(v) for v in p.series.values],
            }
            for p in ds.profiles
        ],
    }


def write_snapshot_json(ds: Dataset, path) -> None:
    Path(path).write_text(json.dumps(snapshot_json_dict(ds), indent=2, sort_keys=True) + "\n")


def read_snapshot_json(path) -> Dataset:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
        raise ParseError(f"unsupported snapshot schema_version {doc.get('schema_version')!r}")
    grid = BucketGrid(bucket_minutes=doc["grid"]["bucket_minutes"])
    profiles = []
    for entry in doc["profiles"]:
        values = np.array(
            [np.nan if v is None else float(v) for v in entry["values"]], dtype=np.float64
        )
        profiles.append(StreetProfile.build(entry["street_id"], SpeedSeries(values)))
    return Dataset(grid=grid, profiles=tuple(profiles))
