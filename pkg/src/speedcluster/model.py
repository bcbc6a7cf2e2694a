"""Core domain types: the bucket grid, speed series, street profiles and datasets.

Missing bucket values are represented as NaN inside float arrays, never as a
sentinel speed, because 0 km/h is a meaningful blocked-road speed. All types
are immutable value objects after construction (arrays are frozen), so they
are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptySeries

MINUTES_PER_WEEK = 7 * 24 * 60

_DAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class RoadClass(Enum):
    """OSM-style road importance tags."""

    PRIMARY = "primary"
    SECONDARY = "secondary"
    TERTIARY = "tertiary"
    TRUNK = "trunk"
    RESIDENTIAL = "residential"
    OTHER = "other"

    @classmethod
    def parse(cls, text: str) -> "RoadClass":
        """Case-insensitive parse; anything outside the enum maps to OTHER."""
        try:
            return cls(text.strip().lower())
        except ValueError:
            return cls.OTHER


@dataclass(frozen=True)
class BucketGrid:
    """A fixed weekly grid of time buckets.

    The default is 672 buckets of 15 minutes. bucket_minutes must evenly
    divide the 10080 minutes of a week.
    """

    bucket_minutes: int = 15

    def __post_init__(self):
        if self.bucket_minutes <= 0 or MINUTES_PER_WEEK % self.bucket_minutes != 0:
            raise ValueError(
                f"bucket_minutes={self.bucket_minutes} must be a positive divisor "
                f"of {MINUTES_PER_WEEK}"
            )

    @property
    def buckets_per_week(self) -> int:
        return MINUTES_PER_WEEK // self.bucket_minutes

    @classmethod
    def with_buckets(cls, buckets_per_week: int) -> "BucketGrid":
        if buckets_per_week <= 0 or MINUTES_PER_WEEK % buckets_per_week != 0:
            raise ValueError(
                f"buckets_per_week={buckets_per_week} does not evenly divide a week"
            )
        return cls(bucket_minutes=MINUTES_PER_WEEK // buckets_per_week)

    def bucket_time(self, index: int) -> tuple[str, str]:
        """Map a 0-based bucket index to (day name, 'hh:mm') of its start.

        Bucket 0 starts Monday 00:00; indices advance in bucket_minutes steps.
        """
        if not 0 <= index < self.buckets_per_week:
            raise ValueError(f"bucket index {index} outside [0, {self.buckets_per_week})")
        minute = index * self.bucket_minutes
        day, minute_of_day = divmod(minute, 24 * 60)
        return _DAY_NAMES[day], f"{minute_of_day // 60:02d}:{minute_of_day % 60:02d}"


@dataclass(frozen=True)
class SpeedSeries:
    """One street's weekly speed profile; NaN marks buckets with no data.

    Present values must be positive speeds in km/h.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("speed series must be one-dimensional")
        present = arr[~np.isnan(arr)]
        if np.any(~np.isfinite(present)):
            raise ValueError("speed series contains non-finite values")
        if np.any(present <= 0):
            raise ValueError("present speeds must be positive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, values: Sequence[Optional[float]]) -> "SpeedSeries":
        """Build from a sequence where None (or NaN) marks a missing bucket."""
        return cls(np.array([np.nan if v is None else float(v) for v in values]))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def present_mask(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def n_present(self) -> int:
        return int(self.present_mask.sum())


@dataclass(frozen=True)
class ObservedSeries:
    """The null-dropped series actually fed to DTW.

    values[i] is the speed observed at bucket source_buckets[i] of the
    originating SpeedSeries; bucket indices are strictly increasing.
    """

    values: np.ndarray
    source_buckets: np.ndarray

    def __post_init__(self):
        vals = _frozen_array(self.values, np.float64)
        buckets = _frozen_array(self.source_buckets, np.int64)
        if vals.ndim != 1 or buckets.ndim != 1:
            raise ValueError("observed series components must be one-dimensional")
        if vals.shape[0] == 0:
            raise EmptySeries()
        if vals.shape[0] != buckets.shape[0]:
            raise ValueError("values and source_buckets lengths differ")
        if np.any(~np.isfinite(vals)):
            raise ValueError("observed series contains non-finite values")
        if np.any(np.diff(buckets) <= 0):
            raise ValueError("source_buckets must be strictly increasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "source_buckets", buckets)

    def __len__(self) -> int:
        return self.values.shape[0]

    def embed(self, n_buckets: int) -> SpeedSeries:
        """Re-embed into a full-length series with NaN at unobserved buckets."""
        if n_buckets <= int(self.source_buckets[-1]):
            raise ValueError("n_buckets too small for the source bucket indices")
        full = np.full(n_buckets, np.nan)
        full[self.source_buckets] = self.values
        return SpeedSeries(full)


def drop_nulls(series: SpeedSeries) -> ObservedSeries:
    """Strip missing buckets, keeping values and their bucket indices in order.

    Raises EmptySeries when every bucket is missing.
    """
    mask = series.present_mask
    if not mask.any():
        raise EmptySeries()
    idx = np.flatnonzero(mask)
    return ObservedSeries(values=series.values[idx], source_buckets=idx)


def filling_rate(series: SpeedSeries) -> float:
    """Fraction of buckets with at least one observed speed."""
    return series.n_present / len(series)


@dataclass(frozen=True)
class StreetProfile:
    """A street's weekly series plus joined attributes and filling rate."""

    street_id: str
    series: SpeedSeries
    filling_rate: float
    road_class: RoadClass = RoadClass.OTHER
    max_speed_kmh: Optional[float] = None
    length_m: Optional[float] = None

    def __post_init__(self):
        expected = filling_rate(self.series)
        if self.filling_rate != expected:
            raise ValueError(
                f"filling_rate {self.filling_rate} does not match present-bucket "
                f"count ({expected})"
            )
        if self.max_speed_kmh is not None and self.max_speed_kmh <= 0:
            raise ValueError("max_speed_kmh must be positive when present")
        if self.length_m is not None and self.length_m < 0:
            raise ValueError("length_m must be non-negative when present")

    @classmethod
    def build(
        cls,
        street_id: str,
        series: SpeedSeries,
        road_class: RoadClass = RoadClass.OTHER,
        max_speed_kmh: Optional[float] = None,
        length_m: Optional[float] = None,
    ) -> "StreetProfile":
        """Construct with the filling rate computed from the series."""
        return cls(
            street_id=street_id,
            series=series,
            filling_rate=filling_rate(series),
            road_class=road_class,
            max_speed_kmh=max_speed_kmh,
            length_m=length_m,
        )

    def with_series(self, series: SpeedSeries) -> "StreetProfile":
        return replace(self, series=series, filling_rate=filling_rate(series))


@dataclass(frozen=True)
class Dataset:
    """A bucket grid plus the street profiles living on it."""

    grid: BucketGrid
    profiles: tuple[StreetProfile, ...]

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        seen = set()
        for p in self.profiles:
            if p.street_id in seen:
                raise ValueError(f"duplicate street_id {p.street_id!r}")
            seen.add(p.street_id)
            if len(p.series) != self.grid.buckets_per_week:
                raise ValueError(
                    f"street {p.street_id!r}: series length {len(p.series)} does not "
                    f"match grid ({self.grid.buckets_per_week} buckets)"
                )

    def __len__(self) -> int:
        return len(self.profiles)

    @property
    def street_ids(self) -> tuple[str, ...]:
        return tuple(p.street_id for p in self.profiles)

    def get(self, street_id: str) -> StreetProfile:
        for p in self.profiles:
            if p.street_id == street_id:
                return p
        raise KeyError(street_id)

    def with_profiles(self, profiles: Iterable[StreetProfile]) -> "Dataset":
        return Dataset(grid=self.grid, profiles=tuple(profiles))
