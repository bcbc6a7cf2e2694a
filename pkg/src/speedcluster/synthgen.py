"""Seedable synthetic datasets with planted cluster structure.

Streets are generated from archetypes: a base speed with weekday rush-hour
dips (07:00-09:00 and 17:00-19:00), Gaussian noise clipped to the speed
bounds, and buckets dropped independently with a missing probability. The
planted archetype labels are returned for use as a test oracle only; the
main pipeline never sees them.

Each street draws from its own sub-seeded generator, so datasets are
bit-identical for a given (specs, grid, seed) and generation per street is
order-independent. The per-street draw order (noise, missing mask, length)
is part of that contract; changing it breaks golden values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .model import BucketGrid, Dataset, RoadClass, SpeedSeries, StreetProfile
from .pipeline import StreetAttributes

MORNING_RUSH = (7 * 60, 9 * 60)
EVENING_RUSH = (17 * 60, 19 * 60)


@dataclass(frozen=True)
class ArchetypeSpec:
    """Recipe for one family of streets sharing a weekly speed pattern."""

    name: str
    base_speed_kmh: float
    rush_hour_dip_fraction: float
    noise_std_kmh: float
    missing_prob: float
    count: int
    road_class: RoadClass

    def __post_init__(self):
        if self.count < 1:
            raise InvalidSpec(f"{self.name}: count must be at least 1")
        if not 0 <= self.missing_prob < 1:
            raise InvalidSpec(f"{self.name}: missing_prob must be in [0, 1)")
        if not 0 <= self.rush_hour_dip_fraction < 1:
            raise InvalidSpec(f"{self.name}: rush_hour_dip_fraction must be in [0, 1)")
        if self.noise_std_kmh < 0:
            raise InvalidSpec(f"{self.name}: noise_std_kmh must be non-negative")
        if self.base_speed_kmh <= 0:
            raise InvalidSpec(f"{self.name}: base_speed_kmh must be positive")


def default_specs(streets_per_archetype: int = 100, missing_prob: float = 0.3) -> list[ArchetypeSpec]:
    """Three archetypes echoing residential streets, avenues and highways.

    Base speeds and dip depths are chosen so the three groups sit comparably
    far apart under DTW; a single dominant gap would drag the inertia elbow
    to k=2.
    """
    return [
        ArchetypeSpec("residential", 35.0, 0.10, 3.0, missing_prob,
                      streets_per_archetype, RoadClass.RESIDENTIAL),
        ArchetypeSpec("arterial", 52.0, 0.55, 3.5, missing_prob,
                      streets_per_archetype, RoadClass.SECONDARY),
        ArchetypeSpec("highway", 68.0, 0.28, 4.0, missing_prob,
                      streets_per_archetype, RoadClass.TRUNK),
    ]


def important_roads_specs(n_primary: int = 20, n_secondary: int = 180,
                          n_planted: int = 20) -> list[ArchetypeSpec]:
    """Primaries, ordinary secondaries, and secondaries that behave like primaries."""
    return [
        ArchetypeSpec("primary", 68.0, 0.28, 4.0, 0.05, n_primary, RoadClass.PRIMARY),
        ArchetypeSpec("arterial", 52.0, 0.55, 3.5, 0.3, n_secondary, RoadClass.SECONDARY),
        ArchetypeSpec("primary_like_secondary", 68.0, 0.28, 5.0, 0.05,
                      n_planted, RoadClass.SECONDARY),
    ]


def archetype_waveform(spec: ArchetypeSpec, grid: BucketGrid) -> np.ndarray:
    """The noise-free weekly pattern: base speed with weekday rush-hour dips."""
    buckets = grid.buckets_per_week
    values = np.full(buckets, spec.base_speed_kmh)
    for b in range(buckets):
        minute = b * grid.bucket_minutes
        day, minute_of_day = divmod(minute, 24 * 60)
        if day >= 5:
            continue
        in_rush = (
            MORNING_RUSH[0] <= minute_of_day < MORNING_RUSH[1]
            or EVENING_RUSH[0] <= minute_of_day < EVENING_RUSH[1]
        )
        if in_rush:
            values[b] = spec.base_speed_kmh * (1.0 - spec.rush_hour_dip_fraction)
    return values


def generate(
    specs: list[ArchetypeSpec],
    grid: BucketGrid,
    seed: int,
    min_speed_kmh: float = 1.0,
    max_speed_kmh: float = 140.0,
    min_observation_rate: float = 1.0 / 3.0,
) -> tuple[Dataset, dict[str, str]]:
    """Build a dataset plus the street -> archetype labels (oracle only)."""
    if not specs:
        raise InvalidSpec("need at least one archetype spec")
    for spec in specs:
        if not min_speed_kmh <= spec.base_speed_kmh <= max_speed_kmh:
            raise InvalidSpec(
                f"{spec.name}: base speed {spec.base_speed_kmh} outside "
                f"[{min_speed_kmh}, {max_speed_kmh}]"
            )
        if 1.0 - spec.missing_prob <= min_observation_rate:
            raise InvalidSpec(
                f"{spec.name}: missing_prob {spec.missing_prob} leaves an expected "
                f"observation rate at or below {min_observation_rate}"
            )

    profiles = []
    labels: dict[str, str] = {}
    gidx = 0
    for spec in specs:
        waveform = archetype_waveform(spec, grid)
        max_speed_attr = float(round(spec.base_speed_kmh * 1.2))
        for _ in range(spec.count):
            rng = np.random.default_rng((seed, gidx))
            noise = rng.normal(0.0, spec.noise_std_kmh, grid.buckets_per_week)
            values = np.clip(waveform + noise, min_speed_kmh, max_speed_kmh)
            missing = rng.random(grid.buckets_per_week) < spec.missing_prob
            if missing.all():
                missing[0] = False
            values = np.where(missing, np.nan, values)
            length_m = float(np.round(rng.uniform(50.0, 2000.0), 1))
            street_id = f"{spec.name}_{gidx:05d}"
            profiles.append(
                StreetProfile.build(
                    street_id,
                    SpeedSeries(values),
                    road_class=spec.road_class,
                    max_speed_kmh=max_speed_attr,
                    length_m=length_m,
                )
            )
            labels[street_id] = spec.name
            gidx += 1
    return Dataset(grid=grid, profiles=tuple(profiles)), labels


def dataset_attributes(ds: Dataset) -> dict[str, StreetAttributes]:
    """Attribute table mirroring the profiles, for the attributes CSV."""
    return {
        p.street_id: StreetAttributes(
            road_class=p.road_class,
            max_speed_kmh=p.max_speed_kmh,
            length_m=p.length_m,
        )
        for p in ds.profiles
    }


def write_labels_csv(labels: dict[str, str], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["street_id", "archetype"])
        for sid, name in labels.items():
            writer.writerow([sid, name])


def read_labels_csv(path) -> dict[str, str]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return {row[0]: row[1] for row in reader if row}
