"""Clustering of road-segment speed profiles with a DTW metric.

The package groups streets by their weekly speed time series using K-Means
with Dynamic Time Warping, then uses the clusters to impute missing speeds,
assign congestion colors, and surface secondary roads that behave like
primary ones.
"""

__version__ = "0.1.0"

from .clustering import (
    Centroid,
    ClusterConfig,
    ClusterModel,
    DtwKMeans,
    elbow_select,
    inertia,
    kmeans_dtw,
    select_elbow_from_curve,
    update_barycenter,
)
from .colorify import (
    CongestionAssignment,
    CongestionLevel,
    CongestionThresholds,
    classify,
    colorify,
    free_flow_reference,
    impute,
)
from .dtw import (
    AlignmentPath,
    accumulated_cost_matrix,
    cross_distances,
    dtw_alignment,
    dtw_distance,
    pairwise_distances,
)
from .errors import (
    DuplicateAttributeKey,
    EmptySeries,
    InvalidBucket,
    InvalidSpec,
    NoData,
    NoPrimaryRoads,
    ParseError,
    SpeedClusterError,
    TooFewProfiles,
    TooFewSeries,
)
from .important_roads import (
    ImportanceResult,
    PrimaryRepresentative,
    find_important_secondary,
    primary_representative,
)
from .model import (
    BucketGrid,
    Dataset,
    ObservedSeries,
    RoadClass,
    SpeedSeries,
    StreetProfile,
    drop_nulls,
    filling_rate,
)
from .pipeline import (
    CleaningConfig,
    CleaningReport,
    ProfileFeatureScaler,
    RawRecord,
    ScalerParams,
    apply_scaler,
    clean,
    fit_scaler,
    ingest,
    join_attributes,
)
from .synthgen import ArchetypeSpec, default_specs, generate, important_roads_specs
