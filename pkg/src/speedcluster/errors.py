"""Exception types shared across the package."""


class SpeedClusterError(Exception):
    """Base class for all speedcluster errors."""


class EmptySeries(SpeedClusterError):
    """A series has no observed values where at least one is required."""

    def __init__(self, message: str = "series has no observed values", index=None):
        if index is not None:
            message = f"{message} (series index {index})"
        super().__init__(message)
        self.index = index


class TooFewSeries(SpeedClusterError):
    """Fewer input series than the requested number of clusters."""


class TooFewProfiles(SpeedClusterError):
    """Not enough profiles to fit a scaler."""


class NoPrimaryRoads(SpeedClusterError):
    """No primary-class profiles to build a representative from."""


class NoData(SpeedClusterError):
    """A street has no observed or imputed values at all."""


class InvalidSpec(SpeedClusterError):
    """A synthetic archetype spec violates its constraints."""


class ParseError(SpeedClusterError):
    """An input file failed to parse."""

    def __init__(self, message: str, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidBucket(SpeedClusterError):
    """A record's bucket index falls outside the grid."""


class DuplicateAttributeKey(SpeedClusterError):
    """The attributes table contains a street_id more than once."""
