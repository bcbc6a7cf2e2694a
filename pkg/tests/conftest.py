import numpy as np
import pytest

from speedcluster.model import BucketGrid, SpeedSeries

# Table-style worked pair: one fully observed street, one with gaps
SAEEDI = [65.0, 83.0, 65.0, 70.0, 66.0, 81.0, 71.0, 65.0]
RAHIMI_RAW = [49.0, 69.0, None, None, 63.0, None, 90.0, None]
RAHIMI_OBSERVED = [49.0, 69.0, 63.0, 90.0]


@pytest.fixture
def saeedi():
    return np.array(SAEEDI)


@pytest.fixture
def rahimi_series():
    return SpeedSeries.from_values(RAHIMI_RAW)


@pytest.fixture
def small_grid():
    """An 8-bucket week for readable fixtures."""
    return BucketGrid.with_buckets(8)
