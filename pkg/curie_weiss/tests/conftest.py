import pytest

from curie_weiss.core import GroupSpec, ModelSpec
from curie_weiss.estimators import IntervalScale, build_intervals
from curie_weiss.sampler import SamplerConfig


@pytest.fixture
def high_group():
    """One high-temperature group with half of its voters observed."""
    return GroupSpec(beta=0.5, n_pop=200, k_obs=100)


@pytest.fixture
def low_group():
    """One low-temperature group with half of its voters observed."""
    return GroupSpec(beta=1.5, n_pop=200, k_obs=100)


@pytest.fixture
def two_group_spec(high_group, low_group):
    return ModelSpec((high_group, low_group))


@pytest.fixture
def pair_intervals(two_group_spec):
    return build_intervals(two_group_spec, 0.8, 1.2, scale=IntervalScale.PAIR)


@pytest.fixture
def sum_intervals(two_group_spec):
    return build_intervals(two_group_spec, 0.8, 1.2, scale=IntervalScale.SUM)


@pytest.fixture
def sampler_config():
    return SamplerConfig(seed=20240917)


@pytest.fixture
def write_config(tmp_path):
    """Writes a configuration file and returns its path."""

    def write(text, name="experiment.ini"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
