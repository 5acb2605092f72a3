import pytest

from shotdeconv.model import Exponential, GaussianMixture, ModelParams


@pytest.fixture
def ref_params():
    """Reference configuration of the error-table experiment."""
    return ModelParams(100.0, 80.0, 1.25)


@pytest.fixture
def ref_marks():
    """Three-mode Gaussian mixture used throughout the benchmarks."""
    return GaussianMixture((0.3, 0.5, 0.2), (4.0, 12.0, 22.0), (1.0, 1.0, 0.5))


@pytest.fixture
def gamma_params():
    """Configuration whose stationary marginal is Gamma(2, 1)."""
    return ModelParams(2.0, 1.0, 2.0)


@pytest.fixture
def gamma_marks():
    return Exponential(1.0)
