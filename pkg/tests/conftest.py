import pytest

from sgdephase import ExperimentParams, derive


@pytest.fixture(scope="session")
def params_default():
    """Benchmark parameter set: theta0 = 90 deg, a = 9.81."""
    return ExperimentParams()


@pytest.fixture(scope="session")
def model_default(params_default):
    return derive(params_default)


@pytest.fixture(scope="session")
def params_axis():
    """Noise along the axis, no mean acceleration: theta0 = 0, a = 0."""
    return ExperimentParams(theta0=0.0, accel=0.0)


@pytest.fixture(scope="session")
def model_axis(params_axis):
    return derive(params_axis)
