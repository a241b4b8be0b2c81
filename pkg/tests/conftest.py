import pytest

from penaltyflow.problems import SaddleSpec, make_gnep_linear, make_interval_toy, make_linear_toy, make_saddle_point


@pytest.fixture(scope="session")
def interval():
    return make_interval_toy(1.0, 2.0)


@pytest.fixture(scope="session")
def saddle():
    return make_saddle_point(SaddleSpec(n1=5, n2=5, d=3, seed=0))


@pytest.fixture(scope="session")
def gnep():
    return make_gnep_linear(3, (2, 2, 2), d=2, seed=0)


@pytest.fixture(scope="session")
def linear():
    return make_linear_toy(1.0, 0.0)
