import pytest
from hypothesis import HealthCheck, settings

from filterbench.model import SHIPPED, shipped_model

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=120,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def models():
    return {name: shipped_model(name) for name in SHIPPED}


@pytest.fixture(scope="session")
def dinf(models):
    return models["dinf"]


@pytest.fixture(scope="session")
def norm(models):
    return models["norm"]


@pytest.fixture(scope="session")
def pinf(models):
    return models["pinf"]


@pytest.fixture(scope="session")
def kerth(models):
    return models["kerth"]
