import os

import pytest
from hypothesis import HealthCheck, settings

from windtree.config import build_ringed
from windtree.extract import build_table

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def ring2():
    return build_ringed(2, "1/4")


@pytest.fixture(scope="session")
def table2(ring2):
    return build_table(ring2, 2)
