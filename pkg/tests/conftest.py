import pytest
from hypothesis import HealthCheck, settings

from twistpara.certify import CONGRUENT_5, compute_twist_set
from twistpara.curve import X0_19

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def x019_set():
    """Twist set of X0(19) at the default sieve height, d <= 20000."""
    return compute_twist_set(X0_19, 20000)


@pytest.fixture(scope="session")
def congruent_small():
    return compute_twist_set(CONGRUENT_5, 600, sieve_height=120)
