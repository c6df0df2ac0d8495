import pytest
from hypothesis import HealthCheck, settings

from groundling.backends.stubs import stub_suite, training_vocab

# bulk profile for the generated-case suites (>= 1000 cases each)
settings.register_profile(
    "bulk",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large,
                           HealthCheck.filter_too_much],
)


@pytest.fixture(scope="session")
def suite():
    return stub_suite()


@pytest.fixture(scope="session")
def vocab():
    return training_vocab()
