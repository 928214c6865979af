import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from orthocurv.fixtures import load_fixture

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def milne():
    return load_fixture("milne")


@pytest.fixture(scope="session")
def polar4d():
    return load_fixture("polar4d")


@pytest.fixture(scope="session")
def sphere():
    return load_fixture("sphere2")


@pytest.fixture(scope="session")
def hyperbolic():
    return load_fixture("hyperbolic2")


@pytest.fixture(scope="session")
def schwarzschild():
    return load_fixture("schwarzschild")


@pytest.fixture(scope="session")
def anisotropic():
    return load_fixture("anisotropic4d")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one summary line per acceptance criterion."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
