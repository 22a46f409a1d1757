import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from micflow import Sample

settings.register_profile(
    "micflow", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("micflow")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def monotone_100():
    x = np.arange(100, dtype=float)
    return Sample(x, x**3 + x)


@pytest.fixture
def noisy_linear_500():
    g = np.random.default_rng(7)
    x = g.random(500)
    return Sample(x, x + 0.3 * g.standard_normal(500))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
