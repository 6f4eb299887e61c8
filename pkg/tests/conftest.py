import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hybridsea.duffing import DuffingParams
from hybridsea.waves import SpectrumSpec, sample_realization

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def nominal_params():
    return DuffingParams(m=1.0, c1=1.0, c3=0.01, b1=0.1, b2=0.0, beta=1.0, alpha=0.0)


@pytest.fixture
def linear_params():
    return DuffingParams(m=1.0, c1=1.0, c3=0.0, b1=0.1, b2=0.0, beta=1.0, alpha=0.0)


@pytest.fixture(scope="session")
def sea_500():
    """Hs=1, wp=1 realization repeating every 500 s."""
    return sample_realization(SpectrumSpec.bretschneider(1.0, 1.0), 500.0, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, repeated at the end of the run.
ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(capsys):
    """Print (and remember) a one-line PASS/FAIL result; returns the pass flag."""

    def report(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
