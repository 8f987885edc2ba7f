import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rellich_lab.spectral import PeriodicGrid
from rellich_lab.suite import standard_surfaces

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

# acceptance verdicts keyed by criterion, filled in by test_acceptance.py
RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def suite_specs():
    """The fixed ten-surface suite (modes k <= 4, max slope <= 0.75)."""
    return standard_surfaces(10)


@pytest.fixture
def grid128():
    return PeriodicGrid((128,))


def rel_l2(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
