import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def three_cols():
    """e1, e2 and their normalized sum in R^2."""
    s = 1.0 / np.sqrt(2.0)
    return np.array([[1.0, 0.0, s], [0.0, 1.0, s]])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[k])
