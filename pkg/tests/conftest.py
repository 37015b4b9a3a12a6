import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("wlab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("wlab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(params=["numba", "numpy"])
def kernel_backend(request):
    from wlab import _accel
    if request.param == "numba" and not _accel.HAVE_NUMBA:
        pytest.skip("numba missing")
    saved = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(saved)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERIA", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
