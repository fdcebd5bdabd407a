import math

import pytest
from hypothesis import settings

from oubridge import OuParams

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# (theta, sigma0^2) with sigma = 1, T = 1
REFERENCE_SETS = [(1.0, 0.5), (1.0, 2.0), (-0.5, 1.0), (0.0, 1.0)]


def make_params(theta, s02, T=1.0, sigma=1.0, **kw):
    return OuParams(theta=theta, sigma=sigma, sigma0=math.sqrt(s02), T=T, **kw)


@pytest.fixture(params=REFERENCE_SETS, ids=lambda p: f"theta={p[0]}-s02={p[1]}")
def ref_params(request):
    return make_params(*request.param)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
