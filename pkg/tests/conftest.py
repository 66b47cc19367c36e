import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from psos_gibbs import backend

settings.register_profile(
    "default", max_examples=200, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_params(rng, n, theta_range=(0.01, 2.0), p_range=(0.05, 12.0)):
    """Half uniform theta in ``theta_range``, half log-uniform over (1e-3, 1e3)."""
    out = []
    for i in range(n):
        if i % 2:
            theta = float(np.exp(rng.uniform(math.log(1e-3), math.log(1e3))))
        else:
            theta = float(rng.uniform(*theta_range))
        out.append((theta, float(rng.uniform(*p_range))))
    return out


@pytest.fixture(params=sorted(backend.implementations()))
def kernels(request):
    return backend.implementations()[request.param]


# acceptance lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
