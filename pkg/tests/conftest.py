import math

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from cvqca.gaussian_model import ModelParams

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def physical_params(r_max=1.5, eps_min=0.3, nb_max=2.0):
    return st.builds(
        ModelParams,
        r=st.floats(0.0, r_max),
        epsilon=st.floats(eps_min, 1.0),
        epsilon_prime=st.floats(eps_min, 1.0),
        n_b_prime=st.floats(0.0, nb_max),
        phi_0=st.just(0.0),
        phi_c=st.floats(-math.pi, math.pi),
    )


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
