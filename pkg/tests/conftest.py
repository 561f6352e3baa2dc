import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from openquad.spectral import append_aux_dissipator, dissipative_gap
from openquad.stencil import random_stencil

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gapped_random(rng, statistics, dims, bands, extent=None, min_gap=0.05, grid=16, n_quadratic=0):
    """Random stencil, shifted by the auxiliary loss dissipator when its gap is below ``min_gap``.

    Random bosonic stencils are almost always unstable (gain from the a^dag
    components of the Lindblad operators); the shift makes them gapped.
    """
    st = random_stencil(rng, statistics, dims=dims, bands=bands, reach=1, n_linear=2, n_quadratic=n_quadratic, extent=extent)
    g = dissipative_gap(st, grid=None if extent is not None else (grid,) * dims).gap
    if g <= min_gap:
        st = append_aux_dissipator(st, min_gap - g + rng.uniform(0.1, 0.5))
    return st


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
