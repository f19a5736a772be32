import math

import pytest

from src.config import FitConfig, IntegratorConfig, PulseConfig
from src.physics.units import SystemParams, fwhm_to_tau, wavenumber_to_angfreq


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tau_p():
    """75 fs read as the field FWHM; the narrower pulse of the two conventions."""
    return fwhm_to_tau(75.0)


@pytest.fixture
def lab_tau_p():
    """tau_p of the configured 75 fs pulse."""
    return PulseConfig().tau_p()


@pytest.fixture
def fast_cfg():
    """Coarse step for checks that do not depend on the 0.05 fs default."""
    return IntegratorConfig(step=0.25)


@pytest.fixture
def wide_cfg():
    """Windows wide enough that truncated pulse tails are below 1e-12."""
    return IntegratorConfig(step=0.05, start_offset=8.0, readout_offset=8.0)


@pytest.fixture
def fig3_params(lab_tau_p):
    return SystemParams(0.03, 60.0, wavenumber_to_angfreq(80.0), lab_tau_p)


@pytest.fixture
def coherent_params(tau_p):
    return SystemParams(0.02, math.inf, 0.0, tau_p)


@pytest.fixture
def fast_fit():
    return FitConfig(grid_step=1.0)
