import numpy as np
import pytest

from hopfnet.dynamics import DynamicsSettings
from hopfnet.network import BulkSpec, build_spectral
from hopfnet.spectral import Spectrum, normalize_signs

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fast_settings():
    # dt = 1e-2 keeps RK4 truncation error near 1e-9 per unit time for these
    # frequency-one oscillations
    return DynamicsSettings(dt=1e-2)


@pytest.fixture(scope="session")
def bulk():
    return BulkSpec(0.5, 3.0)


@pytest.fixture(scope="session")
def fixture_matrix(bulk):
    return build_spectral(50, bulk, 0.0, 42)


def rotation_spectrum(theta_deg=30.0, lam2=-1.0, lam1=0.0):
    th = np.deg2rad(theta_deg)
    v = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    return Spectrum(np.array([lam1, lam2]), normalize_signs(v))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
