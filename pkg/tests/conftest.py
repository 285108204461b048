import numpy as np
import pytest

from fwmbs.core import wavelength_to_angular_frequency
from fwmbs.materials import default_material_db
from fwmbs.modesolver import DispersionProfile, WaveguideGeometry


@pytest.fixture(scope="session")
def db():
    return default_material_db()


@pytest.fixture(scope="session")
def strip_1200():
    """The 550 nm x 1200 nm air-clad Si3N4-on-SiO2 strip, 18 mm long."""
    return WaveguideGeometry(width=1200e-9, height=550e-9)


def make_profile(beta2=2e-26, gamma=2.0, center_nm=1550.0, half_span=8e13,
                 n=401, beta1=5e-9, beta0=10.0):
    """Synthetic quadratic-dispersion profile, constant gamma."""
    om0 = wavelength_to_angular_frequency(center_nm * 1e-9)
    om = np.linspace(om0 - half_span, om0 + half_span, n)
    beta = beta0 + beta1 * (om - om0) + 0.5 * beta2 * (om - om0) ** 2
    return DispersionProfile.from_beta(om, beta, gamma=gamma)


@pytest.fixture
def quad_profile():
    return make_profile()
