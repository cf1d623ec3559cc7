import math

import numpy as np
import pytest

from nlispec.dispersion import SellmeierModel, UniaxialCrystalIndex
from nlispec.gas import GasState
from nlispec.interferometer import InterferometerGeometry, MapAxes


@pytest.fixture
def const_crystal():
    """Dispersionless equal-index crystal: phase-matched at theta = 0 for
    every wavelength, so angular behavior can be isolated."""
    m = SellmeierModel.constant(2.2, valid_um=(0.3, 30.0))
    return UniaxialCrystalIndex(m, m, cut_angle_rad=math.pi / 4)


@pytest.fixture
def const_geom(const_crystal):
    return InterferometerGeometry(
        crystal=const_crystal,
        crystal_length_cm=0.05,
        gap_length_cm=2.5,
        pump_wavelength_nm=532.0,
    )


@pytest.fixture
def small_axes():
    return MapAxes(
        wavelength_nm=np.linspace(604.0, 610.0, 5),
        angle_rad=np.linspace(-6.656e-3, 6.656e-3, 257),
    )


def flat_gas(dn=0.0, alpha=0.0, p_torr=10.0, t_k=300.0,
             nu_span=(1500.0, 3500.0)):
    """Gas with wavelength-flat idler response (not causal; test-only)."""
    nu = np.linspace(*nu_span, 5)
    return GasState(
        p_torr=p_torr, t_k=t_k,
        idler_nu_cm=nu,
        idler_alpha_cm=np.full(5, float(alpha)),
        idler_index=np.full(5, 1.0 + dn),
    )


@pytest.fixture
def flat_gas_factory():
    return flat_gas
