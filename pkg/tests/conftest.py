import math

import pytest
from hypothesis import settings

from qfriction import AtomModel, QuadratureConfig, SurfaceModel

settings.register_profile("qfriction", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("qfriction")

# Round-number Ohmic toy: 2 tau w_a ~ 1 at z = 1 nm.
WA = 1.0e15
RHO_TOY = 5.65e-5
Z_TOY = 1.0e-9

# Rb above Si
RB_ALPHA0 = 5.26e-39
RB_RHO = 640.0
RB_OMEGA = 2.0 * math.pi * 384.2304844685e12


@pytest.fixture
def ohmic():
    return SurfaceModel.ohmic(RHO_TOY)


@pytest.fixture
def drude():
    return SurfaceModel.drude(1.4e16, 1.0e14)


@pytest.fixture
def iso_atom():
    return AtomModel.oscillator(WA, alpha0=2.0e-38)


@pytest.fixture
def quad():
    return QuadratureConfig()
