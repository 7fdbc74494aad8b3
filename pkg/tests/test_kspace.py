import math

import numpy as np
import pytest

from qfriction.kspace import doppler_green_integral, doppler_green_integral_polar, theta
from qfriction.materials import SurfaceModel, coincidence_weights, surface_response
from qfriction.constants import EPS0
from qfriction.quadrature import QuadratureConfig

SI = SurfaceModel.ohmic(640.0)
Z = 1e-8


def test_theta_half_at_edge():
    assert np.array_equal(theta(np.array([-1.0, 0.0, 2.0])), [0.0, 0.5, 1.0])


def test_rest_closed_form_matches_numeric_kernels():
    w = np.array([3e9, -2e9, 1e12])
    a = doppler_green_integral(SI, Z, w, 0.0, part="full")
    b = doppler_green_integral(SI, Z, w, 0.0, QuadratureConfig(rel_tol=1e-10), part="full",
                               numeric_rest=True)
    ref = surface_response(SI, w)[:, None] * coincidence_weights(Z) / (2 * EPS0)
    assert np.allclose(a, ref, rtol=1e-12)
    assert np.allclose(b, ref, rtol=1e-8)


# Doppler shifts comparable to the surface relaxation rate keep the polar
# integrand smooth enough for the trapezoid angular rule.
TOY = SurfaceModel.ohmic(5.65e-5)


@pytest.mark.parametrize("v,gate", [(0.0, "positive"), (3e5, None), (3e5, "positive"), (3e5, "sign"),
                                    (3e5, "window")])
def test_kx_kernel_route_matches_polar_route(v, gate):
    z = 1e-9
    w = np.array([3e14, -2e14])
    a = doppler_green_integral(TOY, z, w, v, QuadratureConfig(rel_tol=1e-10), gate=gate, part="imag")
    b = np.array([np.diag(doppler_green_integral_polar(TOY, z, wi, v, QuadratureConfig(rel_tol=1e-7),
                                                       gate=gate, part="imag")) for wi in w])
    scale = np.max(np.abs(a))
    assert np.max(np.abs(a - b)) <= 1e-5 * scale


def test_velocity_parity():
    w = np.array([3e9, -2e9, 5e10])
    for gate in (None, "positive", "sign"):
        a = doppler_green_integral(SI, Z, w, 2e4, gate=gate, part="imag")
        b = doppler_green_integral(SI, Z, w, -2e4, gate=gate, part="imag")
        assert np.allclose(a, b, rtol=0, atol=1e-8 * np.max(np.abs(a)))


def test_vacuum_is_zero():
    a = doppler_green_integral(SurfaceModel.vacuum(), Z, np.array([1e12]), 3e4, part="full")
    assert np.all(a == 0)
