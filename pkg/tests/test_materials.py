import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfriction import EPS0, HBAR
from qfriction.constants import CONSTANTS
from qfriction.errors import DomainError, PoleError
from qfriction.materials import (SurfaceModel, angular_moment, coincidence_weights, green_nearfield,
                                 green_tensor_batch, k_moment, kx_kernels, permittivity,
                                 surface_response, surface_response_imag)
from qfriction.quadrature import QuadratureConfig, integrate_polar_2d, integrate_semi_infinite

MODELS = [SurfaceModel.ohmic(640.0), SurfaceModel.ohmic(5.65e-5), SurfaceModel.drude(1.4e16, 1e14),
          SurfaceModel.constant(3.0 + 0.5j)]


def test_constants():
    assert CONSTANTS.hbar == HBAR == 1.054571817e-34
    assert CONSTANTS.eps0 == EPS0 == 8.8541878128e-12
    with pytest.raises(Exception):
        CONSTANTS.hbar = 1.0


def test_model_validation():
    with pytest.raises(DomainError):
        SurfaceModel.ohmic(0.0)
    with pytest.raises(DomainError):
        SurfaceModel.drude(-1.0, 1.0)
    with pytest.raises(DomainError):
        SurfaceModel.drude(1.0, -1.0)
    with pytest.raises(DomainError):
        SurfaceModel.constant(2.0 - 1.0j)


def test_permittivity_examples():
    assert permittivity(SurfaceModel.vacuum(), 3.7e12) == 1.0
    eps = permittivity(SurfaceModel.ohmic(640.0), 1e10)
    assert eps.real == 1.0
    assert eps.imag == pytest.approx(1.0 / (EPS0 * 640.0 * 1e10), rel=1e-14)
    assert eps.imag == pytest.approx(1.7647e-2, rel=1e-4)
    wp = 1.4e16
    assert abs(permittivity(SurfaceModel.drude(wp, 1e14), 1e6 * wp) - 1.0) < 1e-11


def test_permittivity_pole_at_zero():
    for m in MODELS[:3]:
        with pytest.raises(DomainError, match="pole"):
            permittivity(m, 0.0)


@pytest.mark.parametrize("m", MODELS[:3])
def test_permittivity_imaginary_axis_real_and_above_one(m):
    xi = np.geomspace(1e8, 1e18, 30)
    eps = permittivity(m, 1j * xi)
    assert np.max(np.abs(eps.imag)) < 1e-12 * np.max(np.abs(eps))
    assert np.all(eps.real >= 1.0)


def test_surface_response_examples():
    assert surface_response(SurfaceModel.constant(3.0), 1.0) == pytest.approx(0.5)
    m = SurfaceModel.constant(1e9j)
    assert abs(surface_response(m, 1.0) - 1.0) < 1e-8
    r = SurfaceModel.ohmic(640.0)
    h = 1e3
    fd = (surface_response_imag(r, h) - surface_response_imag(r, -h)) / (2 * h)
    assert fd == pytest.approx(2 * EPS0 * 640.0, rel=1e-10)
    assert r.response_slope_at_zero() == 2 * EPS0 * 640.0


def test_surface_response_agrees_with_permittivity():
    w = np.geomspace(1e9, 1e18, 40)
    for m in MODELS:
        eps = permittivity(m, w)
        ref = (eps - 1) / (eps + 1)
        assert np.allclose(surface_response(m, w), ref, rtol=1e-10, atol=0)
        assert np.allclose(surface_response_imag(m, w), ref.imag, rtol=1e-10, atol=1e-300)


def test_lossless_drude_pole():
    wp = 1e16
    with pytest.raises(PoleError):
        surface_response(SurfaceModel.drude(wp, 0.0), wp / math.sqrt(2.0))


@given(st.floats(8.0, 18.0), st.sampled_from(range(len(MODELS))))
def test_crossing_and_oddness(logw, i):
    m, w = MODELS[i], 10.0 ** logw
    a, b = surface_response(m, w), surface_response(m, -w)
    assert abs(b - np.conj(a)) <= 1e-15 * abs(a)
    assert surface_response_imag(m, w) + surface_response_imag(m, -w) == 0.0


@pytest.mark.parametrize("m", MODELS[:3])
def test_imag_vanishes_at_zero(m):
    w = np.array([1e2, 1e0, 1e-4])
    vals = np.abs(surface_response_imag(m, w))
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-10


def test_green_vacuum_zero_and_origin():
    g = green_nearfield((1e8, 2e8), 1e-8, 1e12, SurfaceModel.vacuum())
    assert np.all(g.value == 0)
    g0 = green_nearfield((0.0, 0.0), 1e-8, 1e12, SurfaceModel.ohmic(640.0))
    assert np.all(g0.value == 0)
    with pytest.raises(DomainError):
        green_nearfield((1.0, 1.0), 0.0, 1.0, SurfaceModel.ohmic(640.0))


@given(st.floats(-3e8, 3e8), st.floats(-3e8, 3e8), st.floats(9.0, 16.0), st.sampled_from(range(4)))
def test_green_parity_and_trace(kx, ky, logw, i):
    m, z, w = MODELS[i], 1e-8, 10.0 ** logw
    k = math.hypot(kx, ky)
    if k < 1.0:
        return
    G = green_nearfield((kx, ky), z, w, m).value
    Gm = green_nearfield((-kx, ky), z, w, m).value
    Gmm = green_nearfield((-kx, -ky), z, w, m).value
    sym = 0.5 * (G + G.T)
    anti = 0.5 * (G - G.T)
    # symmetric part: only xy changes sign under kx -> -kx, diag and zz are even
    assert np.allclose(np.diag(0.5 * (Gm + Gm.T)), np.diag(sym), rtol=1e-14, atol=0)
    assert np.allclose(0.5 * (Gmm - Gmm.T), -anti, rtol=1e-13, atol=1e-300)
    tr = np.trace(G)
    ref = k * surface_response(m, w) / EPS0 * math.exp(-2 * k * z)
    assert abs(tr - ref) <= 1e-12 * abs(tr)
    if surface_response_imag(m, w) == 0.0:
        assert np.all(sym.imag == 0)


def test_green_imaginary_trace_small_frequency():
    m, z, k, w = SurfaceModel.ohmic(640.0), 1e-8, 1e8, 1e3
    G = green_nearfield((k, 0.0), z, w, m).value
    ref = k / EPS0 * math.exp(-2 * k * z) * 2 * EPS0 * 640.0 * w
    assert np.trace(G).imag == pytest.approx(ref, rel=1e-9)


def test_green_batch_matches_single():
    m = SurfaceModel.drude(1.4e16, 1e14)
    kx, ky = np.array([1e8, -3e7]), np.array([2e7, 5e8])
    b = green_tensor_batch(kx, ky, 2e-9, np.array([1e15, 3e13]), m)
    for i in range(2):
        assert np.allclose(b[i], green_nearfield((kx[i], ky[i]), 2e-9, [1e15, 3e13][i], m).value)


def test_k_moment_examples():
    assert k_moment(0, 0.5) == 1.0
    z = 3e-9
    assert k_moment(2, z) == pytest.approx(1 / (4 * z ** 3), rel=1e-15)
    assert k_moment(6, z) == pytest.approx(720 / (128 * z ** 7), rel=1e-15)
    with pytest.raises(DomainError):
        k_moment(1, -1.0)


@pytest.mark.parametrize("p", range(9))
def test_k_moment_vs_quadrature(p):
    z = 2e-9
    q = QuadratureConfig(rel_tol=1e-12)
    # map length at the peak of the integrand
    est = integrate_semi_infinite(lambda k: k ** p * np.exp(-2 * k * z), q,
                                  scale=(p + 1) / (2 * z), substitution="exponential")
    assert est.converged
    assert est.value == pytest.approx(k_moment(p, z), rel=1e-10)


def test_angular_moments():
    assert angular_moment(4, 0) / (2 * math.pi) == pytest.approx(3 / 8)
    assert angular_moment(1, 0) == 0.0
    assert angular_moment(1, 0, half_plane=True) == pytest.approx(2.0)
    assert angular_moment(2, 2) == pytest.approx(math.pi / 4)


def test_radial_angular_moment_of_friction_integrand():
    """``int_{kx>0} d^2k kx^4 k e^{-2kz}`` -> 135 pi / (64 z^7); the tensor trace adds a 2."""
    z = 1.0
    closed = angular_moment(4, 0, half_plane=True) * k_moment(6, z)
    assert closed == pytest.approx(135 * math.pi / (64 * z ** 7), rel=1e-14)
    est = integrate_polar_2d(lambda k, t: (k * np.cos(t)) ** 4 * k * np.exp(-2 * k * z),
                             QuadratureConfig(rel_tol=1e-10), k_scale=1 / (2 * z),
                             theta_range=(-math.pi / 2, math.pi / 2))
    assert est.value * (2 * math.pi) ** 2 == pytest.approx(closed, rel=1e-9)


def test_coincidence_weights():
    z = 1e-8
    assert np.allclose(coincidence_weights(z), np.array([1, 1, 2]) / (16 * math.pi * z ** 3), rtol=1e-14)
    assert np.sum(coincidence_weights(z, 2)) == pytest.approx(3 / (8 * math.pi * z ** 5), rel=1e-14)


def test_kx_kernels_against_numeric_ky_integral():
    from scipy.integrate import quad as squad
    for u in (0.3, 1.0, 4.0):
        def integrand(q, i):
            k = math.hypot(u, q)
            T = [u * u / k ** 2, q * q / k ** 2, 1.0][i]
            return k * math.exp(-k) * T
        ref = [2 * squad(integrand, 0, np.inf, args=(i,), epsabs=0, epsrel=1e-12)[0] for i in range(3)]
        assert np.allclose(kx_kernels(u), ref, rtol=1e-9)
    assert np.allclose(kx_kernels(0.0), [0.0, 2.0, 2.0])


def test_poorly_scaled_moment_is_flagged_not_silently_wrong():
    z, p = 2e-9, 8
    est = integrate_semi_infinite(lambda k: k ** p * np.exp(-2 * k * z), QuadratureConfig(rel_tol=1e-12),
                                  scale=1 / (2 * z), substitution="exponential")
    assert not est.converged or est.value == pytest.approx(k_moment(p, z), rel=1e-12)
