import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import exp1, expi

from qfriction import EPS0, HBAR
from qfriction.errors import DomainError, PoleError
from qfriction.kspace import doppler_green_integral_polar
from qfriction.materials import SurfaceModel, surface_response
from qfriction.quadrature import QuadratureConfig, fourier_transform_tail
from qfriction.response import (AtomModel, alpha_imag_slope, alpha_scalar, bare_polarizability,
                                polarizability_oscillator, pv_shift, qrt_alpha_imaginary_axis,
                                qrt_correlation, resolve_gamma_a, self_energy, tls_delta_shift,
                                tls_gamma, tls_polarizability)

SI = SurfaceModel.ohmic(640.0)
TOY = SurfaceModel.ohmic(5.65e-5)
VAC = SurfaceModel.vacuum()
WA = 1e15
D = (3e-30, -2e-30, 5e-30)
OSC = AtomModel.oscillator(WA, d=D)
ISO = AtomModel.oscillator(WA, alpha0=2e-38)
TLS = AtomModel.two_level(WA, d=(0.0, 0.0, 1e-29))


def test_atom_validation():
    with pytest.raises(DomainError):
        AtomModel.oscillator(-1.0, alpha0=1e-39)
    with pytest.raises(DomainError):
        AtomModel.oscillator(WA)
    with pytest.raises(DomainError):
        AtomModel.oscillator(WA, d=(1e-30, 0, 0), alpha0=1e-39)
    with pytest.raises(DomainError):
        AtomModel.oscillator(WA, d=(0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        AtomModel.qrt(WA, alpha0=1e-39, gamma_a=-1.0)


def test_alpha0_dipole_consistency():
    a = AtomModel.oscillator(WA, d=(0.0, 0.0, 2e-29))
    assert a.static_polarizability == pytest.approx(2 * 4e-58 / (3 * HBAR * WA))
    iso = AtomModel.oscillator(WA, alpha0=a.static_polarizability)
    assert iso.dipole_sq == pytest.approx(a.dipole_sq)
    assert np.trace(iso.dipole_dyad()) == pytest.approx(iso.dipole_sq)


def test_self_energy_vacuum_zero():
    for v in (0.0, 3e4):
        assert np.all(self_energy(OSC, VAC, 1e-8, np.array([1e14, -2e15]), v).value == 0)


def test_self_energy_rest_closed_form_vs_polar_quadrature():
    z, w = 1e-8, 3e14
    sig = self_energy(OSC, SI, z, w).value[..., 0]
    dx, dy, dz = D
    closed = (2 * WA / HBAR) * surface_response(SI, w) * (dx * dx + dy * dy + 2 * dz * dz) / (
        32 * math.pi * EPS0 * z ** 3)
    assert abs(sig - closed) <= 1e-12 * abs(closed)
    G = doppler_green_integral_polar(SI, z, w, 0.0, QuadratureConfig(rel_tol=1e-10))
    num = (2 * WA / HBAR) * np.asarray(D) @ G @ np.asarray(D)
    assert abs(num - closed) <= 1e-8 * abs(closed)


@given(st.floats(13.0, 16.0), st.floats(1.0, 6.0), st.booleans())
def test_self_energy_even_in_v(logw, logv, neg):
    w = (-1 if neg else 1) * 10.0 ** logw
    v = 10.0 ** logv
    a = self_energy(OSC, TOY, 1e-9, w, v).value
    b = self_energy(OSC, TOY, 1e-9, w, -v).value
    assert np.allclose(a, b, rtol=1e-9, atol=0)


def test_self_energy_damping_sign():
    sig = self_energy(OSC, SI, 1e-8, np.geomspace(1e10, 1e16, 7)).value
    assert np.all(sig.imag > 0)


def test_static_free_polarizability():
    a = polarizability_oscillator(ISO, VAC, 1e-8, 0.0).value
    assert np.allclose(a, 2e-38 * np.eye(3), rtol=1e-14)
    b = bare_polarizability(OSC, 0.0)
    assert np.trace(b).real == pytest.approx(3 * OSC.static_polarizability)


@given(st.floats(12.0, 16.0), st.floats(0.0, 6.0))
def test_polarizability_crossing(logw, logv):
    w, v = 10.0 ** logw, 10.0 ** logv - 1.0
    a = polarizability_oscillator(OSC, TOY, 1e-9, w, v).value
    b = polarizability_oscillator(OSC, TOY, 1e-9, -w, v).value
    assert np.allclose(b, np.conj(a), rtol=1e-10, atol=0)
    assert np.allclose(a, a.T)


def test_polarizability_symmetric_and_imag_axis_real():
    a = polarizability_oscillator(OSC, TOY, 1e-9, 1j * np.geomspace(1e12, 1e17, 6)).value
    assert np.max(np.abs(a.imag)) < 1e-12 * np.max(np.abs(a))


def test_polarizability_pole():
    atom = AtomModel.oscillator(WA, alpha0=1e-39)
    with pytest.raises(PoleError):
        polarizability_oscillator(atom, VAC, 1e-8, WA)


def test_low_frequency_imag_slope():
    """Im alpha ~ w for small w; slope at second order in d is alpha0^2 Delta_I'(0) w_c / (8 pi eps0 z^3)."""
    z = 1e-8
    rb = AtomModel.oscillator(2.41e15, alpha0=5.26e-39)
    h = 1e3
    a = polarizability_oscillator(rb, SI, z, np.array([h, 2 * h])).value
    im = np.diagonal(a, axis1=-2, axis2=-1).imag
    assert np.allclose(im[1] / im[0], 2.0, rtol=1e-6)
    slope = im[0] / h
    ref = 5.26e-39 ** 2 * 2 * EPS0 * 640.0 * np.array([1, 1, 2]) / (32 * math.pi * EPS0 * z ** 3)
    assert np.allclose(slope, ref, rtol=1e-6)


def test_weak_coupling_rate():
    """Dressed minus bare scales as s^2 relative to the bare response when |d| -> s |d|."""
    w = 0.3 * WA
    errs = []
    for s2 in (1e-1, 1e-2, 1e-3):
        at = OSC.scaled(s2)
        a = polarizability_oscillator(at, TOY, 1e-9, w).value
        b = bare_polarizability(at, w)
        errs.append(np.max(np.abs(a - b)) / np.max(np.abs(b)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.allclose(ratios, 10.0, rtol=0.05)


def test_alpha_scalar_slope_closed_form():
    z = 1e-8
    rb = AtomModel.oscillator(2.41e15, alpha0=5.26e-39)
    ref = 5.26e-39 ** 2 * 640.0 / (4 * math.pi * z ** 3)
    assert alpha_imag_slope(rb, SI, z, method="closed") == pytest.approx(ref, rel=1e-14)
    assert alpha_imag_slope(rb, SI, z) == pytest.approx(ref, rel=1e-8)
    assert alpha_imag_slope(rb, SI, z, convention="third") == pytest.approx(ref / 3, rel=1e-8)
    assert alpha_scalar(rb, VAC, z, np.array([1e10, 1e14])).imag.tolist() == [0.0, 0.0]
    with pytest.raises(DomainError):
        alpha_scalar(OSC, SI, z, 1e10)


def test_tls_gamma_examples():
    z = 1e-8
    assert np.all(tls_gamma(TLS, VAC, z, np.array([1e14, -1e14]), 300.0) == 0)
    w = 3e14
    g = tls_gamma(TLS, SI, z, w)[0]
    ref = (2 / HBAR) * surface_response(SI, w).imag * 2 * 1e-58 / (32 * math.pi * EPS0 * z ** 3)
    assert g == pytest.approx(ref, rel=1e-12)


@given(st.floats(12.0, 16.0), st.floats(1.0, 6.0))
def test_tls_gamma_even_in_w_and_v(logw, logv):
    w, v = 10.0 ** logw, 10.0 ** logv
    g = tls_gamma(TLS, TOY, 1e-9, np.array([w, -w]), v)
    assert g[0] == pytest.approx(g[1], rel=1e-9)
    assert tls_gamma(TLS, TOY, 1e-9, w, -v) == pytest.approx(g[0], rel=1e-9)


def test_pv_shift_exponential_ohmic_profile():
    c, om = 2.0, 3.0
    for w in (0.5, 3.0, 10.0):
        s = w / om
        pv = -0.5 * (-math.exp(-s) * expi(s) + math.exp(s) * exp1(s))
        ref = 2 * w * w / math.pi * c * pv
        got = pv_shift(lambda x: c * x * np.exp(-x / om), w, 1.0, QuadratureConfig(rel_tol=1e-12))
        assert got == pytest.approx(ref, rel=1e-9)


def test_tls_shift_zero_without_surface_and_even_in_v():
    assert np.all(tls_delta_shift(TLS, VAC, 1e-8, np.array([2e14]), 0.0) == 0)
    a = tls_delta_shift(TLS, TOY, 1e-9, np.array([0.5 * WA]), 2e5)
    b = tls_delta_shift(TLS, TOY, 1e-9, np.array([0.5 * WA]), -2e5)
    assert np.allclose(a, b, rtol=1e-8)


def test_tls_polarizability_free_limit_and_crossing():
    w = np.array([0.2, 0.7]) * WA
    a = tls_polarizability(TLS, SI, 1e-8, w, shift=np.zeros((2, 1)), gamma=np.zeros((2, 1))).value
    ref = (2 * WA / HBAR) * np.outer(TLS.d, TLS.d) / (WA ** 2 - w[:, None, None] ** 2)
    assert np.allclose(a, ref, rtol=1e-14)
    b = tls_polarizability(TLS, TOY, 1e-9, -w).value
    c = tls_polarizability(TLS, TOY, 1e-9, w).value
    assert np.allclose(b, np.conj(c), rtol=1e-9)


def test_tls_matches_oscillator_at_weak_coupling():
    weak = AtomModel.two_level(WA, d=(0.0, 0.0, 1e-32))
    osc = AtomModel.oscillator(WA, d=(0.0, 0.0, 1e-32))
    w = np.array([1e-3 * WA])
    a = tls_polarizability(weak, TOY, 1e-9, w).value[0, 2, 2]
    b = polarizability_oscillator(osc, TOY, 1e-9, w).value[0, 2, 2]
    assert abs(a - b) / abs(b) < 1e-3


def test_qrt_correlation():
    atom = AtomModel.qrt(WA, d=D, gamma_a=0.05 * WA)
    assert np.allclose(qrt_correlation(atom, 0.0), np.outer(D, D))
    g = atom.gamma_a
    c = qrt_correlation(atom, 2.0 / g)
    assert abs(np.trace(c)) == pytest.approx(np.dot(D, D) * math.exp(-1.0), rel=1e-12)
    with pytest.raises(DomainError):
        qrt_correlation(AtomModel.qrt(WA, d=D), 1.0)


def test_qrt_one_sided_transform_is_lorentzian():
    """``int_0^inf dtau e^{i w tau} C(tau)`` -> ``|d|^2 / (gamma/2 - i (w - w_a))``."""
    g = 0.1
    atom = AtomModel.qrt(1.0, d=(0.0, 0.0, 1.0), gamma_a=g)
    w = 1.3
    tau_max = 400.0 / g
    est = fourier_transform_tail(lambda t: qrt_correlation(atom, t)[..., 2, 2], np.array([-w]),
                                 QuadratureConfig(rel_tol=1e-10), upper=tau_max, scale=1.0)
    ref = 1.0 / (g / 2 - 1j * (w - 1.0))
    assert abs(est.value[0] - ref) < 1e-7 * abs(ref)


def test_qrt_alpha_reduces_to_bare_at_zero_gamma():
    atom = AtomModel.qrt(WA, d=D)
    xi = np.geomspace(1e12, 1e17, 5)
    a = qrt_alpha_imaginary_axis(atom, xi, 0.0)
    b = bare_polarizability(atom, 1j * xi)
    assert np.allclose(a, b.real, rtol=1e-14)


def test_resolve_gamma_from_surface():
    atom = AtomModel.qrt(WA, d=(0.0, 0.0, 1e-29))
    g = resolve_gamma_a(atom, SI, 1e-8)
    assert g == pytest.approx(tls_gamma(TLS, SI, 1e-8, WA)[0], rel=1e-12)
    with pytest.raises(DomainError):
        resolve_gamma_a(atom)
