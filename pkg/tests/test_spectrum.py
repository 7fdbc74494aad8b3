import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfriction import EPS0, HBAR
from qfriction.kspace import theta
from qfriction.materials import SurfaceModel
from qfriction.quadrature import QuadratureConfig, integrate_semi_infinite
from qfriction.response import AtomModel, qrt_correlation
from qfriction.spectrum import (alpha_imag_tensor, correlation_from_spectrum, current_J, eta_tensor,
                                fdt_residual, g_tensor, power_spectrum, qrt_spectrum)

# 2 tau w_a = 2 at z = 10 nm
WA = 1e14
SUR = SurfaceModel.ohmic(1 / (WA * EPS0))
Z = 1e-8
AT = AtomModel.oscillator(WA, alpha0=5e-39)
ANISO = AtomModel.oscillator(WA, d=(1e-30, 2e-30, 4e-30))


def test_rest_spectrum_gate_and_fdt():
    w = np.array([-0.5, -1e-3, 0.3, 1.1]) * WA
    S = power_spectrum(AT, SUR, Z, w).value
    assert np.all(S[:2] == 0)
    ref = HBAR / math.pi * alpha_imag_tensor(AT, SUR, Z, w[2:])
    assert np.allclose(S[2:], ref, rtol=1e-9, atol=0)


def test_fdt_residual_dressed_oscillator():
    grid = np.geomspace(1e-3 * WA, 1e2 * WA, 50)
    r = fdt_residual(AT, SUR, Z, grid)
    assert r.spectrum < 1e-8 and r.identity < 1e-8
    r = fdt_residual(ANISO, SUR, Z, grid)
    assert r.spectrum < 1e-8 and r.identity < 1e-8
    r = fdt_residual(AT, SurfaceModel.vacuum(), Z, grid)
    assert r.spectrum == 0.0


def test_fdt_residual_qrt_is_not_small():
    grid = np.linspace(-2 * WA, 3 * WA, 101)
    res = [fdt_residual(AtomModel.qrt(WA, alpha0=5e-39, gamma_a=g * WA), SUR, Z, grid).integrated
           for g in (0.01, 0.1)]
    assert res[1] > 0.01
    # grows with the decay rate, roughly in proportion
    assert 3.0 < res[1] / res[0] < 30.0


@given(st.floats(-0.5, 2.0), st.floats(0.0, 2.3))
def test_spectrum_even_in_v_real_symmetric_positive(wf, logv):
    w, v = wf * WA, 10.0 ** logv
    S = power_spectrum(ANISO, SUR, Z, np.array([w]), v).value[0]
    Sm = power_spectrum(ANISO, SUR, Z, np.array([w]), -v).value[0]
    scale = np.max(np.abs(S)) + 1e-300
    assert np.max(np.abs(S - Sm)) <= 1e-8 * scale
    assert np.isrealobj(S) and np.allclose(S, S.T)
    assert np.trace(S) >= 0.0


def test_current_zero_at_rest_and_outside_window():
    w = np.array([-0.3, 0.4]) * WA
    assert np.all(current_J(AT, SUR, Z, w, 0.0) == 0)
    v = 30.0
    kmax = QuadratureConfig().radial_cutoff(Z) / (2 * Z)
    far = np.array([2.0, -2.0]) * kmax * v
    assert np.all(current_J(AT, SUR, Z, far, v) == 0)


def test_decomposition_on_grid():
    ws = np.linspace(-0.5, 2.0, 10) * WA
    for v in (1.0, 3.0, 10.0, 30.0, 100.0):
        S = power_spectrum(ANISO, SUR, Z, ws, v).value
        R = HBAR / math.pi * (theta(ws)[:, None, None] * alpha_imag_tensor(ANISO, SUR, Z, ws, v)
                              - current_J(ANISO, SUR, Z, ws, v))
        assert np.max(np.abs(S - R)) <= 1e-6 * np.max(np.abs(S))


def test_eta_zero_at_origin_and_vacuum():
    eta = eta_tensor(AT, SUR, Z, [0.0, 0.3 * WA])
    assert np.all(eta[0] == 0.0)
    assert np.max(np.abs(eta[1])) > 0
    # smallest nonzero argument: eta is O(w), so eta(w)/eta(0.3 w_a) -> 0
    small = eta_tensor(AT, SUR, Z, [1e-9 * WA])
    assert np.max(np.abs(small)) < 1e-8 * np.max(np.abs(eta[1]))
    vac = SurfaceModel.vacuum()
    assert np.all(eta_tensor(AT, vac, Z, [0.3 * WA]) == 0)
    assert np.all(g_tensor(vac, Z, [0.3 * WA]) == 0)
    assert np.all(np.isfinite(g_tensor(SUR, Z, [0.0])))


def test_eta_fd_agrees_with_analytic():
    w = [0.3 * WA, 1.2 * WA]
    a = eta_tensor(AT, SUR, Z, w, method="fd")
    b = eta_tensor(AT, SUR, Z, w, method="analytic")
    assert np.allclose(a, b, rtol=1e-5, atol=1e-6 * np.max(np.abs(b)))
    assert np.allclose(g_tensor(SUR, Z, w, method="fd"), g_tensor(SUR, Z, w), rtol=1e-6)


def test_small_velocity_expansion_error_is_fourth_order():
    w0 = np.array([0.5 * WA, 1.1 * WA])
    eta = eta_tensor(AT, SUR, Z, w0)
    Ia = alpha_imag_tensor(AT, SUR, Z, w0, 0.0)
    errs = []
    vs = [1e3, 2e3, 4e3]
    for v in vs:
        S = power_spectrum(AT, SUR, Z, w0, v).value
        approx = HBAR / math.pi * (Ia + eta * v * v / 2)
        errs.append(np.max(np.abs(S - approx)[:, [0, 1, 2], [0, 1, 2]] / np.abs(S)[:, [0, 1, 2], [0, 1, 2]]))
    slope = np.polyfit(np.log(vs), np.log(errs), 1)[0]
    assert abs(slope - 4.0) < 0.2


def test_correlation_at_zero_is_variance():
    c0 = correlation_from_spectrum(AT, SUR, Z, [0.0])[0].value
    var = integrate_semi_infinite(
        lambda w: np.trace(power_spectrum(AT, SUR, Z, w).value, axis1=-2, axis2=-1),
        QuadratureConfig(rel_tol=1e-10), scale=WA, breakpoints=[WA])
    assert c0.real == pytest.approx(var.value, rel=1e-7)
    assert abs(c0.imag) < 1e-6 * abs(c0)


def test_correlation_tensor_psd_at_zero():
    c = correlation_from_spectrum(ANISO, SUR, Z, [0.0], component="tensor")[0].value
    assert np.min(np.linalg.eigvalsh(0.5 * (c.real + c.real.T))) >= -1e-12 * np.max(np.abs(c))


def test_qrt_spectrum_integrates_to_dipole():
    atom = AtomModel.qrt(WA, d=(0.0, 0.0, 1e-29), gamma_a=0.05 * WA)
    w = np.linspace(-200, 200, 400001) * WA
    tot = np.trapezoid(qrt_spectrum(atom, w, atom.gamma_a)[:, 2, 2], w)
    assert tot == pytest.approx(1e-58, rel=2e-3)
    c = qrt_correlation(atom, np.array([1.0, 2.0]) / atom.gamma_a)
    ratio = abs(c[1, 2, 2]) / abs(c[0, 2, 2])
    assert ratio == pytest.approx(math.exp(-0.5), rel=1e-14)
