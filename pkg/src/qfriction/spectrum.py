"""Stationary dipole power spectrum of a moving atom and related tensors.

The steady-state spectrum is

    S(w; v) = (hbar/pi) int d^2k/(2pi)^2 theta(w + kx v) alpha(w; v) G_I(k, w + kx v) alpha*(w; v)

and, splitting the step function, ``S = (hbar/pi)[theta(w) alpha_I(w; v) - J(w; v)]``
with the current ``J`` supported on the Doppler window where ``theta(w)`` and
``theta(w + kx v)`` differ.  At ``v = 0`` this is the zero-temperature
fluctuation-dissipation relation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import EPS0, HBAR
from .errors import DomainError
from .kspace import doppler_green_integral, theta
from .materials import (SurfaceModel, coincidence_weights, surface_response_d2,
                        surface_response_imag, surface_response_imag_d2)
from .quadrature import (IntegralEstimate, QuadratureConfig, fourier_transform_tail,
                         integrate_finite, integrate_semi_infinite)
from .response import (AtomModel, _assemble, _channel_sum, _oscillator_channels,
                       tls_delta_shift, tls_gamma)

__all__ = [
    "SpectrumTensor",
    "CorrelationSample",
    "power_spectrum",
    "current_J",
    "alpha_imag_tensor",
    "g_tensor",
    "eta_tensor",
    "alpha_second_velocity_derivative",
    "correlation_from_spectrum",
    "fdt_residual",
    "FDTResidual",
    "qrt_spectrum",
]


@dataclass(frozen=True)
class SpectrumTensor:
    """Real symmetric spectrum, shape ``omega.shape + (3, 3)``, in (C m)^2 s."""

    value: np.ndarray
    omega: object
    v: float
    z: float


@dataclass(frozen=True)
class CorrelationSample:
    """Two-time dipole correlation ``C_ij(tau; v)`` in (C m)^2."""

    value: np.ndarray
    tau: float
    v: float
    converged: bool = True


def _channel_alphas(atom, surface, z, w, v, quad):
    """Per-channel complex polarizability for the spectrum's atom kinds."""
    if atom.kind == "oscillator":
        return _oscillator_channels(atom, surface, z, w, v, quad)
    if atom.kind == "two_level":
        s, e = atom.channels()
        gam = tls_gamma(atom, surface, z, w, v, quad)
        dsh = tls_delta_shift(atom, surface, z, w, v, quad)
        den = atom.omega_a ** 2 * (1.0 - dsh) - (w * w)[..., None] - 1j * w[..., None] * gam
        return s / den, e
    raise DomainError(f"spectrum not defined for atom kind {atom.kind!r}")


def _gated_contraction(atom, surface, z, omega, v, quad, gate, alphas=None):
    w = np.asarray(omega, dtype=float)
    ac, e = alphas if alphas is not None else _channel_alphas(atom, surface, z, w, v, quad)
    gi = doppler_green_integral(surface, z, w, v, quad, gate=gate, part="imag")
    return _assemble(np.abs(ac) ** 2 * _channel_sum(gi, e), e)


def power_spectrum(atom: AtomModel, surface: SurfaceModel, z: float, omega, v: float = 0.0,
                   quad: QuadratureConfig | None = None) -> SpectrumTensor:
    """Stationary power spectrum ``S(w; v)`` (gated wave-vector form).

    Exact for the oscillator; fourth order in the coupling for the two-level
    atom.
    """
    val = HBAR / math.pi * _gated_contraction(atom, surface, z, omega, v, quad, "positive")
    return SpectrumTensor(val, omega, v, z)


def current_J(atom: AtomModel, surface: SurfaceModel, z: float, omega, v: float = 0.0,
              quad: QuadratureConfig | None = None) -> np.ndarray:
    """Current ``J = int d^2k/(2pi)^2 [theta(w) - theta(w + kx v)] alpha G_I alpha*``."""
    return _gated_contraction(atom, surface, z, omega, v, quad, "window")


def alpha_imag_tensor(atom: AtomModel, surface: SurfaceModel, z: float, omega, v: float = 0.0,
                      quad: QuadratureConfig | None = None, *, via: str = "alpha") -> np.ndarray:
    """``alpha_I(w; v)``, either as ``Im alpha`` or as ``int alpha G_I alpha*``.

    Parameters
    ----------
    via : {"alpha", "contraction"}
        ``"alpha"`` takes the imaginary part of the polarizability;
        ``"contraction"`` evaluates the wave-vector contraction without gate.
    """
    w = np.asarray(omega, dtype=float)
    ac, e = _channel_alphas(atom, surface, z, w, v, quad)
    if via == "alpha":
        return _assemble(ac.imag, e)
    if via == "contraction":
        return _gated_contraction(atom, surface, z, w, v, quad, None, alphas=(ac, e))
    raise ValueError(f"unknown route {via!r}")


def g_tensor(surface: SurfaceModel, z: float, omega, quad: QuadratureConfig | None = None,
             *, method: str = "analytic") -> np.ndarray:
    """``g(w) = int d^2k/(2pi)^2 kx^2 d^2/dw^2 G_I(k, w)`` (diagonal 3x3).

    ``method="fd"`` differentiates ``Im Delta`` by Richardson-extrapolated
    central differences instead of the closed-form derivative.
    """
    w = np.asarray(omega, dtype=float)
    if method == "analytic":
        d2 = surface_response_imag_d2(surface, w)
    elif method == "fd":
        d2 = _second_derivative(lambda x: surface_response_imag(surface, x), w,
                                1e-2 * min(surface.frequency_scale(), 1e300))
    else:
        raise ValueError(f"unknown method {method!r}")
    diag = np.asarray(d2)[..., None] * coincidence_weights(z, power=2) / (2.0 * EPS0)
    return diag[..., :, None] * np.eye(3)


def _second_derivative(f, x, h, levels=3):
    """Richardson-extrapolated central second difference of ``f`` at ``x``."""
    f0 = f(x)
    table = [[(f(x + hh) - 2.0 * f0 + f(x - hh)) / hh ** 2 for hh in h / 2.0 ** np.arange(levels)]]
    for j in range(1, levels):
        prev = table[-1]
        fac = 4.0 ** j
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1.0) for i in range(len(prev) - 1)])
    return table[-1][0]


def _velocity_scale(atom, surface, z, w):
    """Velocity over which the response at frequency ``w`` changes."""
    fs = min(surface.frequency_scale(), atom.omega_a)
    if atom.kind == "two_level":
        # sign gate: stay far from the Doppler edge |w| = |kx v|
        fs = min(fs, abs(w) / 40.0) if w != 0 else fs
    return 2.0 * z * fs


def alpha_second_velocity_derivative(atom: AtomModel, surface: SurfaceModel, z: float,
                                     omega: float, quad: QuadratureConfig | None = None, *,
                                     method: str = "fd", step: float | None = None):
    """Per-channel ``d^2 alpha / dv^2`` at ``v = 0``.

    ``method="fd"`` uses central differences of the self-energy (or of the
    two-level rate and shift) in ``v`` with step
    ``h = max(1e-3, cbrt(eps)) * v_scale`` and Richardson extrapolation, then
    the chain rule through ``alpha = s / D``.  ``method="analytic"``
    (oscillator only) differentiates under the wave-vector integral:
    ``Sigma'' = s * sum_i e_i^2 int kx^2 Delta''(w) ...``.

    Returns
    -------
    alpha, alpha2 : ndarray, shape ``(C,)``
        Channel polarizabilities at ``v = 0`` and their second derivatives.
    """
    w = float(omega)
    s, e = atom.channels()
    wa2 = atom.omega_a ** 2
    vs = _velocity_scale(atom, surface, z, w)
    h = step if step is not None else max(1e-3, np.cbrt(np.finfo(float).eps)) * vs
    if h <= 0.0 or not np.isfinite(h) or h < 1e-300:
        raise DomainError("velocity differentiation step underflow")

    if atom.kind == "oscillator":
        def D(v):
            g = doppler_green_integral(surface, z, w, v, quad, part="full")
            return wa2 - w * w - s * _channel_sum(g, e)

        if method == "analytic":
            g2 = surface_response_d2(surface, w) * coincidence_weights(z, power=2) / (2.0 * EPS0)
            d0 = D(0.0)
            d2 = -s * _channel_sum(g2, e)
            d1 = 0.0
        elif method == "fd":
            d0, d1, d2 = _fd_even(D, h)
        else:
            raise ValueError(f"unknown method {method!r}")
    elif atom.kind == "two_level":
        if method != "fd":
            raise ValueError("two-level derivatives are available by finite differences only")
        q = quad or QuadratureConfig()
        q = q.with_tol(min(q.rel_tol, 1e-12))

        def D(v):
            gam = tls_gamma(atom, surface, z, w, v, q)
            dsh = tls_delta_shift(atom, surface, z, w, v, q)
            return wa2 * (1.0 - dsh) - w * w - 1j * w * gam

        d0, d1, d2 = _fd_even(D, h)
    else:
        raise DomainError(f"no velocity derivative for atom kind {atom.kind!r}")
    alpha = s / d0
    alpha2 = s * (2.0 * d1 * d1 / d0 ** 3 - d2 / d0 ** 2)
    return alpha, alpha2


def _fd_even(D, h, levels=2):
    """Value, first and second derivative at 0 by central differences."""
    d0 = np.asarray(D(0.0), dtype=complex)
    hs = h / 2.0 ** np.arange(levels)
    plus = [np.asarray(D(x), dtype=complex) for x in hs]
    minus = [np.asarray(D(-x), dtype=complex) for x in hs]
    sec = [(p - 2.0 * d0 + m) / x ** 2 for p, m, x in zip(plus, minus, hs)]
    fst = [(p - m) / (2.0 * x) for p, m, x in zip(plus, minus, hs)]
    for j in range(1, levels):
        fac = 4.0 ** j
        sec = [(fac * sec[i + 1] - sec[i]) / (fac - 1.0) for i in range(len(sec) - 1)]
        fst = [(fac * fst[i + 1] - fst[i]) / (fac - 1.0) for i in range(len(fst) - 1)]
    return d0, fst[0], sec[0]


def eta_tensor(atom: AtomModel, surface: SurfaceModel, z: float, omega,
               quad: QuadratureConfig | None = None, *, method: str = "fd") -> np.ndarray:
    """Second-order velocity coefficient of the spectrum.

    ``eta = alpha'' G_I alpha* + alpha g alpha* + alpha G_I alpha''*`` with
    primes denoting velocity derivatives at ``v = 0``, ``G_I`` the
    wave-vector integrated ``Im G`` and ``g`` from :func:`g_tensor`.
    Real symmetric; shape ``omega.shape + (3, 3)``.
    """
    ws = np.atleast_1d(np.asarray(omega, dtype=float))
    s, e = atom.channels()
    out = np.empty(ws.shape + (3, 3))
    for i, w in enumerate(ws):
        if w == 0.0:
            # G_I(0) = 0 and g(0) = 0 for every odd Im Delta
            out[i] = 0.0
            continue
        a, a2 = alpha_second_velocity_derivative(atom, surface, z, w, quad, method=method)
        gi = surface_response_imag(surface, w) * coincidence_weights(z) / (2.0 * EPS0)
        gg = np.diag(g_tensor(surface, z, w))
        ch = (2.0 * np.real(a2 * np.conj(a)) * _channel_sum(gi, e)
              + np.abs(a) ** 2 * _channel_sum(gg, e))
        out[i] = _assemble(ch, e)
    return out.reshape(np.shape(omega) + (3, 3))


def qrt_spectrum(atom: AtomModel, omega, gamma_a: float) -> np.ndarray:
    """Spectrum of the regression-hypothesis correlator (a Lorentzian at ``w_a``)."""
    w = np.asarray(omega, dtype=float)
    lor = gamma_a / (2.0 * math.pi) / ((w - atom.omega_a) ** 2 + 0.25 * gamma_a ** 2)
    return lor[..., None, None] * atom.dipole_dyad()


def correlation_from_spectrum(atom: AtomModel, surface: SurfaceModel, z: float, taus,
                              v: float = 0.0, quad: QuadratureConfig | None = None,
                              *, component: str = "trace"):
    """Correlation ``C(tau) = int dw exp(-i w tau) S(w; v)``.

    Uses the Filon-type oscillatory rule of :func:`quadrature.fourier_transform_tail`.

    Parameters
    ----------
    taus : array_like
        Positive times, s.
    component : {"trace", "tensor"}
        Return the trace (complex scalar) or the full tensor per sample.

    Returns
    -------
    list of CorrelationSample
    """
    quad = quad or QuadratureConfig()
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any(taus < 0):
        raise DomainError("tau must be non-negative")
    lower = 0.0
    if v != 0.0:
        lower = -quad.radial_cutoff(z) * abs(v) / (2.0 * z)

    def S(w):
        val = power_spectrum(atom, surface, z, w, v, quad).value
        return np.trace(val, axis1=-2, axis2=-1) if component == "trace" else val

    est = fourier_transform_tail(S, taus, quad, lower=lower, scale=atom.omega_a,
                                 breakpoints=[0.0, atom.omega_a])
    return [CorrelationSample(est.value[i], float(t), v, est.converged)
            for i, t in enumerate(taus)]


@dataclass(frozen=True)
class FDTResidual:
    """Residuals of the equilibrium relations on a frequency grid.

    Attributes
    ----------
    spectrum : float
        ``max |S - (hbar/pi) theta(w) alpha_I| / max |S|``.
    identity : float
        ``max |Im alpha - int alpha G_I alpha*| / max |Im alpha|``.
    integrated : float
        ``int |S - (hbar/pi) theta alpha_I| dw / int Tr S dw``.
    """

    spectrum: float
    identity: float
    integrated: float


def fdt_residual(atom: AtomModel, surface: SurfaceModel, z: float, omega_grid,
                 quad: QuadratureConfig | None = None, *, gamma_a: float | None = None) -> FDTResidual:
    """Check the zero-temperature FDT for an atom at rest.

    For oscillator atoms the spectrum is built from the gated wave-vector
    integral with numerically integrated kernels, and compared with
    ``Im alpha`` from the closed-form dressed polarizability.  For QRT atoms
    the Lorentzian spectrum is compared with ``(hbar/pi) Im alpha~``.
    """
    w = np.asarray(omega_grid, dtype=float)
    if atom.kind == "qrt":
        gam = atom.gamma_a if gamma_a is None else gamma_a
        if gam is None:
            raise DomainError("QRT residual needs gamma_a")

        def s_of(x):
            return np.trace(qrt_spectrum(atom, x, gam), axis1=-2, axis2=-1)

        def fdt_of(x):
            wa, hg = atom.omega_a, 0.5 * gam
            im = hg / ((wa - x) ** 2 + hg ** 2) - hg / ((wa + x) ** 2 + hg ** 2)
            return theta(x) * im / math.pi * atom.dipole_sq

        diff = np.abs(s_of(w) - fdt_of(w))
        spec = float(np.max(diff) / np.max(np.abs(s_of(w))))
        q = quad or QuadratureConfig(rel_tol=1e-10)
        num = (integrate_semi_infinite(lambda x: np.abs(s_of(x) - fdt_of(x)), q,
                                       scale=atom.omega_a, breakpoints=[atom.omega_a]).value
               + integrate_semi_infinite(lambda x: np.abs(s_of(-x) - fdt_of(-x)), q,
                                         scale=atom.omega_a).value)
        return FDTResidual(spec, 0.0, float(num / atom.dipole_sq))
    s, e = atom.channels()
    ac, _ = _oscillator_channels(atom, surface, z, w, 0.0, quad)
    gi = doppler_green_integral(surface, z, w, 0.0, quad, gate="positive", part="imag",
                                numeric_rest=True)
    S = HBAR / math.pi * _assemble(np.abs(ac) ** 2 * _channel_sum(gi, e), e)
    alpha_i = _assemble(ac.imag, e)
    fdt = HBAR / math.pi * theta(w)[..., None, None] * alpha_i
    scale_s = np.max(np.abs(S))
    spec = float(np.max(np.abs(S - fdt)) / scale_s) if scale_s > 0 else 0.0
    gfull = doppler_green_integral(surface, z, w, 0.0, quad, part="imag", numeric_rest=True)
    contr = _assemble(np.abs(ac) ** 2 * _channel_sum(gfull, e), e)
    scale_a = np.max(np.abs(alpha_i))
    ident = float(np.max(np.abs(alpha_i - contr)) / scale_a) if scale_a > 0 else 0.0
    return FDTResidual(spec, ident, spec)
