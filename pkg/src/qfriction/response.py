"""Dressed atomic response above a surface, at rest or in uniform motion.

An atom is represented as a set of independent oscillator channels.  A
channel ``c`` has strength ``s_c`` (rad^2/s^2 per unit polarizability) and a
unit direction ``e_c``; its bare polarizability is
``s_c / (w_a^2 - w^2)`` along ``e_c e_c``.

* a dipole ``d`` gives one channel with ``s = 2 w_a |d|^2 / hbar``;
* an isotropic atom with static polarizability ``alpha0`` gives three axis
  channels with ``s = alpha0 * w_a^2``.

The reflected Green tensor integrated over wave vectors is diagonal, so axis
channels never couple to each other and each is dressed by its own
self-energy ``Sigma_c = s_c * sum_i e_ci^2 g_ii(w; v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EPS0, HBAR
from .errors import DomainError, PoleError
from .kspace import doppler_green_integral
from .materials import SurfaceModel, coincidence_weights
from .quadrature import QuadratureConfig, principal_value

__all__ = [
    "AtomModel",
    "PolarizabilityTensor",
    "SelfEnergySample",
    "self_energy",
    "polarizability_oscillator",
    "bare_polarizability",
    "alpha_scalar",
    "alpha_imag_slope",
    "tls_gamma",
    "tls_delta_shift",
    "pv_shift",
    "tls_polarizability",
    "qrt_correlation",
    "qrt_alpha_imaginary_axis",
    "odd_slope_at_zero",
]

_ATOM_KINDS = ("oscillator", "two_level", "qrt")


@dataclass(frozen=True)
class AtomModel:
    """Atom described by a transition frequency and a dipole or ``alpha0``.

    Attributes
    ----------
    kind : {"oscillator", "two_level", "qrt"}
    omega_a : float
        Transition frequency, rad/s.
    d : tuple of float, optional
        Dipole matrix element (C m).
    alpha0 : float, optional
        Static polarizability (C m^2/V) of an isotropic atom.
    gamma_a : float, optional
        Phenomenological decay rate (rad/s) for the QRT model.
    """

    kind: str
    omega_a: float
    d: tuple | None = None
    alpha0: float | None = None
    gamma_a: float | None = None

    def __post_init__(self):
        if self.kind not in _ATOM_KINDS:
            raise DomainError(f"unknown atom kind {self.kind!r}")
        if not self.omega_a > 0.0:
            raise DomainError("omega_a must be positive")
        if (self.d is None) == (self.alpha0 is None):
            raise DomainError("give exactly one of d and alpha0")
        if self.alpha0 is not None and not self.alpha0 > 0.0:
            raise DomainError("alpha0 must be positive")
        if self.d is not None:
            d = tuple(float(x) for x in self.d)
            if len(d) != 3 or not any(d):
                raise DomainError("d must be a non-zero 3-vector")
            object.__setattr__(self, "d", d)
        if self.gamma_a is not None and self.gamma_a < 0.0:
            raise DomainError("gamma_a must be non-negative")

    @classmethod
    def oscillator(cls, omega_a, d=None, alpha0=None):
        return cls("oscillator", omega_a, d=d, alpha0=alpha0)

    @classmethod
    def two_level(cls, omega_a, d=None, alpha0=None):
        return cls("two_level", omega_a, d=d, alpha0=alpha0)

    @classmethod
    def qrt(cls, omega_a, d=None, alpha0=None, gamma_a=None):
        return cls("qrt", omega_a, d=d, alpha0=alpha0, gamma_a=gamma_a)

    @property
    def isotropic(self) -> bool:
        return self.alpha0 is not None

    @property
    def static_polarizability(self) -> float:
        """``alpha0``, or the orientation average ``2|d|^2/(3 hbar w_a)``."""
        if self.isotropic:
            return self.alpha0
        return 2.0 * self.dipole_sq / (3.0 * HBAR * self.omega_a)

    @property
    def dipole_sq(self) -> float:
        """``|d|^2``; for an isotropic atom ``3 hbar w_a alpha0 / 2``."""
        if self.isotropic:
            return 1.5 * HBAR * self.omega_a * self.alpha0
        return float(np.dot(self.d, self.d))

    def dipole_dyad(self) -> np.ndarray:
        """Orientation-resolved ``d_i d_j``; ``|d|^2 I / 3`` when isotropic."""
        if self.isotropic:
            return self.dipole_sq / 3.0 * np.eye(3)
        d = np.asarray(self.d)
        return np.outer(d, d)

    def channels(self):
        """Return ``(strengths, directions)`` with shapes ``(C,)`` and ``(C, 3)``."""
        if self.isotropic:
            return np.full(3, self.alpha0 * self.omega_a ** 2), np.eye(3)
        d = np.asarray(self.d)
        nd = np.linalg.norm(d)
        s = 2.0 * self.omega_a * nd ** 2 / HBAR
        return np.array([s]), (d / nd)[None, :]

    def scaled(self, factor: float) -> "AtomModel":
        """Same atom with ``|d|^2`` (equivalently ``alpha0``) times ``factor``."""
        if self.isotropic:
            return AtomModel(self.kind, self.omega_a, alpha0=self.alpha0 * factor,
                             gamma_a=self.gamma_a)
        d = tuple(math.sqrt(factor) * x for x in self.d)
        return AtomModel(self.kind, self.omega_a, d=d, gamma_a=self.gamma_a)


@dataclass(frozen=True)
class PolarizabilityTensor:
    """Complex symmetric polarizability ``alpha_ij`` in C m^2/V.

    ``value`` has shape ``omega.shape + (3, 3)``.
    """

    value: np.ndarray
    omega: object
    v: float
    z: float


@dataclass(frozen=True)
class SelfEnergySample:
    """Per-channel self-energy ``Sigma_c(w; v)`` in rad^2/s^2.

    ``value`` has shape ``omega.shape + (C,)``; ``value[..., 0]`` is the
    single-dipole result.
    """

    value: np.ndarray
    omega: object
    v: float
    z: float
    channels: int = field(default=1)


def _check_height(z):
    if not z > 0.0:
        raise DomainError(f"height must be positive, got z = {z!r}")


def _channel_sum(green_diag, directions):
    """``sum_i e_ci^2 g_ii`` for every channel; shapes ``(..., 3)`` -> ``(..., C)``."""
    return np.einsum("...i,ci->...c", green_diag, directions ** 2)


def _assemble(alpha_c, directions):
    """Tensor ``sum_c alpha_c e_c e_c`` from per-channel values."""
    dyads = directions[:, :, None] * directions[:, None, :]
    return np.einsum("...c,cij->...ij", alpha_c, dyads)


def self_energy(atom: AtomModel, surface: SurfaceModel, z: float, omega, v: float = 0.0,
                quad: QuadratureConfig | None = None) -> SelfEnergySample:
    """Self-energy of each oscillator channel.

    ``Sigma_c(w; v) = s_c * sum_i e_ci^2 int d^2k/(2pi)^2 G_ii(k, z, w + kx v)``.
    At ``v = 0`` this is the closed form
    ``s_c * Delta(w) * (ex^2 + ey^2 + 2 ez^2) / (32 pi eps0 z^3)``.
    """
    _check_height(z)
    s, e = atom.channels()
    g = doppler_green_integral(surface, z, omega, v, quad, part="full")
    return SelfEnergySample(s * _channel_sum(g, e), omega, v, z, len(s))


def _denominator_check(den, what="dressed resonance"):
    if np.any(den == 0):
        raise PoleError(f"evaluation exactly at the {what} with zero damping")


def bare_polarizability(atom: AtomModel, omega) -> np.ndarray:
    """Free-space Lorentzian ``sum_c s_c e_c e_c / (w_a^2 - w^2)``."""
    s, e = atom.channels()
    w = np.asarray(omega, dtype=complex)
    den = atom.omega_a ** 2 - w * w
    _denominator_check(den, "bare resonance")
    ac = s / den[..., None]
    return _assemble(ac, e)


def _oscillator_channels(atom, surface, z, omega, v, quad):
    s, e = atom.channels()
    sig = s * _channel_sum(doppler_green_integral(surface, z, omega, v, quad, part="full"), e)
    w = np.asarray(omega, dtype=complex)
    den = atom.omega_a ** 2 - (w * w)[..., None] - sig
    _denominator_check(den)
    return s / den, e


def polarizability_oscillator(atom: AtomModel, surface: SurfaceModel, z: float, omega,
                              v: float = 0.0,
                              quad: QuadratureConfig | None = None) -> PolarizabilityTensor:
    """Dressed polarizability of the moving oscillator.

    ``alpha(w; v) = sum_c s_c e_c e_c / (w_a^2 - w^2 - Sigma_c(w; v))``.

    ``omega`` may be complex (e.g. ``1j*xi``) at ``v = 0``.
    """
    _check_height(z)
    w = np.asarray(omega)
    if np.iscomplexobj(w) and v == 0.0:
        ac, e = _imag_axis_channels(atom, surface, z, w)
    else:
        ac, e = _oscillator_channels(atom, surface, z, np.real(w), v, quad)
    return PolarizabilityTensor(_assemble(ac, e), omega, v, z)


def _imag_axis_channels(atom, surface, z, w):
    """Channel polarizabilities at complex frequency, atom at rest."""
    from .materials import surface_response
    s, e = atom.channels()
    g = surface_response(surface, w)[..., None] * coincidence_weights(z) / (2.0 * EPS0)
    sig = s * _channel_sum(g, e)
    den = atom.omega_a ** 2 - (w * w)[..., None] - sig
    _denominator_check(den)
    return s / den, e


def _require_isotropic(atom):
    if not atom.isotropic:
        raise DomainError("a scalar polarizability needs an isotropic atom (alpha0)")


def alpha_scalar(atom: AtomModel, surface: SurfaceModel, z: float, omega, v: float = 0.0,
                 quad: QuadratureConfig | None = None, *, convention: str = "trace",
                 order: str = "lowest"):
    """Scalar polarizability of an isotropic atom near the surface.

    The real part is the mean of the diagonal of ``Re alpha``.  The imaginary
    part is ``int d^2k/(2pi)^2 alpha G_I alpha^dagger`` reduced to a scalar by
    the full trace (``convention="trace"``) or a third of it (``"third"``).

    Parameters
    ----------
    order : {"lowest", "dressed"}
        ``"lowest"`` inserts the free Lorentzian (lowest non-vanishing order in
        the coupling); ``"dressed"`` inserts the dressed polarizability.
    """
    _require_isotropic(atom)
    if convention not in ("trace", "third"):
        raise ValueError(f"unknown convention {convention!r}")
    w = np.asarray(omega, dtype=float)
    s, e = atom.channels()
    if order == "lowest":
        den = atom.omega_a ** 2 - w * w
        _denominator_check(den, "bare resonance")
        ac = (s / den[..., None]).astype(complex)
    elif order == "dressed":
        ac, _ = _oscillator_channels(atom, surface, z, w, v, quad)
    else:
        raise ValueError(f"unknown order {order!r}")
    gi = doppler_green_integral(surface, z, w, v, quad, part="imag")
    imag = np.sum(np.abs(ac) ** 2 * _channel_sum(gi, e), axis=-1)
    if convention == "third":
        imag = imag / 3.0
    real = np.mean(ac.real, axis=-1)
    out = real + 1j * imag
    return out[()] if np.ndim(out) == 0 else out


def odd_slope_at_zero(f, h: float, levels: int = 3) -> float:
    """Derivative at 0 of an odd function by Richardson-extrapolated ``f(h)/h``.

    Central differences of an odd function reduce to ``(f(h) - f(-h))/(2h)``;
    both sides are evaluated so that small departures from oddness average
    out.  Errors of order ``h^2, h^4, ...`` are eliminated successively.
    """
    hs = h / 2.0 ** np.arange(levels)
    table = [[(f(x) - f(-x)) / (2.0 * x) for x in hs]]
    for j in range(1, levels):
        prev = table[-1]
        fac = 4.0 ** j
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1.0) for i in range(len(prev) - 1)])
    return float(np.real(table[-1][0]))


def alpha_imag_slope(atom: AtomModel, surface: SurfaceModel, z: float,
                     quad: QuadratureConfig | None = None, *, convention: str = "trace",
                     order: str = "lowest", method: str = "fd") -> float:
    """``d Im alpha_scalar / d w`` at ``w = 0`` (C m^2 s / V).

    ``method="fd"`` differentiates the quadrature values numerically;
    ``method="closed"`` uses ``alpha0^2 * Delta_I'(0) * c / (8 pi eps0 z^3)``
    with ``c = 1`` (trace) or ``1/3``, valid for ``order="lowest"``.
    """
    _require_isotropic(atom)
    if method == "closed":
        if order != "lowest":
            raise ValueError("closed form is available only at lowest order")
        c = 1.0 if convention == "trace" else 1.0 / 3.0
        return atom.alpha0 ** 2 * surface.response_slope_at_zero() * c / (8.0 * math.pi * EPS0 * z ** 3)
    h = 1e-3 * min(surface.frequency_scale(), atom.omega_a)
    return odd_slope_at_zero(
        lambda w: float(np.imag(alpha_scalar(atom, surface, z, w, 0.0, quad,
                                             convention=convention, order=order))), h)


# Two-level atom (fourth order in the dipole coupling) ----------------------

def tls_gamma(atom: AtomModel, surface: SurfaceModel, z: float, omega, v: float = 0.0,
              quad: QuadratureConfig | None = None) -> np.ndarray:
    """Velocity-dependent decay rate of each channel (rad/s).

    ``gamma_c(w; v) = (2/hbar) |d_c|^2 sum_i e_ci^2
    int d^2k/(2pi)^2 sign(w + kx v) Im G_ii(k, w + kx v)``.

    Returns an array of shape ``omega.shape + (C,)``.
    """
    _check_height(z)
    s, e = atom.channels()
    g = doppler_green_integral(surface, z, omega, v, quad, gate="sign", part="imag")
    # (2/hbar)|d|^2 = s / w_a
    return (s / atom.omega_a) * _channel_sum(g, e)


def pv_shift(gamma_fn, omega: float, omega_a: float, quad: QuadratureConfig | None = None,
             *, scale: float | None = None, breakpoints=()):
    """Frequency shift ``2 P int_0^inf dw'/pi (w^2/w_a^2) gamma(w') / (w^2 - w'^2)``.

    Parameters
    ----------
    gamma_fn : callable
        Vectorized ``gamma(w')`` for ``w' >= 0``; may return trailing axes.
    omega : float
        Evaluation frequency; the result is even in it and zero at 0.
    """
    quad = quad or QuadratureConfig()
    w = abs(float(omega))
    if w == 0.0:
        probe = np.asarray(gamma_fn(np.array([1.0])))
        return np.zeros(probe.shape[1:]) if probe.ndim > 1 else 0.0
    pref = 2.0 * w * w / (math.pi * omega_a ** 2)

    def integrand(x):
        g = np.asarray(gamma_fn(x))
        den = (w * w - x * x).reshape((-1,) + (1,) * (g.ndim - 1))
        return pref * g / den

    est = principal_value(integrand, w, quad, lower=0.0, scale=scale or w,
                          breakpoints=breakpoints)
    return est.value


def tls_delta_shift(atom: AtomModel, surface: SurfaceModel, z: float, omega, v: float = 0.0,
                    quad: QuadratureConfig | None = None) -> np.ndarray:
    """Dimensionless frequency shift of each two-level channel.

    Returns an array of shape ``omega.shape + (C,)``.
    """
    _check_height(z)
    quad = quad or QuadratureConfig()
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    bps = [abs(v) / (2.0 * z)] if v else []
    fs = surface.frequency_scale()
    if math.isfinite(fs):
        bps.append(fs)
    bps.append(atom.omega_a)
    out = np.array([np.atleast_1d(pv_shift(
        lambda x: tls_gamma(atom, surface, z, x, v, quad), wi, atom.omega_a, quad,
        breakpoints=bps)) for wi in w])
    return out.reshape(np.shape(omega) + (out.shape[-1],))


def tls_polarizability(atom: AtomModel, surface: SurfaceModel, z: float, omega,
                       v: float = 0.0, quad: QuadratureConfig | None = None,
                       *, shift=None, gamma=None) -> PolarizabilityTensor:
    """Two-level polarizability at fourth order in the dipole coupling.

    ``alpha(w; v) = sum_c s_c e_c e_c / (w_a^2 (1 - Delta_c) - w^2 - i w gamma_c)``.

    ``shift`` and ``gamma`` may be supplied precomputed (per channel).
    """
    w = np.asarray(omega, dtype=float)
    s, e = atom.channels()
    gam = tls_gamma(atom, surface, z, w, v, quad) if gamma is None else np.asarray(gamma)
    dsh = tls_delta_shift(atom, surface, z, w, v, quad) if shift is None else np.asarray(shift)
    den = atom.omega_a ** 2 * (1.0 - dsh) - (w * w)[..., None] - 1j * w[..., None] * gam
    _denominator_check(den)
    return PolarizabilityTensor(_assemble(s / den, e), omega, v, z)


# Phenomenological (QRT) model ------------------------------------------------

def resolve_gamma_a(atom: AtomModel, surface: SurfaceModel | None = None, z: float | None = None,
                    quad: QuadratureConfig | None = None) -> float:
    """``gamma_a`` if given, else the orientation-averaged ``tls_gamma(w_a; 0)``."""
    if atom.gamma_a is not None:
        return atom.gamma_a
    if surface is None or z is None:
        raise DomainError("gamma_a missing and no surface/height to derive it from")
    g = tls_gamma(atom, surface, z, atom.omega_a, 0.0, quad)
    return float(np.mean(g))


def qrt_correlation(atom: AtomModel, tau, gamma_a: float | None = None) -> np.ndarray:
    """Regression-hypothesis dipole correlation ``d_i d_j exp(-i (w_a - i gamma_a/2) tau)``.

    Returns shape ``tau.shape + (3, 3)`` in (C m)^2.
    """
    gam = atom.gamma_a if gamma_a is None else gamma_a
    if gam is None:
        raise DomainError("QRT correlation needs gamma_a")
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise DomainError("tau must be non-negative")
    phase = np.exp(-1j * (atom.omega_a - 0.5j * gam) * t)
    return phase[..., None, None] * atom.dipole_dyad()


def qrt_alpha_imaginary_axis(atom: AtomModel, xi, gamma_a: float) -> np.ndarray:
    """Symmetrized regression-hypothesis response on the imaginary axis.

    ``[a(i xi) + a(-i xi)]/2`` with
    ``a_ij(i xi) = (d_i d_j / hbar) [1/(w_a - i xi - i g/2) + 1/(w_a + i xi + i g/2)]``,
    which is real:
    ``(d_i d_j / hbar) [w_a/(w_a^2 + (xi + g/2)^2) + w_a/(w_a^2 + (xi - g/2)^2)]``.
    """
    x = np.asarray(xi, dtype=float)
    wa, hg = atom.omega_a, 0.5 * gamma_a
    f = wa / (wa ** 2 + (x + hg) ** 2) + wa / (wa ** 2 + (x - hg) ** 2)
    return (f / HBAR)[..., None, None] * atom.dipole_dyad()
