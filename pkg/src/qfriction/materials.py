"""Surface permittivity models and the quasi-static reflected Green tensor.

The reflected field of a dipole above a half-space, in the in-plane
wave-vector representation and at equal heights ``z`` of source and probe, is

    G(k, z, w) = (k * Delta(w) / (2 eps0)) * exp(-2 k z) * T(k_hat),

with ``T = u u^dagger``, ``u = (kx/k, ky/k, i)`` and
``Delta = (eps - 1)/(eps + 1)``.  ``T`` is Hermitian and rank one.  Its real
part is the symmetric block; the purely imaginary ``xz``/``yz`` entries form
the antisymmetric block.

Besides pointwise samples, this module provides the closed-form wave-vector
moments used throughout the force and response code and the kernels obtained
after integrating ``ky`` analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import k0e, k1e

from .constants import EPS0
from .errors import DomainError, PoleError

__all__ = [
    "SurfaceModel",
    "GreenTensorSample",
    "permittivity",
    "surface_response",
    "surface_response_imag",
    "surface_response_d2",
    "surface_response_imag_d2",
    "green_nearfield",
    "green_tensor_batch",
    "k_moment",
    "angular_moment",
    "coincidence_weights",
    "kx_kernels",
]

_KINDS = ("ohmic", "drude", "constant")


@dataclass(frozen=True)
class SurfaceModel:
    """Local dielectric response of the half-space.

    Use the constructors :meth:`ohmic`, :meth:`drude` and :meth:`constant`.

    Attributes
    ----------
    kind : {"ohmic", "drude", "constant"}
    rho : float
        Resistivity in ohm m (ohmic).
    omega_p, gamma_d : float
        Plasma frequency and damping rate in rad/s (Drude).
    eps : complex
        Frequency-independent permittivity (constant).
    """

    kind: str
    rho: float = 0.0
    omega_p: float = 0.0
    gamma_d: float = 0.0
    eps: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown surface kind {self.kind!r}")
        if self.kind == "ohmic" and not self.rho > 0.0:
            raise DomainError("ohmic surface needs rho > 0")
        if self.kind == "drude":
            if not self.omega_p > 0.0:
                raise DomainError("Drude surface needs omega_p > 0")
            if self.gamma_d < 0.0:
                raise DomainError("Drude surface needs gamma_d >= 0")
        if self.kind == "constant" and complex(self.eps).imag < 0.0:
            raise DomainError("constant permittivity must have Im eps >= 0")

    @classmethod
    def ohmic(cls, rho: float) -> "SurfaceModel":
        return cls("ohmic", rho=float(rho))

    @classmethod
    def drude(cls, omega_p: float, gamma_d: float) -> "SurfaceModel":
        return cls("drude", omega_p=float(omega_p), gamma_d=float(gamma_d))

    @classmethod
    def constant(cls, eps: complex) -> "SurfaceModel":
        return cls("constant", eps=complex(eps))

    @classmethod
    def vacuum(cls) -> "SurfaceModel":
        return cls("constant", eps=1.0 + 0.0j)

    @property
    def is_vacuum(self) -> bool:
        return self.kind == "constant" and self.eps == 1.0

    @property
    def tau(self) -> float:
        """Ohmic relaxation time ``eps0 * rho`` in seconds."""
        return EPS0 * self.rho

    def frequency_scale(self) -> float:
        """Frequency over which ``Delta`` changes appreciably (rad/s).

        ``inf`` for the frequency-independent model.
        """
        if self.kind == "ohmic":
            return 1.0 / (2.0 * self.tau)
        if self.kind == "drude":
            wsp = self.omega_p / math.sqrt(2.0)
            return min(wsp, self.gamma_d) if self.gamma_d > 0 else wsp
        return math.inf

    def feature_frequencies(self) -> tuple[float, ...]:
        """Frequencies where ``Delta`` has sharp structure (rad/s)."""
        if self.kind == "drude":
            wsp = self.omega_p / math.sqrt(2.0)
            return (0.0, wsp, -wsp)
        return (0.0,)

    def response_slope_at_zero(self) -> float:
        """Closed-form ``d Im Delta / d w`` at ``w = 0`` (s)."""
        if self.kind == "ohmic":
            return 2.0 * self.tau
        if self.kind == "drude":
            return 2.0 * self.gamma_d / self.omega_p ** 2
        return 0.0


@dataclass(frozen=True)
class GreenTensorSample:
    """Quasi-static reflected Green tensor at one ``(k, z, w)`` point.

    ``value`` maps a dipole moment (C m) to an electric field (V/m) per unit
    in-plane wave-vector area, so its units are V/(C m^3) once multiplied by
    ``d^2k``.
    """

    value: np.ndarray
    k: tuple[float, float]
    z: float
    omega: complex


def permittivity(model: SurfaceModel, omega):
    """Relative permittivity ``eps(w)``.

    Parameters
    ----------
    model : SurfaceModel
    omega : complex or array_like
        Frequency in rad/s; may be complex (e.g. ``1j*xi``).

    Raises
    ------
    DomainError
        At ``w = 0`` for the ohmic and Drude models.
    """
    w = np.asarray(omega, dtype=complex)
    if model.kind == "constant":
        out = np.asarray(_constant_eps(model, w))
        return out[()] if out.ndim == 0 else out
    if np.any(w == 0):
        raise DomainError(f"{model.kind} permittivity has a pole at omega = 0")
    if model.kind == "ohmic":
        out = 1.0 + 1j / (EPS0 * model.rho * w)
    else:
        out = 1.0 - model.omega_p ** 2 / (w * (w + 1j * model.gamma_d))
    return out[()] if out.ndim == 0 else out


def _constant_eps(model: SurfaceModel, w: np.ndarray) -> np.ndarray:
    """Frequency-independent permittivity extended with crossing symmetry.

    The loss part takes the sign of ``Re w`` so that ``eps(-w*) = eps(w)*``;
    on the imaginary axis only the real part survives.
    """
    eps = complex(model.eps)
    return np.asarray(eps.real + 1j * eps.imag * np.sign(w.real), dtype=complex)


def surface_response(model: SurfaceModel, omega):
    """Reflection response ``Delta = (eps - 1)/(eps + 1)``.

    The ohmic and Drude expressions are rewritten without the ``1/w`` pole,

        ohmic:  Delta = 1 / (1 - 2 i tau w),          tau = eps0 * rho
        Drude:  Delta = wp^2 / (wp^2 - 2 w^2 - 2 i gamma w),

    so ``w = 0`` is a regular point where ``Delta = 1``.

    Raises
    ------
    PoleError
        When ``eps(w) = -1`` (surface plasmon of a lossless Drude metal).
    """
    w = np.asarray(omega)
    cplx = np.iscomplexobj(w)
    if model.kind == "constant":
        eps = _constant_eps(model, np.asarray(w, dtype=complex))
        if np.any(eps == -1.0):
            raise PoleError("eps = -1: surface-mode pole")
        out = (eps - 1.0) / (eps + 1.0)
    elif model.kind == "ohmic":
        out = 1.0 / (1.0 - 2j * model.tau * w)
    else:
        wp2 = model.omega_p ** 2
        den = wp2 - 2.0 * w * w - 2j * model.gamma_d * w
        if np.any(np.abs(den) <= 1e-12 * wp2):
            raise PoleError("eps = -1 at the Drude surface-plasmon frequency "
                            f"omega_p/sqrt(2) = {model.omega_p / math.sqrt(2):.6g} rad/s; "
                            "use gamma_d > 0")
        out = wp2 / den
    if not cplx:
        out = np.asarray(out, dtype=complex)
    return out[()] if out.ndim == 0 else out


def surface_response_imag(model: SurfaceModel, omega):
    """``Im Delta(w)`` for real ``w``; exactly odd in ``w``."""
    w = np.asarray(omega, dtype=float)
    if model.kind == "ohmic":
        x = 2.0 * model.tau * w
        return x / (1.0 + x * x)
    if model.kind == "drude":
        wp2 = model.omega_p ** 2
        a = wp2 - 2.0 * w * w
        b = 2.0 * model.gamma_d * w
        den = a * a + b * b
        if np.any(den <= (1e-12 * wp2) ** 2):
            raise PoleError("Drude surface-plasmon pole; use gamma_d > 0")
        return wp2 * b / den
    return complex(surface_response(model, 1.0)).imag * np.sign(w)


def surface_response_d2(model: SurfaceModel, omega):
    """Second frequency derivative of ``Delta`` (complex), real or complex ``w``."""
    w = np.asarray(omega, dtype=complex)
    if model.kind == "ohmic":
        t = 2.0 * model.tau
        out = -2.0 * t * t / (1.0 - 1j * t * w) ** 3
    elif model.kind == "drude":
        wp2, g = model.omega_p ** 2, model.gamma_d
        d = wp2 - 2.0 * w * w - 2j * g * w
        d1 = -4.0 * w - 2j * g
        out = wp2 * (2.0 * d1 * d1 / d ** 3 + 4.0 / d ** 2)
    else:
        out = np.zeros_like(w)
    return out[()] if out.ndim == 0 else out


def surface_response_imag_d2(model: SurfaceModel, omega):
    """Second frequency derivative of ``Im Delta`` for real ``w``."""
    w = np.asarray(omega, dtype=float)
    if model.kind == "ohmic":
        t = 2.0 * model.tau
        x = t * w
        return t * t * (2.0 * x * (x * x - 3.0)) / (1.0 + x * x) ** 3
    if model.kind == "drude":
        # Im of second derivative of wp^2 / D with D = wp^2 - 2w^2 - 2i g w
        wp2, g = model.omega_p ** 2, model.gamma_d
        d = wp2 - 2.0 * w * w - 2j * g * w
        d1 = -4.0 * w - 2j * g
        d2 = -4.0
        val = wp2 * (2.0 * d1 * d1 / d ** 3 - d2 / d ** 2)
        return np.imag(val)
    return np.zeros_like(w)


def green_nearfield(k, z: float, omega, model: SurfaceModel) -> GreenTensorSample:
    """Quasi-static reflected Green tensor at a single in-plane wave vector.

    Parameters
    ----------
    k : (float, float)
        ``(kx, ky)`` in 1/m.
    z : float
        Height of source and probe above the surface, m.
    omega : complex
        Frequency, rad/s.

    Returns
    -------
    GreenTensorSample
        Zero tensor at ``|k| = 0``.
    """
    if not z > 0.0:
        raise DomainError(f"height must be positive, got z = {z!r}")
    kx, ky = float(k[0]), float(k[1])
    value = green_tensor_batch(np.array([kx]), np.array([ky]), z, np.array([omega]), model)[0]
    return GreenTensorSample(value, (kx, ky), z, omega)


def green_tensor_batch(kx, ky, z: float, omega, model: SurfaceModel) -> np.ndarray:
    """Vectorized :func:`green_nearfield`; returns shape ``kx.shape + (3, 3)``."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    kk = np.hypot(kx, ky)
    safe = np.where(kk > 0, kk, 1.0)
    u = np.stack([kx / safe, ky / safe, np.ones_like(kx) * 1j], axis=-1)
    T = u[..., :, None] * u.conj()[..., None, :]
    pref = kk * surface_response(model, omega) / (2.0 * EPS0) * np.exp(-2.0 * kk * z)
    out = pref[..., None, None] * T
    return np.where((kk > 0)[..., None, None], out, 0.0)


def k_moment(p: int, z: float) -> float:
    """``int_0^inf k^p exp(-2 k z) dk = p! / (2z)^(p+1)``."""
    if not z > 0.0:
        raise DomainError(f"height must be positive, got z = {z!r}")
    if p < 0 or int(p) != p:
        raise ValueError("p must be a non-negative integer")
    return math.factorial(int(p)) / (2.0 * z) ** (p + 1)


def angular_moment(a: int, b: int, half_plane: bool = False) -> float:
    """``int cos^a(t) sin^b(t) dt`` over the full circle or ``|t| < pi/2``.

    Closed form through the Beta function; zero when the integrand is odd
    over the range.
    """
    if b % 2 == 1:
        return 0.0
    if a % 2 == 1 and not half_plane:
        return 0.0
    # int over |t|<pi/2 of cos^a sin^b = B((a+1)/2, (b+1)/2)
    half = math.exp(math.lgamma((a + 1) / 2) + math.lgamma((b + 1) / 2)
                    - math.lgamma((a + b + 2) / 2))
    return half if half_plane else 2.0 * half


def coincidence_weights(z: float, power: int = 0) -> np.ndarray:
    """Diagonal of ``int d^2k/(2pi)^2 kx^power k exp(-2kz) Re T`` (1/m^(power+3)).

    ``power = 0`` gives ``diag(1, 1, 2) / (16 pi z^3)``; multiplying by
    ``Delta/(2 eps0)`` gives the coincidence limit of the reflected Green
    tensor.  The off-diagonal entries vanish by angular symmetry.
    """
    km = k_moment(power + 2, z)
    wx = angular_moment(power + 2, 0)
    wy = angular_moment(power, 2)
    wz = angular_moment(power, 0)
    return np.array([wx, wy, wz]) * km / (4.0 * math.pi ** 2)


def kx_kernels(u):
    """Scaled ``ky``-integrated kernels ``b_ii(u)`` with ``u = 2 z kx``.

    Integrating ``k exp(-2kz) Re T_ii`` over ``ky`` gives ``b_ii(u)/(2z)^2``:

        b_xx = 2 u^2 K0(|u|),  b_yy = 2 |u| K1(|u|),  b_zz = b_xx + b_yy.

    Returns
    -------
    ndarray, shape ``u.shape + (3,)``
    """
    u = np.abs(np.asarray(u, dtype=float))
    e = np.exp(-u)
    with np.errstate(invalid="ignore", divide="ignore"):
        # below 1e-150 the small-argument limits are exact in double precision
        bx = np.where(u > 1e-150, 2.0 * u * u * k0e(u) * e, 0.0)
        by = np.where(u > 1e-150, 2.0 * u * k1e(u) * e, 2.0)
    return np.stack([bx, by, bx + by], axis=-1)
