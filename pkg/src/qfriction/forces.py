"""Casimir-Polder and quantum-friction forces on an atom above a surface."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EPS0, HBAR
from .errors import ConvergenceError, DomainError
from .kspace import doppler_green_integral
from .materials import (SurfaceModel, angular_moment, coincidence_weights, k_moment,
                        kx_kernels, surface_response, surface_response_imag)
from .quadrature import (QuadratureConfig, graded_rule, integrate_polar_2d,
                         integrate_semi_infinite)
from .response import (AtomModel, _channel_sum, _imag_axis_channels, alpha_imag_slope,
                       odd_slope_at_zero, qrt_alpha_imaginary_axis, resolve_gamma_a)
from .spectrum import _channel_alphas, eta_tensor

__all__ = [
    "ForceResult",
    "FitResult",
    "casimir_polder_fdt",
    "casimir_polder_qrt",
    "friction_full",
    "friction_lowv",
    "friction_nearfield_ohmic",
    "friction_qrt",
    "friction_exponent_fit",
    "tls_I1",
    "tls_I2",
]

METHODS = ("full_integral", "low_v_asymptotic", "nearfield_closed_form", "qrt", "fdt", "qrt_cp")


@dataclass(frozen=True)
class ForceResult:
    """Force along one axis with an error estimate.

    Attributes
    ----------
    value : float
        Force in N (x component for friction, z component for Casimir-Polder).
    abs_error_estimate : float
    n_evaluations : int
    method : str
    z, v : float
        Height (m) and velocity (m/s).
    converged : bool
    flags : tuple of str
        Notes such as ``"parity"`` (exact zero by symmetry) or
        ``"higher-order in v required"``.
    info : dict
        Method-specific diagnostics.
    """

    value: float
    abs_error_estimate: float
    n_evaluations: int
    method: str
    z: float
    v: float = 0.0
    atom: AtomModel | None = None
    surface: SurfaceModel | None = None
    converged: bool = True
    flags: tuple = ()
    info: dict = field(default_factory=dict)


def _check(z):
    if not z > 0.0:
        raise DomainError(f"height must be positive, got z = {z!r}")


def _cp_weights(z):
    """Diagonal of ``d/dz1 int d^2k/(2pi)^2 G(k, z1, z2)`` per unit ``Delta``, at z1 = z2 = z."""
    ang = np.array([angular_moment(2, 0), angular_moment(0, 2), angular_moment(0, 0)])
    return -ang * k_moment(3, z) / (4.0 * math.pi ** 2 * 2.0 * EPS0)


def _cp_integral(alpha_of_xi, surface, z, quad, scale, method, atom):
    wd = _cp_weights(z)

    def f(xi):
        a = alpha_of_xi(xi)  # (m, 3) diagonal
        d = np.real(surface_response(surface, 1j * xi))
        return np.sum(a * wd, axis=-1) * d

    bps = []
    fs = surface.frequency_scale()
    if math.isfinite(fs):
        bps.append(fs)
    est = integrate_semi_infinite(f, quad, scale=scale, breakpoints=bps)
    val = HBAR / math.pi * est.value
    return ForceResult(float(val), HBAR / math.pi * est.error, est.evaluations, method, z,
                       0.0, atom, surface, est.converged, info={"substitution": est.substitution})


def casimir_polder_fdt(atom: AtomModel, surface: SurfaceModel, z: float,
                       quad: QuadratureConfig | None = None, *, order: str = "dressed") -> ForceResult:
    """Equilibrium Casimir-Polder force ``(hbar/pi) int dxi Tr[alpha(i xi) d_z G(z, i xi)]``.

    Parameters
    ----------
    order : {"dressed", "bare"}
        Insert the dressed polarizability (non-perturbative) or the free
        Lorentzian (second order in the coupling).
    """
    _check(z)
    quad = quad or QuadratureConfig()
    if surface.is_vacuum:
        return ForceResult(0.0, 0.0, 0, "fdt", z, 0.0, atom, surface, True, ("vacuum",))
    s, e = atom.channels()

    if order == "dressed":
        if atom.kind != "oscillator":
            raise DomainError("dressed imaginary-axis response needs an oscillator atom")

        def alpha_of_xi(xi):
            ac, _ = _imag_axis_channels(atom, surface, z, 1j * xi)
            if np.any(ac.real <= 0):
                raise DomainError("dressed oscillator is unstable (negative restoring force)")
            return np.einsum("mc,ci->mi", ac.real, e ** 2)
    elif order == "bare":
        def alpha_of_xi(xi):
            return np.einsum("mc,ci->mi", s / (atom.omega_a ** 2 + xi[:, None] ** 2), e ** 2)
    else:
        raise ValueError(f"unknown order {order!r}")
    return _cp_integral(alpha_of_xi, surface, z, quad, atom.omega_a, "fdt", atom)


def casimir_polder_qrt(atom: AtomModel, surface: SurfaceModel, z: float,
                       quad: QuadratureConfig | None = None, *,
                       gamma_a: float | None = None) -> ForceResult:
    """Casimir-Polder force with the symmetrized regression-hypothesis response."""
    _check(z)
    quad = quad or QuadratureConfig()
    gam = gamma_a if gamma_a is not None else resolve_gamma_a(atom, surface, z, quad)
    if surface.is_vacuum:
        return ForceResult(0.0, 0.0, 0, "qrt_cp", z, 0.0, atom, surface, True, ("vacuum",))

    def alpha_of_xi(xi):
        a = qrt_alpha_imaginary_axis(atom, xi, gam)
        return np.diagonal(a, axis1=-2, axis2=-1)

    res = _cp_integral(alpha_of_xi, surface, z, quad, atom.omega_a, "qrt_cp", atom)
    res.info["gamma_a"] = gam
    return res


# Full stationary friction integral ------------------------------------------

def _friction_kernel_T(w, wv, surface, umax, n, levels):
    """``T_i(w) = int_{u wv >= w} du u b_i(u) Im Delta(u wv - w)`` for every ``w``.

    Shape ``(m, 3)``.
    """
    u0 = w / wv
    end = umax if wv > 0 else -umax
    feats = np.array([f for f in surface.feature_frequencies() if f > 0.0])
    cols = [np.clip(u0, -umax, umax), np.zeros_like(w), np.full_like(w, end)]
    for f in feats:
        cols.append(np.clip(u0 + f / wv, -umax, umax))
    bps = np.sort(np.stack(cols, axis=1), axis=1)
    a, b = bps[:, :-1], bps[:, 1:]
    t, tw = graded_rule(n, levels)
    u = a[..., None] + (b - a)[..., None] * t
    wts = (b - a)[..., None] * tw
    lab = (u - u0[:, None, None]) * wv
    # only the part of [a, b] on the allowed side of u0 contributes
    mask = lab > 0
    vals = np.where(mask, u * surface_response_imag(surface, np.where(mask, lab, 0.0)), 0.0)
    return np.einsum("mpq,mpqc->mc", wts * vals, kx_kernels(u))


def _friction_full_once(atom, surface, z, v, quad, n):
    wv = v / (2.0 * z)
    umax = quad.radial_cutoff(z)
    W = umax * abs(wv)
    pts = {-W, 0.0, W}
    for f in (atom.omega_a,) + tuple(surface.feature_frequencies()):
        if 0.0 < abs(f) < W:
            pts.add(f)
    edges = np.array(sorted(pts))
    t, tw = graded_rule(n, quad.grading_levels)
    a, b = edges[:-1], edges[1:]
    w = (a[:, None] + (b - a)[:, None] * t).ravel()
    ww = ((b - a)[:, None] * tw).ravel()
    ac, e = _channel_alphas(atom, surface, z, w, v, quad)
    gi = doppler_green_integral(surface, z, w, v, quad, gate="positive", part="imag", order=n)
    # diagonal of S(w; v) for the channel representation
    s_c = HBAR / math.pi * np.abs(ac) ** 2 * _channel_sum(gi, e)
    s_diag = np.einsum("mc,ci->mi", s_c, e ** 2)
    T = _friction_kernel_T(w, wv, surface, umax, n, quad.grading_levels)
    integral = np.sum(ww[:, None] * s_diag * T)
    return -integral / (4.0 * math.pi ** 2 * EPS0 * (2.0 * z) ** 4), w.size


def friction_full(atom: AtomModel, surface: SurfaceModel, z: float, v: float,
                  quad: QuadratureConfig | None = None, *, strict: bool = False) -> ForceResult:
    """Stationary friction ``-2 int d^2k/(2pi)^2 kx int_0^inf dw Tr[S(kx v - w; v) G_I(k, w)]``.

    The ``ky`` integral is done in closed form.  With ``u = 2 z kx`` and the
    atom-frame frequency ``w' = kx v - w`` as outer variable, the force
    becomes a single outer integral over ``w'`` of the spectrum times a
    kernel ``T(w')``, each an inner one-dimensional integral.  The error
    estimate compares two Gauss-Legendre orders on identical panels.

    Raises
    ------
    ConvergenceError
        Only when ``strict`` and the estimate misses the tolerance.
    """
    _check(z)
    quad = quad or QuadratureConfig()
    if v == 0.0:
        return ForceResult(0.0, 0.0, 0, "full_integral", z, v, atom, surface, True, ("parity",))
    if surface.is_vacuum:
        return ForceResult(0.0, 0.0, 0, "full_integral", z, v, atom, surface, True, ("vacuum",))
    hi, nev1 = _friction_full_once(atom, surface, z, v, quad, quad.panel_nodes)
    lo, nev2 = _friction_full_once(atom, surface, z, v, quad, quad.panel_nodes - 4)
    err = abs(hi - lo)
    ok = err <= max(quad.abs_tol, quad.rel_tol * abs(hi))
    if strict and not ok:
        raise ConvergenceError("friction_full: outer/inner panel orders disagree", hi, err)
    return ForceResult(float(hi), float(err), nev1 + nev2, "full_integral", z, v, atom, surface,
                       ok, info={"shell": "outer w' x inner kx (graded Gauss-Legendre)"})


# Low-velocity asymptotics -----------------------------------------------------

def _response_slope(surface):
    """``Im Delta'(0)``: closed form, checked against a symmetric difference."""
    return surface.response_slope_at_zero()


def _alpha_imag_slope_tensor(atom, surface, z, quad, order):
    """Diagonal of ``d alpha_I / dw`` at 0 (per axis), C m^2 s / V."""
    s, e = atom.channels()
    if order == "lowest":
        a0 = s / atom.omega_a ** 2
        gi1 = _response_slope(surface) * coincidence_weights(z) / (2.0 * EPS0)
        ch = a0 ** 2 * _channel_sum(gi1, e)
    elif order == "dressed":
        fs = min(surface.frequency_scale(), atom.omega_a)

        def im_alpha(w):
            ac, _ = _channel_alphas(atom, surface, z, np.array([w]), 0.0, quad)
            return ac[0].imag

        ch = np.array([odd_slope_at_zero(lambda w, i=i: im_alpha(w)[i], 1e-3 * fs)
                       for i in range(s.size)])
    else:
        raise ValueError(f"unknown order {order!r}")
    return np.einsum("c,ci->i", ch, e ** 2)


def friction_lowv(atom: AtomModel, surface: SurfaceModel, z: float, v: float,
                  quad: QuadratureConfig | None = None, *, convention: str = "trace",
                  order: str = "lowest", slope_method: str = "fd") -> ForceResult:
    """Cubic low-velocity friction from the first frequency derivatives at 0.

    Two evaluations are made and compared:

    * the wave-vector integral
      ``-(2 hbar v^3 / (3 (2pi)^3)) int dky int_0^inf dkx kx^4 Tr[alpha_I'(0) G_I'(k, 0)]``
      by 2-D polar quadrature over the half plane ``kx > 0``;
    * its closed form ``-(45 hbar v^3 / (256 pi^2 eps0 z^7)) alpha_I' Delta_I'(0)``
      (scalar conventions) or the equivalent angular-moment sum (tensor).

    Parameters
    ----------
    convention : {"trace", "third", "tensor"}
        How ``alpha_I'`` is formed.  The scalar conventions need an isotropic
        atom; ``"tensor"`` contracts the per-axis derivative of the
        polarizability tensor.
    order : {"lowest", "dressed"}
        Lowest-order (bare Lorentzian) or dressed polarizability.
    """
    _check(z)
    quad = quad or QuadratureConfig()
    d1 = _response_slope(surface)
    flags = ()
    if v == 0.0:
        return ForceResult(0.0, 0.0, 0, "low_v_asymptotic", z, v, atom, surface, True, ("parity",))
    if d1 == 0.0:
        return ForceResult(0.0, 0.0, 0, "low_v_asymptotic", z, v, atom, surface, True,
                           ("higher-order in v required",))
    if convention in ("trace", "third"):
        a1 = alpha_imag_slope(atom, surface, z, quad, convention=convention, order=order,
                              method="fd" if slope_method == "fd" else "closed")
        diag = np.full(3, a1)
    elif convention == "tensor":
        diag = _alpha_imag_slope_tensor(atom, surface, z, quad, order)
        a1 = None
    else:
        raise ValueError(f"unknown convention {convention!r}")

    gpref = d1 / (2.0 * EPS0)

    def f(k, th):
        c, s = np.cos(th), np.sin(th)
        kx = k * c
        ret = np.stack([c * c, s * s, np.ones_like(c)], axis=-1)
        tr = np.sum(diag * ret, axis=-1)
        return kx ** 4 * tr * gpref * k * np.exp(-2.0 * k * z)

    est = integrate_polar_2d(f, quad.with_tol(min(quad.rel_tol, 1e-10)), k_scale=1.0 / (2.0 * z),
                             theta_range=(-0.5 * math.pi, 0.5 * math.pi))
    pref = -2.0 * HBAR * v ** 3 / (3.0 * (2.0 * math.pi) ** 3)
    line1 = pref * (2.0 * math.pi) ** 2 * est.value
    if a1 is not None:
        line2 = -45.0 * HBAR * v ** 3 / (256.0 * math.pi ** 2 * EPS0 * z ** 7) * a1 * d1
    else:
        ang = np.array([angular_moment(6, 0, True), angular_moment(4, 2, True),
                        angular_moment(4, 0, True)])
        line2 = pref * float(np.dot(diag, ang)) * k_moment(6, z) * gpref
    err = abs(line1 - line2)
    info = {"line1": float(line1), "line2": float(line2), "alpha_I_slope": diag.tolist(),
            "delta_I_slope": d1, "convention": convention, "order": order}
    return ForceResult(float(line2), err, est.evaluations, "low_v_asymptotic", z, v, atom,
                       surface, est.converged and err <= 1e-6 * abs(line2), flags, info)


def friction_nearfield_ohmic(alpha0: float, rho: float, z: float, v: float) -> ForceResult:
    """Closed form ``-(90/pi^3) hbar rho^2 alpha0^2 v^3 / (2z)^10``.

    The cubic law is odd in ``v``.
    """
    for name, val in (("alpha0", alpha0), ("rho", rho), ("z", z)):
        if not val > 0.0:
            raise DomainError(f"{name} must be positive")
    val = -(90.0 / math.pi ** 3) * HBAR * rho ** 2 * alpha0 ** 2 * v ** 3 / (2.0 * z) ** 10
    return ForceResult(val, 0.0, 0, "nearfield_closed_form", z, v,
                       info={"alpha0": alpha0, "rho": rho})


def friction_qrt(atom: AtomModel, surface: SurfaceModel, z: float, v: float,
                 quad: QuadratureConfig | None = None, *, gamma_a: float | None = None) -> ForceResult:
    """Friction predicted by the regression hypothesis (linear in ``v``).

    ``F = -v (2 |d|^2 gamma_a / (3 pi)) int d^2k/(2pi)^2 kx^2
    int_0^inf dw (w + w_a) / ((w + w_a)^2 + gamma_a^2/4)^2 Tr G_I(k, w)``,
    with the wave-vector integral in closed form,
    ``int d^2k/(2pi)^2 kx^2 Tr G_I = 3 Im Delta(w) / (16 pi eps0 z^5)``.
    ``|d|^2`` enters through the orientation average.
    """
    _check(z)
    quad = quad or QuadratureConfig()
    gam = gamma_a if gamma_a is not None else resolve_gamma_a(atom, surface, z, quad)
    if gam == 0.0 or v == 0.0 or surface.is_vacuum:
        return ForceResult(0.0, 0.0, 0, "qrt", z, v, atom, surface, True, ("zero prefactor",),
                           {"gamma_a": gam})
    wa = atom.omega_a
    ktr = float(np.sum(coincidence_weights(z, power=2))) / (2.0 * EPS0)

    def f(w):
        x = w + wa
        return x / (x * x + 0.25 * gam * gam) ** 2 * surface_response_imag(surface, w) * ktr

    bps = []
    fs = surface.frequency_scale()
    if math.isfinite(fs):
        bps.append(fs)
    est = integrate_semi_infinite(f, quad, scale=wa, breakpoints=bps)
    pref = -v * 2.0 * atom.dipole_sq * gam / (3.0 * math.pi)
    return ForceResult(float(pref * est.value), abs(pref) * est.error, est.evaluations, "qrt",
                       z, v, atom, surface, est.converged, info={"gamma_a": gam})


# Scaling analysis ---------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Power-law fit of ``|F|`` against ``v``.

    Attributes
    ----------
    exponent, exponent_stderr : float
        Least-squares slope of ``log|F|`` against ``log v``.
    linear_coefficient, linear_stderr : float
        Coefficient of ``v`` in ``F = a v + b v^n + c v^(n+2)``.
    linear_fraction : float
        ``max |a v| / max |F|`` over the grid.
    """

    exponent: float
    exponent_stderr: float
    linear_coefficient: float
    linear_stderr: float
    linear_fraction: float

    @property
    def linear_consistent_with_zero(self) -> bool:
        return abs(self.linear_coefficient) <= 3.0 * self.linear_stderr or self.linear_fraction < 1e-6


def friction_exponent_fit(results, forces=None) -> FitResult:
    """Fit the velocity exponent of a friction sweep.

    Parameters
    ----------
    results : sequence of ForceResult, or array of velocities
        With ``forces`` given, ``results`` is read as the velocity grid.
    forces : array_like, optional
    """
    if forces is None:
        methods = {r.method for r in results}
        if len(methods) > 1:
            raise DomainError("all results must share one method")
        v = np.array([r.v for r in results], dtype=float)
        F = np.array([r.value for r in results], dtype=float)
    else:
        v = np.asarray(results, dtype=float)
        F = np.asarray(forces, dtype=float)
    if v.size < 5 or np.any(v <= 0) or np.any(F == 0):
        raise DomainError("need at least 5 points with v > 0 and F != 0")
    if v.max() / v.min() < 10.0 * (1 - 1e-12):
        raise DomainError("velocity grid must span at least one decade")
    x, y = np.log(v), np.log(np.abs(F))
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(v.size - 2, 1)
    resid = y - A @ coef
    cov = np.linalg.inv(A.T @ A) * float(resid @ resid) / dof
    slope, slope_err = float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))
    n = max(int(round(slope)), 1)
    vs = v / v.max()
    basis = [vs] + ([vs ** n, vs ** (n + 2)] if n > 1 else [vs ** 3])
    B = np.stack(basis, axis=1)
    c2, *_ = np.linalg.lstsq(B, F, rcond=None)
    r2 = F - B @ c2
    dof2 = max(v.size - B.shape[1], 1)
    cov2 = np.linalg.pinv(B.T @ B) * float(r2 @ r2) / dof2
    lin = float(c2[0]) / v.max()
    lin_err = float(math.sqrt(max(cov2[0, 0], 0.0))) / v.max()
    frac = float(np.max(np.abs(lin * v)) / np.max(np.abs(F))) if n > 1 else 1.0
    return FitResult(slope, slope_err, lin, lin_err, frac)


# Two-level expansion integrals --------------------------------------------------

def _green_imag_at(k, z, w, surface):
    """Symmetric part of ``Im G(k, w)`` as a diagonal-plus-xy 3x3 array, shape (m, 3, 3)."""
    kx, ky = k
    kk = math.hypot(kx, ky)
    re_t = np.array([[kx * kx, kx * ky, 0.0], [kx * ky, ky * ky, 0.0], [0.0, 0.0, kk * kk]]) / kk ** 2
    pref = kk * math.exp(-2.0 * kk * z) / (2.0 * EPS0)
    return pref * surface_response_imag(surface, w)[:, None, None] * re_t


def _tls_alpha_tilde(atom, surface, z, w, quad):
    ac, e = _channel_alphas(atom, surface, z, w, 0.0, quad)
    gi = doppler_green_integral(surface, z, w, 0.0, quad, part="imag")
    from .response import _assemble
    return _assemble(np.abs(ac) ** 2 * _channel_sum(gi, e), e)


def tls_I1(atom: AtomModel, surface: SurfaceModel, z: float, k, v: float,
           quad: QuadratureConfig | None = None, n: int = 24) -> float:
    """``int_0^{kx v} dw Tr[alpha~_I(kx v - w; 0) G_I(k, w)]`` at fixed ``k`` (kx > 0)."""
    kx = float(k[0])
    top = kx * v
    x, wts = np.polynomial.legendre.leggauss(n)
    w = 0.5 * top * (x + 1.0)
    at = _tls_alpha_tilde(atom, surface, z, top - w, quad)
    g = _green_imag_at(k, z, w, surface)
    tr = np.einsum("mij,mji->m", at, g)
    return float(0.5 * top * np.sum(wts * tr))


def tls_I2(atom: AtomModel, surface: SurfaceModel, z: float, k, v: float,
           quad: QuadratureConfig | None = None, n: int = 12) -> float:
    """``(v^2/2) int_0^{kx v} dw Tr[eta~(kx v - w; 0) G_I(k, w)]`` at fixed ``k``."""
    kx = float(k[0])
    top = kx * v
    x, wts = np.polynomial.legendre.leggauss(n)
    w = 0.5 * top * (x + 1.0)
    eta = eta_tensor(atom, surface, z, top - w, quad)
    g = _green_imag_at(k, z, w, surface)
    tr = np.einsum("mij,mji->m", eta, g)
    return float(0.5 * v * v * 0.5 * top * np.sum(wts * tr))
