"""Wave-vector integrals of the reflected Green tensor at Doppler-shifted frequency.

For an atom moving along x with speed ``v`` every response function needs

    g_ii(w; v) = int d^2k/(2pi)^2  gate(w, w + kx v) * h(w + kx v) * k e^{-2kz} Re T_ii / (2 eps0)

where ``h`` is ``Delta`` or ``Im Delta``.  The ``ky`` integral is done in
closed form (modified Bessel kernels, see :func:`materials.kx_kernels`); the
remaining ``kx`` integral runs over ``u = 2 z kx`` with a composite
Gauss-Legendre rule graded toward every point where the integrand is not
smooth: ``u = 0`` (kernel kink), the gate edge ``w + kx v = 0`` and the
sharp features of the surface response.

Off-diagonal entries vanish: ``xy`` is odd in ``ky`` and ``xz``, ``yz`` are
antisymmetric and drop out of the symmetric contraction.
"""

from __future__ import annotations

import math

import numpy as np

from .constants import EPS0
from .materials import (SurfaceModel, coincidence_weights, kx_kernels, surface_response,
                        surface_response_imag, green_tensor_batch)
from .quadrature import QuadratureConfig, graded_rule, integrate_polar_2d

__all__ = ["doppler_green_integral", "doppler_green_integral_polar", "theta"]

_GATES = (None, "positive", "window", "sign")


def theta(x):
    """Heaviside step with ``theta(0) = 1/2``."""
    return np.heaviside(x, 0.5)


def _gate_factor(gate, w, lab):
    if gate is None:
        return 1.0
    if gate == "positive":
        return theta(lab)
    if gate == "window":
        return theta(w) - theta(lab)
    if gate == "sign":
        return np.sign(lab)
    raise ValueError(f"unknown gate {gate!r}")


def _response(model, part):
    if part == "full":
        return lambda w: surface_response(model, w)
    if part == "imag":
        return lambda w: surface_response_imag(model, w)
    raise ValueError(f"unknown part {part!r}")


def doppler_green_integral(
    model: SurfaceModel,
    z: float,
    omega,
    v: float,
    quad: QuadratureConfig | None = None,
    *,
    gate: str | None = None,
    part: str = "full",
    h=None,
    order: int | None = None,
    numeric_rest: bool = False,
) -> np.ndarray:
    """Diagonal of the Doppler-shifted, wave-vector integrated Green tensor.

    Parameters
    ----------
    model : SurfaceModel
    z : float
        Height, m.
    omega : float or array_like
        Frequency in the atom frame, rad/s.
    v : float
        Velocity along x, m/s.
    gate : {None, "positive", "window", "sign"}
        Multiplies the integrand by 1, ``theta(w + kx v)``,
        ``theta(w) - theta(w + kx v)`` or ``sign(w + kx v)``.
    part : {"full", "imag"}
        Use ``Delta`` or ``Im Delta``.
    h : callable, optional
        Replaces the surface response (used for derivatives).
    order : int, optional
        Gauss-Legendre order per panel; defaults to ``quad.panel_nodes``.
    numeric_rest : bool
        At ``v = 0``, integrate the kernels numerically instead of using the
        closed-form coincidence weights (for independent cross-checks).

    Returns
    -------
    ndarray, shape ``omega.shape + (3,)``
        ``(xx, yy, zz)`` entries in V/(C m).
    """
    quad = quad or QuadratureConfig()
    w = np.asarray(omega, dtype=float)
    shape = w.shape
    w = w.ravel()
    if gate not in _GATES:
        raise ValueError(f"unknown gate {gate!r}")
    hfun = h if h is not None else _response(model, part)
    if v == 0.0 and numeric_rest:
        umax = quad.radial_cutoff(z)
        n = order or quad.panel_nodes
        t, tw = graded_rule(n, quad.grading_levels)
        u = np.concatenate([-umax + umax * t, umax * t])
        wts = np.concatenate([umax * tw, umax * tw])
        kint = wts @ kx_kernels(u)
        vals = np.asarray(hfun(w)) * _gate_factor(gate, w, w)
        pref = 1.0 / (8.0 * math.pi ** 2 * EPS0 * (2.0 * z) ** 3)
        return (pref * vals[:, None] * kint[None, :]).reshape(shape + (3,))
    if v == 0.0:
        vals = np.asarray(hfun(w)) * _gate_factor(gate, w, w)
        out = vals[:, None] * coincidence_weights(z)[None, :] / (2.0 * EPS0)
        return out.reshape(shape + (3,))
    wv = v / (2.0 * z)
    umax = quad.radial_cutoff(z)
    feats = np.asarray(model.feature_frequencies(), dtype=float)
    bps = np.concatenate([
        np.broadcast_to([-umax, 0.0, umax], (w.size, 3)),
        (feats[None, :] - w[:, None]) / wv,
    ], axis=1)
    bps = np.sort(np.clip(bps, -umax, umax), axis=1)
    a, b = bps[:, :-1], bps[:, 1:]
    n = order or quad.panel_nodes
    t, tw = graded_rule(n, quad.grading_levels)
    u = a[..., None] + (b - a)[..., None] * t
    wts = (b - a)[..., None] * tw
    lab = w[:, None, None] + u * wv
    vals = np.asarray(hfun(lab)) * _gate_factor(gate, w[:, None, None], lab)
    ker = kx_kernels(u)
    res = np.einsum("mpq,mpqc->mc", wts * vals, ker)
    pref = 1.0 / (8.0 * math.pi ** 2 * EPS0 * (2.0 * z) ** 3)
    return (pref * res).reshape(shape + (3,))


def doppler_green_integral_polar(
    model: SurfaceModel,
    z: float,
    omega: float,
    v: float,
    quad: QuadratureConfig | None = None,
    *,
    gate: str | None = None,
    part: str = "full",
) -> np.ndarray:
    """Independent route to :func:`doppler_green_integral` by 2-D polar quadrature.

    Samples the full 3x3 tensor of :func:`materials.green_nearfield` on a
    polar ``(k, theta)`` grid, so it does not use the Bessel kernels.  Slow;
    meant for cross-checks at a single frequency.

    Returns
    -------
    ndarray, shape (3, 3)
        Symmetric part of the integrated tensor.
    """
    quad = quad or QuadratureConfig()
    w = float(omega)

    def f(k, th):
        kx, ky = k * np.cos(th), k * np.sin(th)
        lab = w + kx * v
        g = green_tensor_batch(kx, ky, z, lab, model)
        sym = 0.5 * (g + np.swapaxes(g, -1, -2))
        sym = sym * np.asarray(_gate_factor(gate, w, lab))[..., None, None]
        return sym.imag if part == "imag" else sym

    est = integrate_polar_2d(f, quad, k_scale=1.0 / (2.0 * z))
    return np.asarray(est.value)
