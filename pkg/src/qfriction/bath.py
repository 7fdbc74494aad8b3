"""Brute-force oracle: an oscillator coupled to a finite set of bath modes.

Every polarizable channel of the atom is a harmonic oscillator coupled
linearly to discrete modes that represent the surface field.  The closed
linear system is started in the factorized vacuum and evolved exactly; no
fluctuation theorem is used anywhere.

For motion at constant ``v`` along x, a field mode with frequency ``w`` and
wave vector ``kx`` enters the coupling with phase ``exp(i kx v t)``.  In a
frame that co-rotates each mode with that phase the Hamiltonian is time
independent and the mode frequency becomes ``W = w - kx v`` (negative for
anomalous Doppler modes).  Modes sharing one ``W`` couple to the atom only
through one linear combination; the orthogonal combinations stay in vacuum.
Each discrete mode therefore stands for a whole ``W`` shell and carries the
coupling-weighted mean ``kx`` of that shell, which is all the force needs.

Per channel, with quadratures ``(Q, P)`` for the atom and ``(X_n, P_n)``
for the modes (units of ``hbar``)::

    H = w_a (Q^2 + P^2)/2 + sum_n W_n (X_n^2 + P_n^2)/2 - 2 sum_n c_n Q X_n

with ``c_n^2 = w_n s g+(W_n; v) / (2 pi w_a)``, ``s`` the channel strength
and ``g+`` the gated wave-vector integral of ``Im G`` (see
:func:`kspace.doppler_green_integral`).  The drag force is
``F = -2 hbar sum_n kx_n c_n <Q P_n>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import EPS0, HBAR
from .errors import ConvergenceError, DomainError
from .kspace import doppler_green_integral
from .materials import SurfaceModel, kx_kernels, surface_response_imag
from .quadrature import QuadratureConfig, graded_rule, integrate_semi_infinite
from .response import AtomModel

__all__ = [
    "BathConfig",
    "DiscreteBath",
    "StaticOracleResult",
    "MovingOracleResult",
    "build_bath",
    "evolve_static",
    "evolve_moving",
]


@dataclass(frozen=True)
class BathConfig:
    """Layout of the discrete modes.

    Attributes
    ----------
    uniform_fraction : float
        Share of the modes placed on a uniform midpoint grid; the rest sample
        the high-frequency tail on a geometric grid.
    band : float
        Upper end of the uniform grid in units of ``w_a`` (atom at rest).
    doppler_band : float
        For ``v != 0`` the uniform grid covers ``[-doppler_band, doppler_band]``
        in units of ``|v|/(2z)``, or more if ``band * w_a`` is smaller.
    reach : float
        Last tail mode sits near ``reach`` times the top of the uniform grid.
    reconstruction_threshold : float
        Relative L2 error of the smoothed spectral density above which the
        bath carries a warning flag.
    """

    uniform_fraction: float = 0.75
    band: float = 3.0
    doppler_band: float = 30.0
    reach: float = 10.0
    reconstruction_threshold: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.uniform_fraction <= 1.0:
            raise DomainError("uniform_fraction must lie in (0, 1]")
        if not (self.band > 0.0 and self.doppler_band > 0.0):
            raise DomainError("bands must be positive")


@dataclass(frozen=True)
class DiscreteBath:
    """Modes of every atom channel.

    Attributes
    ----------
    omega : ndarray, shape (C, N)
        Mode frequencies in the co-moving frame, rad/s.
    kx : ndarray, shape (C, N)
        Coupling-weighted mean wave number per mode, 1/m.
    coupling : ndarray, shape (C, N)
        ``c_n`` in rad/s.
    weights : ndarray, shape (N,)
        Frequency quadrature weights, rad/s.
    spacing : float
        Spacing of the uniform part of the grid, rad/s.
    reconstruction_error : float
        Relative L2 error of the kernel-smoothed spectral density.
    static_shift : ndarray, shape (C,)
        ``4 w_a int_{W_end}^inf rho(W)/W dW``: the static restoring-force
        shift of modes above the last one, eliminated adiabatically, rad^2/s^2.
    """

    atom: AtomModel
    surface: SurfaceModel
    z: float
    v: float
    N: int
    omega: np.ndarray
    kx: np.ndarray
    coupling: np.ndarray
    weights: np.ndarray
    spacing: float
    strengths: np.ndarray
    directions: np.ndarray
    reconstruction_error: float = 0.0
    static_shift: np.ndarray | None = None
    flags: tuple = ()

    @property
    def shift(self) -> np.ndarray:
        if self.static_shift is None:
            return np.zeros(self.strengths.size)
        return self.static_shift

    @property
    def t_revival(self) -> float:
        """``2 pi / spacing`` of the uniform grid."""
        return 2.0 * math.pi / self.spacing

    def coupling_density(self, w) -> np.ndarray:
        """Continuum target ``c^2`` per unit frequency, shape ``w.shape + (C,)``."""
        rho, _ = _densities(self.atom, self.surface, self.z, np.asarray(w, dtype=float),
                            self.v, self.strengths, self.directions)
        return rho


def _densities(atom, surface, z, w, v, s, e, quad=None):
    """Coupling density and ``kx``-weighted density at co-moving frequency ``w``."""
    quad = quad or QuadratureConfig()
    w = np.atleast_1d(w)
    if v == 0.0:
        gi = doppler_green_integral(surface, z, w, 0.0, quad, gate="positive", part="imag")
        rho = s * (gi @ (e ** 2).T) / (2.0 * math.pi * atom.omega_a)
        return rho, np.zeros_like(rho)
    wv = v / (2.0 * z)
    umax = quad.radial_cutoff(z)
    # lab frequency w + u wv must be positive
    lo = np.clip(-w / wv, -umax, umax) if wv > 0 else np.full_like(w, -umax)
    hi = np.full_like(w, umax) if wv > 0 else np.clip(-w / wv, -umax, umax)
    cols = [lo, hi, np.clip(np.zeros_like(w), lo, hi)]
    for f in surface.feature_frequencies():
        if f > 0.0:
            cols.append(np.clip((f - w) / wv, lo, hi))
    bps = np.sort(np.stack(cols, axis=1), axis=1)
    a, b = bps[:, :-1], bps[:, 1:]
    t, tw = graded_rule(quad.panel_nodes, quad.grading_levels)
    u = a[..., None] + (b - a)[..., None] * t
    wts = (b - a)[..., None] * tw
    lab = w[:, None, None] + u * wv
    h = np.where(lab > 0.0, surface_response_imag(surface, np.maximum(lab, 0.0)), 0.0)
    ker = kx_kernels(u)
    pref = 1.0 / (8.0 * math.pi ** 2 * EPS0 * (2.0 * z) ** 3)
    g = pref * np.einsum("mpq,mpqc->mc", wts * h, ker)
    gk = pref * np.einsum("mpq,mpqc->mc", wts * h * u / (2.0 * z), ker)
    rho = s * (g @ (e ** 2).T) / (2.0 * math.pi * atom.omega_a)
    rk = s * (gk @ (e ** 2).T) / (2.0 * math.pi * atom.omega_a)
    return rho, rk


def _mode_grid(N, lo, hi, frac, reach=10.0):
    """Uniform midpoint nodes on ``[lo, hi]`` plus a smoothly widening tail.

    Tail spacing starts at the uniform spacing ``d`` and grows by a constant
    factor per mode, so that the last node sits near ``reach * hi``.  A
    sudden jump in spacing would leave an edge artefact in the correlation.
    """
    nu = max(2, int(round(frac * N)))
    nt = N - nu
    d = (hi - lo) / nu
    wu = lo + d * (np.arange(nu) + 0.5)
    ww = np.full(nu, d)
    if nt > 0:
        target = reach * abs(hi) / d
        if target <= nt:
            L = 1e6
        else:
            L = brentq(lambda x: math.log(x) + nt / x + math.log(-math.expm1(-nt / x))
                       - math.log(target), 1e-2, 1e6)
        xi = np.arange(nt) + 0.5
        wt = hi + d * L * np.expm1(xi / L)
        wtw = d * np.exp(xi / L)
        wu = np.concatenate([wu, wt])
        ww = np.concatenate([ww, wtw])
        end = hi + d * L * math.expm1(nt / L)
    else:
        end = hi
    return wu, ww, d, end


def build_bath(atom: AtomModel, surface: SurfaceModel, z: float, N: int, v: float = 0.0,
               config: BathConfig | None = None) -> DiscreteBath:
    """Discretize the surface field seen by each atom channel.

    Parameters
    ----------
    N : int
        Modes per channel (at least 2).
    v : float
        Velocity; fixes the co-moving frequencies and the mode wave numbers.
    """
    config = config or BathConfig()
    if atom.kind != "oscillator":
        raise DomainError("the oracle needs a harmonic (oscillator) atom")
    if N < 2:
        raise DomainError("need at least 2 modes")
    if not z > 0.0:
        raise DomainError("height must be positive")
    if surface.kind == "constant" and not surface.is_vacuum:
        raise DomainError("a lossless constant-eps surface has no bath continuum")
    s, e = atom.channels()
    wa = atom.omega_a
    if v == 0.0:
        lo, hi = 0.0, config.band * wa
    else:
        wv = abs(v) / (2.0 * z)
        lo = -config.doppler_band * wv
        hi = max(config.doppler_band * wv, config.band * wa)
    w, ww, d, end = _mode_grid(N, lo, hi, config.uniform_fraction, config.reach)
    if surface.is_vacuum:
        zeros = np.zeros((s.size, N))
        return DiscreteBath(atom, surface, z, v, N, np.tile(w, (s.size, 1)), zeros, zeros, ww, d,
                            s, e, 0.0, np.zeros(s.size), ("vacuum",))
    rho, rk = _densities(atom, surface, z, w, v, s, e)
    rho = np.maximum(rho, 0.0)
    c = np.sqrt(ww[:, None] * rho).T
    with np.errstate(invalid="ignore", divide="ignore"):
        kx = np.where(rho > 0.0, rk / rho, 0.0).T
    err = _reconstruction_error(w[: int(round(config.uniform_fraction * N))], d, c, rho)
    flags = ("reconstruction error above threshold",) if err > config.reconstruction_threshold else ()
    est = integrate_semi_infinite(
        lambda x: _densities(atom, surface, z, x, v, s, e)[0] / x[:, None],
        QuadratureConfig(rel_tol=1e-10), scale=end, lower=end)
    shift = 4.0 * wa * np.asarray(est.value)
    return DiscreteBath(atom, surface, z, v, N, np.tile(w, (s.size, 1)), kx, c, ww, d, s, e,
                        err, shift, flags)


def _reconstruction_error(wu, d, c, rho):
    """Relative L2 error of the Gaussian-smoothed mode comb on the uniform band."""
    if wu.size < 8:
        return 0.0
    sig = 2.0 * d
    grid = np.linspace(wu[0] + 4 * sig, wu[-1] - 4 * sig, 400)
    if grid.size == 0 or grid[0] >= grid[-1]:
        return 0.0
    ker = np.exp(-0.5 * ((grid[:, None] - wu[None, :]) / sig) ** 2) / (math.sqrt(2 * math.pi) * sig)
    recon = ker @ (c[:, : wu.size].T ** 2)
    target = np.stack([np.interp(grid, wu, rho[: wu.size, j]) for j in range(rho.shape[1])], axis=1)
    num = np.sqrt(np.sum((recon - target) ** 2))
    den = np.sqrt(np.sum(target ** 2))
    return float(num / den) if den > 0 else 0.0


# Linear dynamics -------------------------------------------------------------

def _drift_matrix(wa, W, c, shift=0.0):
    """``dy/dt = A y`` for ``y = (Q, P, X_1, P_1, ..., X_N, P_N)``."""
    n = W.size
    A = np.zeros((2 * n + 2, 2 * n + 2))
    A[0, 1] = wa
    A[1, 0] = -wa + shift / wa
    ix = 2 + 2 * np.arange(n)
    A[ix, ix + 1] = W
    A[ix + 1, ix] = -W
    A[1, ix] = 2.0 * c
    A[ix + 1, 0] = 2.0 * c
    return A


def _hamiltonian_matrix(wa, W, c, shift=0.0):
    """``H / hbar = y^T Hm y / 2``."""
    n = W.size
    Hm = np.zeros((2 * n + 2, 2 * n + 2))
    Hm[0, 0] = wa - shift / wa
    Hm[1, 1] = wa
    ix = 2 + 2 * np.arange(n)
    Hm[ix, ix] = W
    Hm[ix + 1, ix + 1] = W
    Hm[0, ix] = Hm[ix, 0] = -2.0 * c
    return Hm


class _Propagator:
    """Exact ``exp(A t)`` through one eigendecomposition."""

    def __init__(self, A):
        lam, E = np.linalg.eig(A)
        self.lam, self.E = lam, E
        self.F = np.linalg.solve(E, np.eye(A.shape[0]))
        self.G = self.F @ self.F.T
        self.residual = float(np.max(np.abs(A @ E - E * lam)) / max(np.max(np.abs(A)), 1e-300))

    def matrix(self, t):
        return np.real((self.E * np.exp(self.lam * t)) @ self.F)

    def bilinear(self, a, b, ts):
        """``Re sum_kl (a_k e^{lam_k t}) G_kl (b_l e^{lam_l t})`` for every ``t``.

        With ``a = E[i]`` and ``b = E[j]`` this is ``2 V_ij(t)`` for vacuum
        initial covariance ``V(0) = I/2``.
        """
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            ph = np.exp(self.lam * t)
            out[i] = np.real((a * ph) @ self.G @ (b * ph))
        return out

    def covariance(self, t):
        M = self.matrix(t)
        return 0.5 * M @ M.T


def _symplectic_form(n):
    J = np.zeros((n, n))
    J[0::2, 1::2] = np.eye(n // 2)
    J[1::2, 0::2] = -np.eye(n // 2)
    return J


def _uncertainty_margin(V):
    """Smallest eigenvalue of ``V + i J / 2`` (non-negative for a physical state)."""
    J = _symplectic_form(V.shape[0])
    return float(np.min(np.linalg.eigvalsh(V + 0.5j * J)))


# Static oracle -----------------------------------------------------------------

@dataclass(frozen=True)
class StaticOracleResult:
    """Ground-state correlation of the discrete system.

    Attributes
    ----------
    tau : ndarray
    correlation : ndarray (complex)
        Trace of ``<d(tau) d(0)>`` summed over channels, (C m)^2.
    normal_frequencies, spectral_weights : ndarray
        Lines of the discrete spectrum (all channels concatenated).
    t_revival : float
    energy_drift : float
        Relative change of ``<H>`` along the propagated vacuum state.
    min_uncertainty_margin : float
        Smallest eigenvalue of ``V + iJ/2`` over the sampled times.
    """

    tau: np.ndarray
    correlation: np.ndarray
    normal_frequencies: np.ndarray
    spectral_weights: np.ndarray
    t_revival: float
    energy_drift: float
    min_uncertainty_margin: float
    flags: tuple = ()


def _normal_modes(wa, W, c, shift=0.0):
    """Normal modes of the static system in mass-weighted coordinates.

    Returns frequencies ``nu`` and the atom components ``U[0]``.
    """
    om = np.concatenate([[wa], W])
    K = np.diag(om ** 2)
    K[0, 0] -= shift
    off = -2.0 * c * np.sqrt(wa * W)
    K[0, 1:] = off
    K[1:, 0] = off
    nu2, U = np.linalg.eigh(K)
    if nu2[0] <= 0.0:
        raise DomainError("discrete system is unstable (negative normal-mode frequency squared)")
    return np.sqrt(nu2), U[0]


def evolve_static(bath: DiscreteBath, t_grid, *, check_times: int = 4) -> StaticOracleResult:
    """Stationary dipole correlation of the coupled ground state.

    ``C(tau) = sum_c d_c^2 w_a sum_k U_0k^2 exp(-i nu_k tau) / nu_k`` from the
    symmetric normal-mode problem.  The factorized vacuum is also propagated
    exactly to a few times to check energy conservation and the uncertainty
    bound of the covariance.
    """
    if bath.v != 0.0:
        raise DomainError("evolve_static needs a bath built at v = 0")
    tau = np.asarray(t_grid, dtype=float)
    wa = bath.atom.omega_a
    C = np.zeros(tau.shape, dtype=complex)
    freqs, weights = [], []
    drift, margin = 0.0, np.inf
    checks = np.linspace(0.0, float(np.max(tau)) if tau.size else 0.0, check_times)
    for ch in range(bath.strengths.size):
        d2 = HBAR * bath.strengths[ch] / (2.0 * wa)
        W, c = bath.omega[ch], bath.coupling[ch]
        nu, u0 = _normal_modes(wa, W, c, bath.shift[ch])
        amp = d2 * wa * u0 ** 2 / nu
        C += np.exp(-1j * np.multiply.outer(tau, nu)) @ amp
        freqs.append(nu)
        weights.append(amp)
        if check_times <= 0:
            continue
        A = _drift_matrix(wa, W, c, bath.shift[ch])
        Hm = _hamiltonian_matrix(wa, W, c, bath.shift[ch])
        prop = _Propagator(A)
        e0 = 0.25 * np.trace(Hm)
        for t in checks:
            V = prop.covariance(t)
            drift = max(drift, abs(0.5 * np.sum(Hm * V) - e0) / abs(e0))
            margin = min(margin, _uncertainty_margin(V))
    flags = () if check_times > 0 else ("propagation checks skipped",)
    return StaticOracleResult(tau, C, np.concatenate(freqs), np.concatenate(weights),
                              bath.t_revival, float(drift), float(margin), flags)


# Moving oracle -------------------------------------------------------------------

@dataclass(frozen=True)
class MovingOracleResult:
    """Drag force of the discrete system versus time.

    Attributes
    ----------
    t : ndarray
    force : ndarray
        x force in N, summed over channels.
    plateau : float
        Mean force over the plateau window.
    plateau_error : float
        Half the difference of the two half-window means.
    window : tuple of float
    converged : bool
        False when the two half-window means disagree by more than
        ``plateau_rtol`` or the window reaches past half the revival time.
    energy_mismatch : float
        Relative mismatch of ``E_lab(t) - E_lab(0)`` against the work
        ``-v int F dt`` at the end of the run.
    """

    t: np.ndarray
    force: np.ndarray
    plateau: float
    plateau_error: float
    window: tuple
    converged: bool
    t_revival: float
    energy_mismatch: float
    eig_residual: float
    flags: tuple = ()


def evolve_moving(bath: DiscreteBath, t_grid=None, *, window=(0.25, 0.5),
                  plateau_rtol: float = 0.1, strict: bool = False) -> MovingOracleResult:
    """Propagate the factorized vacuum and read off the drag force.

    Parameters
    ----------
    t_grid : array_like, optional
        Sample times; defaults to 4000 points on ``[0, 0.5 t_revival]``.
    window : tuple of float
        Plateau window in units of ``t_revival``.
    strict : bool
        Raise :class:`ConvergenceError` when no plateau is found.
    """
    trev = bath.t_revival
    if t_grid is None:
        t_grid = np.linspace(0.0, window[1] * trev, 4000)
    t = np.asarray(t_grid, dtype=float)
    wa = bath.atom.omega_a
    F = np.zeros_like(t)
    e_lab = np.zeros(2)
    resid = 0.0
    ends = (0.0, float(t[-1]))
    for ch in range(bath.strengths.size):
        W, c, kx = bath.omega[ch], bath.coupling[ch], bath.kx[ch]
        if not np.any(c):
            continue
        A = _drift_matrix(wa, W, c, bath.shift[ch])
        prop = _Propagator(A)
        resid = max(resid, prop.residual)
        ix = 2 + 2 * np.arange(W.size)
        b = (kx * c) @ prop.E[ix + 1]
        F += -HBAR * prop.bilinear(prop.E[0], b, t)
        # lab-frame energy: co-moving Hamiltonian plus v * field momentum
        Hl = _hamiltonian_matrix(wa, W + kx * bath.v, c, bath.shift[ch])
        for j, tt in enumerate(ends):
            e_lab[j] += HBAR * 0.5 * np.sum(Hl * prop.covariance(tt))
    lo, hi = window[0] * trev, window[1] * trev
    sel = (t >= lo) & (t <= hi)
    flags = []
    if sel.sum() < 4:
        flags.append("plateau window not sampled")
        plateau, perr, ok = float("nan"), float("inf"), False
    else:
        ts, fs = t[sel], F[sel]
        mid = 0.5 * (ts[0] + ts[-1])
        m1, m2 = fs[ts <= mid].mean(), fs[ts > mid].mean()
        plateau = float(fs.mean())
        perr = 0.5 * abs(m1 - m2)
        ok = perr <= plateau_rtol * abs(plateau) and hi <= 0.5 * trev * (1 + 1e-12)
    if not ok:
        flags.append("no plateau before revival")
        if strict:
            raise ConvergenceError("moving oracle: no force plateau", plateau, perr)
    work = -bath.v * np.trapezoid(F, t) if t.size > 1 else 0.0
    gain = e_lab[1] - e_lab[0]
    scale = max(abs(gain), abs(work), 1e-300)
    mismatch = abs(gain - work) / scale if bath.v != 0.0 else 0.0
    return MovingOracleResult(t, F, plateau, float(perr), (lo, hi), bool(ok), trev,
                              float(mismatch), resid, tuple(flags))
