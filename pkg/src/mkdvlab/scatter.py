"""Modified scattering: the phase E_u, the final state U, the asymptotic profile
U_inf and checks of the convergence rates in Fourier and physical space.

Phase convention.  With
    Phi(t, p) = int_1^t p^3 / (4 pi <p^3 s>) |u~(s, p)|^2 ds
the profile equation's resonant term gives u~ ~ U exp(-i eps Phi), so the
integrating factor that makes u~ E_u converge is E_u = exp(+i eps Phi).  This
is also the only sign compatible with
    U_inf = U exp(-i eps Psi - (i eps / 4 pi) |U|^2 R(p^3))
and u~ ~ U_inf exp(-(i eps / 4 pi) |U_inf|^2 log t).  `sign` lets the
opposite convention be tried.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .fit import FitResult, envelope_points, fit_envelope, fit_power_law
from .profile import Profile, japanese, physical_on_lattice, y_nu_norm

FOURIER_COEF = 1 / (4 * math.pi)
PHYSICAL_COEF = 1 / 6


class PhaseStepWarning(UserWarning):
    pass


def R_func(y):
    """R(y) = int_y^inf (1/<s> - 1/s) ds = ln 2 - (asinh y - ln y), y > 0,
    evaluated without cancellation."""
    y = np.asarray(y, dtype=float)
    inv2 = 1.0 / (y * y)
    return -np.log1p(inv2 / (2 * (1 + np.sqrt(1 + inv2))))


@dataclass
class PhaseAccumulator:
    times: np.ndarray
    nodes: np.ndarray
    phase: np.ndarray  # Phi at each (time, node)
    epsilon: int = 1
    sign: int = 1

    def E(self, k=-1):
        """E_u at snapshot k; unit modulus by construction."""
        return np.exp(1j * self.sign * self.epsilon * self.phase[k])


def accumulate_phase(traj, sign=1, warn_step=math.pi / 4) -> PhaseAccumulator:
    snaps = traj.snapshots
    eps = traj.options.epsilon
    nodes = snaps[0].grid.nodes
    times = np.array([s.time for s in snaps])
    integrand = np.array([nodes**3 / (4 * math.pi * japanese(nodes**3 * s.time))
                          * np.abs(s.values) ** 2 for s in snaps])
    phase = np.zeros_like(integrand)
    if len(snaps) > 1:
        inc = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times)[:, None]
        if np.max(inc) > warn_step:
            warnings.warn("snapshot spacing gives phase increments above pi/4",
                          PhaseStepWarning, stacklevel=2)
        phase[1:] = np.cumsum(inc, axis=0)
    return PhaseAccumulator(times, nodes, phase, eps, sign)


@dataclass
class ScatteringReport:
    nodes: np.ndarray
    U: np.ndarray
    Psi: np.ndarray
    U_inf: np.ndarray
    R: np.ndarray
    t_end: float
    epsilon: int
    band_ok: np.ndarray  # <p^3 t_end> >= 10
    rate_fits: dict = field(default_factory=dict)

    def U_inf_at(self, p):
        """Interpolated U_inf (modulus and unwrapped phase separately)."""
        p = np.asarray(p, dtype=float)
        mod = np.interp(p, self.nodes, np.abs(self.U_inf))
        ph = np.interp(p, self.nodes, np.unwrap(np.angle(self.U_inf)))
        return mod * np.exp(1j * ph)


def extract_U_infinity(traj, acc: PhaseAccumulator) -> ScatteringReport:
    last = traj.snapshots[-1]
    t = last.time
    p = acc.nodes
    eps = acc.epsilon
    U = last.values * acc.E(-1)
    # psi(t, p) = Phi(t, p) - |u~(t, p)|^2 / (4 pi) int_1^t p^3/<p^3 s> ds
    log_part = math.log(t) + R_func(p**3) - R_func(p**3 * t)
    Psi = acc.phase[-1] - np.abs(last.values) ** 2 * log_part / (4 * math.pi)
    Rp = R_func(p**3)
    U_inf = U * np.exp(-1j * eps * Psi - 1j * eps * FOURIER_COEF * np.abs(U) ** 2 * Rp)
    band_ok = japanese(p**3 * t) >= 10
    return ScatteringReport(p, U, Psi, U_inf, Rp, t, eps, band_ok)


def modified_profile(rep: ScatteringReport, t, coef=FOURIER_COEF, p=None):
    """U_inf(p) exp(-i eps coef |U_inf|^2 log t)."""
    U = rep.U_inf if p is None else rep.U_inf_at(p)
    return U * np.exp(-1j * rep.epsilon * coef * np.abs(U) ** 2 * math.log(t))


def fourier_residuals(traj, rep: ScatteringReport, band=(0.3, 3.0), t_max=None):
    """(<p^3 t>, |u~(t,p) - U_inf e^{...}|) over snapshots t <= t_max, nodes in band."""
    p = rep.nodes
    sel = (p >= band[0]) & (p <= band[1])
    t_max = t_max if t_max is not None else rep.t_end / 4
    xs, rs = [], []
    for s in traj.snapshots:
        if s.time > t_max * (1 + 1e-12):
            continue
        r = np.abs(s.values[sel] - modified_profile(rep, s.time)[sel])
        xs.append(japanese(p[sel] ** 3 * s.time))
        rs.append(r)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(rs)


def verify_fourier_rate(traj, rep: ScatteringReport, band=(0.3, 3.0),
                        window=(10.0, 1e4), t_max=None) -> FitResult:
    """Envelope fit of the Fourier residual against <p^3 t>."""
    x, r = fourier_residuals(traj, rep, band, t_max)
    if r.size == 0 or np.max(r) == 0:
        res = FitResult(float("-inf"), float("-inf"), 1.0, tuple(window), int(r.size))
    else:
        res = fit_envelope(x, r, window)
    rep.rate_fits["fourier"] = res
    return res


def airy_modified(rep: ScatteringReport, t, x, coef=PHYSICAL_COEF):
    """t^{-1/3} Re[Ai(x t^{-1/3}) U_inf(y) exp(-i eps coef |U_inf(y)|^2 log t)],
    y = sqrt(|x| / 3t)."""
    x = np.asarray(x, dtype=float)
    z = x * t ** (-1.0 / 3.0)
    y = np.sqrt(np.abs(x) / (3 * t))
    U = rep.U_inf_at(y)
    main = specfun.airy_fock_array(z) * U * np.exp(-1j * rep.epsilon * coef * np.abs(U) ** 2 * math.log(t))
    return t ** (-1.0 / 3.0) * np.real(main)


def physical_residuals(u: Profile, rep: ScatteringReport, z_range=(-200.0, 50.0),
                       coef=PHYSICAL_COEF, max_points=1500):
    """(<z>, t^{1/3} |u - main|) on lattice points with z = x t^{-1/3} in z_range."""
    t = u.time
    x, ux = physical_on_lattice(u)
    z = x * t ** (-1.0 / 3.0)
    sel = (z >= z_range[0]) & (z <= z_range[1])
    x, ux, z = x[sel], ux[sel], z[sel]
    if x.size > max_points:
        idx = np.unique(np.linspace(0, x.size - 1, max_points).round().astype(int))
        x, ux, z = x[idx], ux[idx], z[idx]
    main = airy_modified(rep, t, x, coef)
    return japanese(z), t ** (1.0 / 3.0) * np.abs(ux - main)


def verify_physical_rate(traj, rep: ScatteringReport, times=None, z_range=(-200.0, 50.0),
                         window=(2.0, 200.0), coef=PHYSICAL_COEF) -> FitResult:
    """Envelope exponent of t^{1/3}|u - Airy main term| against <x/t^{1/3}>,
    pooled over the snapshot `times` (default: the last three)."""
    snaps = traj.snapshots
    if times is None:
        chosen = snaps[-3:]
    else:
        chosen = [traj.at(t) for t in times]
    xs, rs = [], []
    for s in chosen:
        zz, r = physical_residuals(s, rep, z_range, coef)
        xs.append(zz)
        rs.append(r)
    x, r = np.concatenate(xs), np.concatenate(rs)
    if np.max(r) == 0:
        res = FitResult(float("-inf"), float("-inf"), 1.0, tuple(window), int(r.size))
    else:
        res = fit_envelope(x, r, window)
    rep.rate_fits[f"physical_coef_{coef:.6g}"] = res
    return res


def sup_difference(u: Profile, s_profile: Profile):
    """||u(t) - S(t)||_inf through the difference profile (same grid and time)."""
    w = (u - s_profile).replace(tail="zero")
    _, v = physical_on_lattice(w)
    return float(np.max(np.abs(v)))


def self_similar_at(s, t, grid=None):
    """S~(t, p) = S(t^{1/3} p) on `grid` (default the self-similar grid)."""
    base = s.profile
    grid = grid or base.grid
    vals = base(grid.nodes * t ** (1.0 / 3.0))
    return Profile(grid, vals, base.limit_at_zero, t, tail="hold")


def y_nu_drift(traj, s, nu, delta):
    """sup_t ||u(t) - S(t)||_{Y_t^nu} / delta over the snapshots."""
    worst = 0.0
    for snap in traj.snapshots:
        S = self_similar_at(s, snap.time, snap.grid)
        worst = max(worst, y_nu_norm(snap - S, nu))
    return worst / delta
