"""Time integration of the profile equation d/dt u~ = -(eps / 4 pi^2) N[u],
optionally with the nonlinearity filtered by a frequency cutoff chi_n.

The right-hand side is split as  slow + exp(-i omega t) * osc  so that the
fast phase exp(-8 i t p^3 / 9) of the stationary-phase branch can be
integrated exactly (a Filon variant of classical RK4; with omega = 0 it is
RK4 verbatim).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import nonlin
from .errors import DomainError, InstabilityError
from .profile import Profile, e_norm, japanese

# ---------------------------------------------------------------- cutoffs

_GX, _GW = np.polynomial.legendre.leggauss(16)


def _mollifier(s):
    """Even polynomial bump of unit mass on [-1, 1]."""
    return np.where(np.abs(s) < 1, 35.0 / 32.0 * (1 - s * s) ** 3, 0.0)


def _solve_alpha(n, tol=1e-12):
    top = n * math.exp(n)

    def f(a):
        # 1 - ln(a/n)/n - e^{-a}, written relative to n e^n to avoid cancellation
        return -math.log1p((a - top) / top) / n - math.exp(-a)

    lo, hi = top - 1, top
    flo, fhi = f(lo), f(hi)
    if fhi == 0:
        return hi, 0.0
    if flo * fhi > 0:
        raise ArithmeticError("matching point not bracketed")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    a = 0.5 * (lo + hi)
    return a, abs(f(a))


@dataclass(frozen=True, eq=False)
class Cutoff:
    """chi_n = (phi_n * psi)^2 with phi_n = 1 on [0, n], 1 - ln(p/n)/n on
    [n, alpha_n] and exp(-p) beyond (extended evenly)."""

    n: int
    alpha_n: float
    residual: float
    _cache: dict = field(default_factory=dict, repr=False)

    def phi(self, p):
        p = np.abs(np.asarray(p, dtype=float))
        n, a = self.n, self.alpha_n
        mid = 1 - np.log(np.maximum(p, n) / n) / n
        return np.where(p <= n, 1.0, np.where(p <= a, mid, np.exp(-p)))

    def dphi(self, p):
        """phi_n'(p) for the even extension."""
        p = np.asarray(p, dtype=float)
        a_ = np.abs(p)
        n, a = self.n, self.alpha_n
        d = np.where(a_ <= n, 0.0, np.where(a_ <= a, -1 / (n * np.maximum(a_, n)), -np.exp(-a_)))
        return np.sign(p) * d

    def _convolve(self, func, p):
        """int psi(s) func(p - s) ds, split at the kinks of phi_n."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        n, a = self.n, self.alpha_n
        br = np.stack([np.full_like(p, -1.0), p - n, p + n, p - a, p + a, p, np.ones_like(p)], -1)
        br = np.sort(np.clip(br, -1.0, 1.0), axis=-1)
        lo, hi = br[:, :-1, None], br[:, 1:, None]
        half = (hi - lo) / 2
        s = lo + half + half * _GX
        return np.sum(half * _GW * _mollifier(s) * func(p[:, None, None] - s), axis=(1, 2))

    def sqrt_chi(self, p):
        return self._convolve(self.phi, p)

    def __call__(self, p):
        return self.sqrt_chi(p) ** 2

    def d_sqrt_chi(self, p):
        return self._convolve(self.dphi, p)

    def at_nodes(self, grid):
        key = id(grid)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not grid:
            hit = (grid, self(grid.nodes))
            self._cache[key] = hit
        return hit[1]

    def sup_log_derivative(self):
        """sup_p |p (chi_n^{1/2})'(p)| on a dense scan of [0, alpha_n + 10]."""
        n, a = self.n, self.alpha_n
        p = np.unique(np.concatenate([
            np.linspace(max(n - 1.0, 0.0), n + 10.0, 4001),
            np.geomspace(max(n - 1.0, 0.5), a + 10.0, 4001)]))
        return float(np.max(np.abs(p * self.d_sqrt_chi(p))))


def build_chi(n: int) -> Cutoff:
    if int(n) != n or n < 1:
        raise DomainError("cutoff index n must be an integer >= 1")
    a, res = _solve_alpha(int(n))
    return Cutoff(int(n), a, res)


# ---------------------------------------------------------------- options / results


@dataclass(frozen=True)
class EvolveOptions:
    epsilon: int = 1
    t_end: float = 10.0
    dt0: float = 0.01
    growth: float = 1.05
    step_fraction: float = 0.02  # dt <= step_fraction * t
    cutoff: Cutoff | None = None
    rhs_mode: str = "hybrid"  # direct | stationary | hybrid
    tau_star: float = 5.0
    # scaled frequency p t^{1/3} where the low-tau branch tapers the data off
    taper: float = 8.0
    save_times: tuple = ()
    save_every_step: bool = False
    guard: float = 0.5
    allow_backward: bool = False

    def __post_init__(self):
        if self.epsilon not in (1, -1):
            raise DomainError("epsilon must be +1 or -1")
        if self.rhs_mode not in ("direct", "stationary", "hybrid"):
            raise DomainError(f"unknown rhs_mode {self.rhs_mode!r}")
        if not self.tau_star > 0:
            raise DomainError("tau_star must be positive")
        if not (self.dt0 > 0 and self.growth >= 1 and self.step_fraction > 0):
            raise DomainError("invalid step rule")


@dataclass
class Trajectory:
    snapshots: list
    diagnostics: list
    options: EvolveOptions

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    def column(self, name):
        return np.array([d[name] for d in self.diagnostics])

    def at(self, t):
        for s in self.snapshots:
            if abs(s.time - t) <= 1e-12 * max(1.0, t):
                return s
        raise KeyError(t)


@dataclass
class RhsParts:
    slow: np.ndarray
    osc: np.ndarray
    omega: np.ndarray

    def total(self, t):
        return self.slow + np.exp(-1j * self.omega * t) * self.osc


# ---------------------------------------------------------------- right-hand side


def _taper(s, m):
    """1 below 0.6 m, smooth cos^2 roll-off to 0 at m (s = scaled frequency)."""
    x = np.clip((s - 0.6 * m) / (0.4 * m), 0.0, 1.0)
    return np.cos(0.5 * math.pi * x) ** 2


def _fft_branch(u: Profile, nodes, opts: EvolveOptions):
    """N at `nodes` through the physical (FFT) route."""
    t = u.time
    grid = u.grid
    if opts.rhs_mode == "direct":
        P = nonlin._support(u)
        if P == 0:
            return np.zeros(nodes.shape, complex)
        if grid.is_uniform and nodes.size == len(grid):
            dp = grid.dp
            if dp > nonlin.physical_grid_step(t, P, 0.0) * 2:
                warnings.warn("uniform grid too coarse for the dispersive extent of u; "
                              "x-space wrap-around", nonlin.AliasingWarning, stacklevel=3)
            vals = np.concatenate([[u.limit_at_zero.real], u.values])
            return nonlin.lattice_nonlinearity(vals, dp, t)[1:]
        taper = None
    else:
        m = opts.taper
        P = m * t ** (-1.0 / 3.0)
        if u.tail == "zero":
            P = min(P, max(nonlin._support(u), 1e-12))
        taper = m
    margin = nonlin.PHYSICAL_MARGIN * (t ** (1.0 / 3.0) if taper else 1.0)
    dp = nonlin.physical_grid_step(t, P, margin)
    K = int(math.ceil(P / dp))
    pk = dp * np.arange(K + 1)
    vals = u(pk)
    vals[0] = u.limit_at_zero.real
    if taper:
        vals = vals * _taper(pk * t ** (1.0 / 3.0), taper)
    N = nonlin.lattice_nonlinearity(vals, dp, t)
    # interpolate the non-oscillating part exp(i t p^3) N
    spl = CubicSpline(pk, np.exp(1j * t * pk**3) * N)
    return np.exp(-1j * t * nodes**3) * spl(nodes)


def rhs_parts(u: Profile, opts: EvolveOptions, fft_mask=None) -> RhsParts:
    p = u.grid.nodes
    t = u.time
    tau = p**3 * t
    coef = -opts.epsilon / (4 * math.pi**2)
    slow = np.zeros(p.shape, complex)
    osc = np.zeros(p.shape, complex)
    omega = np.zeros(p.shape)
    if fft_mask is None:
        fft_mask = branch_mask(u, opts)
    st = ~fft_mask
    if np.any(st):
        ps = p[st]
        v = u.values[st]
        v3 = u(ps / 3)
        pre = math.pi * ps**3 / japanese(tau[st])
        slow[st] = coef * pre * 1j * np.abs(v) ** 2 * v
        osc[st] = -coef * pre * v3**3 / math.sqrt(3)
        omega[st] = 8 * ps**3 / 9
    if np.any(fft_mask):
        slow[fft_mask] = coef * _fft_branch(u, p[fft_mask], opts)
    if opts.cutoff is not None:
        chi = opts.cutoff.at_nodes(u.grid)
        slow *= chi
        osc *= chi
    return RhsParts(slow, osc, omega)


def branch_mask(u: Profile, opts: EvolveOptions):
    """True where the physical (FFT) branch is used."""
    p = u.grid.nodes
    if opts.rhs_mode == "direct":
        return np.ones(p.shape, bool)
    if opts.rhs_mode == "stationary":
        return np.zeros(p.shape, bool)
    return p**3 * u.time <= opts.tau_star


def rhs(u: Profile, opts: EvolveOptions):
    """d/dt u~ at the grid nodes (the 0+ limit is constant in time)."""
    return rhs_parts(u, opts).total(u.time)


# ---------------------------------------------------------------- Filon-RK4


def _moments(phi):
    """M_n = int_0^1 theta^n exp(-i phi theta) d theta, n = 0, 1, 2."""
    phi = np.asarray(phi, dtype=float)
    small = np.abs(phi) < 0.5
    M = np.empty((3,) + phi.shape, complex)
    # series branch
    z = -1j * phi
    for n in range(3):
        term = np.ones(phi.shape, complex)
        acc = term / (n + 1)
        for k in range(1, 18):
            term = term * z / k
            acc = acc + term / (n + k + 1)
        M[n] = acc
    big = ~small
    if np.any(big):
        ph = phi[big]
        e = np.exp(-1j * ph)
        m0 = (1 - e) / (1j * ph)
        m1 = (m0 - e) / (1j * ph)
        m2 = (2 * m1 - e) / (1j * ph)
        M[0][big], M[1][big], M[2][big] = m0, m1, m2
    return M


def _filon_weights(omega, t, h):
    """Exponential integrals for the stages and the Simpson-type final weights."""
    ph = np.exp(-1j * omega * t)
    half = ph * (h / 2) * _moments(omega * h / 2)[0]
    M = _moments(omega * h)
    full = ph * h * M[0]
    w0 = ph * h * (2 * M[2] - 3 * M[1] + M[0])
    w1 = ph * h * (4 * M[1] - 4 * M[2])
    w2 = ph * h * (2 * M[2] - M[1])
    return half, full, (w0, w1, w2)


def filon_rk4_step(u: Profile, h, opts: EvolveOptions, fft_mask=None, k1=None):
    t = u.time
    if fft_mask is None:
        fft_mask = branch_mask(u, opts)
    y = u.values
    if k1 is None:
        k1 = rhs_parts(u, opts, fft_mask)
    half, full, (w0, w1, w2) = _filon_weights(k1.omega, t, h)
    u2 = u.replace(values=y + h / 2 * k1.slow + half * k1.osc, time=t + h / 2)
    k2 = rhs_parts(u2, opts, fft_mask)
    u3 = u.replace(values=y + h / 2 * k2.slow + half * k2.osc, time=t + h / 2)
    k3 = rhs_parts(u3, opts, fft_mask)
    u4 = u.replace(values=y + h * k3.slow + full * k3.osc, time=t + h)
    k4 = rhs_parts(u4, opts, fft_mask)
    y_new = (y + h / 6 * (k1.slow + 2 * k2.slow + 2 * k3.slow + k4.slow)
             + w0 * k1.osc + w1 * 0.5 * (k2.osc + k3.osc) + w2 * k4.osc)
    return u.replace(values=y_new, time=t + h)


# ---------------------------------------------------------------- diagnostics


def vector_field_I(u: Profile, du_dt, flag_below=1e-3):
    """I u(t, p) = i exp(i t p^3) (d_p u~ - (3t/p) d_t u~) at the nodes, and a
    mask of nodes below `flag_below` where the 1/p factor amplifies errors."""
    p = u.grid.nodes
    t = u.time
    d = u.derivative()[1:]
    samples = 1j * np.exp(1j * t * p**3) * (d - 3 * t / p * np.asarray(du_dt))
    return samples, p < flag_below


def vector_field_norm(u: Profile, du_dt, exclude_below=0.0):
    samples, _ = vector_field_I(u, du_dt)
    keep = u.grid.nodes >= exclude_below
    return float(math.sqrt(np.sum(u.grid.weights[keep] * np.abs(samples[keep]) ** 2)))


def weighted_l2(u: Profile, cutoff: Cutoff):
    chi = cutoff.at_nodes(u.grid)
    return float(u.grid.integrate(np.abs(u.values) ** 2 / chi, abs(u.limit_at_zero) ** 2))


def weighted_l2_drift(traj: Trajectory, cutoff: Cutoff):
    w = np.array([weighted_l2(s, cutoff) for s in traj.snapshots])
    if w.size == 0 or w[0] == 0:
        return 0.0
    return float(np.max(np.abs(w - w[0])) / w[0])


def _diag(u, parts, opts):
    du = parts.total(u.time)
    rep = e_norm(u)
    row = {"t": u.time, "e_norm": rep.e_norm, "I_norm": vector_field_norm(u, du),
           "sup_profile": rep.sup_part, "max_dudt": float(np.max(np.abs(du)))}
    row["weighted_l2"] = weighted_l2(u, opts.cutoff) if opts.cutoff is not None else float("nan")
    return row


# ---------------------------------------------------------------- driver


def step_schedule(t0, opts: EvolveOptions):
    """Step end points t0 < t_1 < ... = t_end from dt_k = min(dt0 g^k, c t_k),
    clipped so every requested save time is hit exactly."""
    stops = sorted({float(s) for s in opts.save_times if t0 < s < opts.t_end} | {opts.t_end})
    times = [t0]
    k = 0
    t = t0
    for stop in stops:
        while stop - t > 1e-12 * stop:
            dt = min(opts.dt0 * opts.growth**k, opts.step_fraction * t, stop - t)
            # avoid a sliver step before the stop
            if stop - (t + dt) < 0.25 * dt:
                dt = stop - t
            t = t + dt
            times.append(t)
            k += 1
        times[-1] = stop
        t = stop
    return times


def integrate(u0: Profile, opts: EvolveOptions) -> Trajectory:
    t0 = u0.time
    if not opts.t_end > t0:
        if not opts.allow_backward:
            raise DomainError("t_end must exceed the initial time (backward runs need allow_backward)")
        raise NotImplementedError("backward integration is not supported")
    times = step_schedule(t0, opts)
    save = {float(s) for s in opts.save_times} | {t0, opts.t_end}
    u = u0
    parts = rhs_parts(u, opts)
    diags = [_diag(u, parts, opts)]
    snaps = [u]
    norm = diags[0]["e_norm"]
    for t_next in times[1:]:
        h = t_next - u.time
        mask = branch_mask(u, opts)
        new = _guarded_step(u, h, opts, mask, parts, norm)
        u = new.replace(time=t_next)
        parts = rhs_parts(u, opts)
        row = _diag(u, parts, opts)
        norm = row["e_norm"]
        diags.append(row)
        if opts.save_every_step or any(abs(t_next - s) <= 1e-12 * s for s in save):
            snaps.append(u)
    return Trajectory(snaps, diags, opts)


def _guarded_step(u, h, opts, mask, parts, norm, max_halvings=4):
    """One step of length h; if the E-norm jumps by more than `guard` the step
    is redone as two halves, recursively."""
    new = filon_rk4_step(u, h, opts, mask, parts)
    if _jumped(norm, e_norm(new).e_norm, opts.guard):
        if max_halvings == 0:
            raise InstabilityError(f"E-norm jumped by more than {opts.guard:.0%} at t={u.time:g}")
        mid = _guarded_step(u, h / 2, opts, mask, parts, norm, max_halvings - 1)
        mid_parts = rhs_parts(mid, opts, mask)
        return _guarded_step(mid, h / 2, opts, mask, mid_parts, e_norm(mid).e_norm,
                             max_halvings - 1)
    return new


def _jumped(old, new, guard):
    if not np.isfinite(new):
        return True
    if old == 0:
        return False
    return abs(new - old) > guard * old
