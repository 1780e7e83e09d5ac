"""Self-similar profiles.

A solution is self-similar iff its rescaled profile V(t, p) = u~(t, t^{-1/3} p)
does not depend on t.  At t = 1 this reads

    (p / 3) S'(p) = d/dt u~ (1, p),

which, with the 0+ datum S(0+) = c + 3 i alpha / (2 pi), is solved here by
fixed-point iteration of  S <- S(0+) + int_0^p (3/p') rhs[S](1, p') dp'.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import evolve
from .errors import ConvergenceError
from .profile import FrequencyGrid, Profile, e_norm

_GX, _GW = np.polynomial.legendre.leggauss(8)


class FitWindowWarning(UserWarning):
    pass


@dataclass
class SelfSimilarProfile:
    profile: Profile
    c: float
    alpha: float
    epsilon: int = 1
    fitted: dict = field(default_factory=dict)
    iterations: int = 0
    converged: bool = True
    history: list = field(default_factory=list)
    options: evolve.EvolveOptions | None = None

    @property
    def jump(self):
        return self.profile.limit_at_zero


def jump_value(c, alpha):
    return complex(c, 3 * alpha / (2 * math.pi))


def _cumulative(nodes, f_slow, f_osc, omega_fn, split):
    """F(p_j) = int_0^{p_j} [f_slow + exp(-i omega(p)) f_osc] dp at every node.

    f_slow is integrated through its spline antiderivative on each side of
    `split` (the branch switch, where the integrand jumps); the oscillatory
    part, non-zero only above `split`, by Gauss panels fine enough in phase."""
    x = np.concatenate([[0.0], nodes])
    out = np.zeros(x.size, complex)
    lo = x <= split
    # low side: include the value at 0 by constant extrapolation
    fl = np.concatenate([[f_slow[0]], f_slow])
    xl = x[lo]
    if xl.size >= 2:
        anti = CubicSpline(xl, fl[lo]).antiderivative()
        out[lo] = anti(xl)
        base = complex(anti(split)) if split > xl[-1] else out[lo][-1]
    else:
        base = 0j
    hi = ~lo
    if np.any(hi):
        xh = x[hi]
        s_slow = CubicSpline(xh, fl[hi])
        fo = np.concatenate([[0j], f_osc])[hi]
        s_osc = CubicSpline(xh, fo)
        # first high node measured from the split (slow part extrapolated)
        edges = np.concatenate([[split], xh])
        acc = base
        vals = np.empty(xh.size, complex)
        for j in range(xh.size):
            a, b = edges[j], edges[j + 1]
            dphi = abs(omega_fn(b) - omega_fn(a))
            m = max(1, int(math.ceil(dphi / 1.0)))
            e = np.linspace(a, b, m + 1)
            aa, bb = e[:-1, None], e[1:, None]
            half = (bb - aa) / 2
            q = (aa + half + half * _GX).ravel()
            w = (half * _GW).ravel()
            acc += np.sum(w * (s_slow(q) + np.exp(-1j * omega_fn(q)) * s_osc(q)))
            vals[j] = acc
        out[hi] = vals
    return out


def _iterate_once(S: Profile, opts: evolve.EvolveOptions):
    p = S.grid.nodes
    parts = evolve.rhs_parts(S, opts)
    f_slow = 3 * parts.slow / p
    f_osc = 3 * parts.osc / p
    split = (opts.tau_star / S.time) ** (1.0 / 3.0) if opts.rhs_mode == "hybrid" else 0.0
    if opts.rhs_mode == "direct":
        split = p[-1] + 1.0
    F = _cumulative(p, f_slow, f_osc, lambda q: 8 * q**3 / 9, split)
    return S.replace(values=S.limit_at_zero + F[1:])


def default_grid():
    return FrequencyGrid.hybrid(p_max=16.0)


def solve_profile(c, alpha, tol=1e-6, epsilon=1, grid=None, max_iter=200,
                  opts: evolve.EvolveOptions | None = None, strict=False):
    """Fixed point of S(p) = S(0+) + int_0^p 3 rhs[S](1, p')/p' dp'.

    Returns a SelfSimilarProfile; when the iteration fails to settle within
    `max_iter` the result carries converged=False (or ConvergenceError is
    raised if `strict`)."""
    grid = grid or default_grid()
    opts = opts or evolve.EvolveOptions(epsilon=epsilon)
    jump = jump_value(c, alpha)
    S = Profile(grid, np.full(len(grid), jump), jump, 1.0, tail="hold")
    if jump == 0:
        s = SelfSimilarProfile(S, c, alpha, epsilon, iterations=0, options=opts)
        s.fitted = asymptotic_fit(s)
        return s
    history = []
    prev = e_norm(S).e_norm
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        new = _iterate_once(S, opts)
        diff = e_norm(new - S).e_norm
        history.append(diff)
        S = new
        if not np.isfinite(diff) or diff > 1e3 * max(prev, 1e-300):
            break
        if diff < tol:
            converged = True
            break
    if not converged:
        msg = f"self-similar iteration did not converge after {k} steps (last change {history[-1]:.3g})"
        if strict:
            raise ConvergenceError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    s = SelfSimilarProfile(S, c, alpha, epsilon, iterations=k, converged=converged,
                           history=history, options=opts)
    s.fitted = asymptotic_fit(s)
    return s


def asymptotic_fit(s: SelfSimilarProfile, window=None):
    """|A| = mean |S| on [p_max/2, p_max]; a = slope of the unwrapped phase
    against ln p; modulus_flatness = relative std of |S| there."""
    u = s.profile
    p = u.grid.nodes
    lo, hi = window or (u.grid.p_max / 2, u.grid.p_max)
    sel = (p >= lo) & (p <= hi)
    v = u.values[sel]
    mod = np.abs(v)
    A_abs = float(np.mean(mod))
    if A_abs == 0:
        return {"A": 0j, "A_abs": 0.0, "a": 0.0, "modulus_flatness": 0.0, "window": (lo, hi)}
    flat = float(np.std(mod) / A_abs)
    phase = np.unwrap(np.angle(v))
    lp = np.log(p[sel])
    a, b = np.polyfit(lp, phase, 1)
    A = A_abs * np.exp(1j * b)
    # size of the B e^{...}/p^3 correction relative to |A| at the window start
    b_est = 9 * A_abs**3 / (32 * math.pi * math.sqrt(3)) / lo**3
    if b_est > 0.1 * A_abs:
        warnings.warn("fit window too low: the p^-3 correction is not negligible",
                      FitWindowWarning, stacklevel=2)
    return {"A": complex(A), "A_abs": A_abs, "a": float(a), "modulus_flatness": flat,
            "window": (float(lo), float(hi))}


def rescaled(u: Profile, p):
    """V(t, p) = u~(t, t^{-1/3} p)."""
    return u(np.asarray(p) * u.time ** (-1.0 / 3.0))


def invariance_residual(s: SelfSimilarProfile, times=(1.5, 2.0, 4.0), opts=None):
    """max over `times` and nodes of |V(t, p) - V(1, p)| after evolving S."""
    base = opts or s.options or evolve.EvolveOptions(epsilon=s.epsilon)
    opts = evolve.EvolveOptions(**{**base.__dict__, "t_end": max(times),
                                   "save_times": tuple(times)})
    traj = evolve.integrate(s.profile, opts)
    p = s.profile.grid.nodes
    res = {}
    for t in times:
        snap = traj.at(t)
        res[t] = float(np.max(np.abs(rescaled(snap, p) - s.profile.values)))
    return max(res.values()), res, traj


def vector_field_residual(s: SelfSimilarProfile):
    """||I S||_{L^2} at t = 1 and the E-norm."""
    opts = s.options or evolve.EvolveOptions(epsilon=s.epsilon)
    du = evolve.rhs(s.profile, opts)
    return evolve.vector_field_norm(s.profile, du), e_norm(s.profile).e_norm
