"""The cubic nonlinearity of the profile equation.

    N[u](t, p) = i p^3 iint exp(-i t p^3 (1 - q1^3 - q2^3 - q3^3))
                         u~(p q1) u~(p q2) u~(p q3) dq1 dq2,   q3 = 1 - q1 - q2,

so that d/dt u~ = -(eps / 4 pi^2) N[u].  Three evaluations are provided:
direct quadrature in the q-plane, a physical-space route (cube u(t, x) and
transform back, done as an FFT triple convolution), and the two-term
stationary-phase expansion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import fft as sfft

from .errors import SupportError
from .profile import Profile, e_norm, japanese

# N = PHYSICAL_CONSTANT * i p exp(-i t p^3) (u^3)^(p) with u^ = int e^{-ipx} u dx;
# fixed by requiring eval_physical == eval_direct.
PHYSICAL_CONSTANT = 4 * math.pi**2


class AliasingWarning(UserWarning):
    pass


class PhasePoint(NamedTuple):
    q1: float
    q2: float

    @property
    def q3(self):
        return 1.0 - self.q1 - self.q2


@dataclass(frozen=True)
class NonlinSample:
    p: float
    t: float
    direct: complex
    physical: complex
    stationary: complex
    remainder: complex
    # which value the remainder was taken against: "direct" or "physical"
    reference: str = "direct"

    @property
    def tau(self):
        return self.p**3 * self.t


# ---------------------------------------------------------------- the phase


def phase_q(q1, q2=None):
    """Q = -(1 - q1^3 - q2^3 - q3^3); accepts scalars, arrays or a PhasePoint."""
    if q2 is None:
        q1, q2 = q1
    q3 = 1.0 - q1 - q2
    return -(1.0 - q1**3 - q2**3 - q3**3)


def grad_q(q1, q2):
    q3 = 1.0 - q1 - q2
    return 3 * (q1**2 - q3**2), 3 * (q2**2 - q3**2)


def stationary_points():
    """The four critical points of Q: the symmetric one and the resonant triples."""
    return [PhasePoint(1 / 3, 1 / 3), PhasePoint(1.0, 1.0),
            PhasePoint(-1.0, 1.0), PhasePoint(1.0, -1.0)]


def _support(u: Profile):
    if u.tail != "zero":
        raise SupportError("direct q-quadrature needs a compactly supported profile")
    end = u.support_end()
    if end == 0:
        return 0.0
    return float(u.grid.nodes[end - 1]) if end < len(u.grid) else u.grid.p_max


# ---------------------------------------------------------------- direct route

_DIRECT_ORDER = 12
_ROWS = 256


def _sub_panels(a, b, n, gx, gw):
    """Gauss nodes on n equal sub-panels of [a, b] (a, b arrays of equal shape)."""
    k = np.arange(n)
    h = (b - a) / n
    left = a[..., None] + h[..., None] * k
    half = (h / 2)[..., None, None]
    nodes = left[..., None] + half + half * gx
    weights = np.broadcast_to(half * gw, nodes.shape)
    shape = nodes.shape[:-2] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def eval_direct(u: Profile, p: float, phase_per_panel=3.0, order=_DIRECT_ORDER,
                feature_rate=4.0, return_error=False):
    """N[u](t, p) by iterated Gauss-Legendre quadrature over the bounded q-domain
    {|p q_i| <= P}.  Panels break on the support edges, the lines q_i = 0 and
    the stationary values, and are sub-divided so the phase changes by at most
    `phase_per_panel` per panel.  With `return_error` the value at half the
    panel size is also computed and the difference returned."""
    if return_error:
        v1 = eval_direct(u, p, phase_per_panel, order, feature_rate)
        v2 = eval_direct(u, p, phase_per_panel / 2, order, feature_rate)
        return v2, abs(v2 - v1)
    if p < 0:
        return np.conj(eval_direct(u, -p, phase_per_panel, order, feature_rate))
    P = _support(u)
    if p == 0 or P == 0:
        return 0j
    t = u.time
    tau = p**3 * t
    R = P / p
    gx, gw = np.polynomial.legendre.leggauss(order)
    # oscillation per unit q: phase gradient plus the profile's own variation
    rate = 3 * tau * R * R + feature_rate * p

    lo1, hi1 = max(-R, 1 - 2 * R), min(R, 1 + 2 * R)
    cand = [-R, R, 0.0, 1 / 3, 1.0, -1.0, 1 - R, 1 + R, 1 - 2 * R, 1 + 2 * R]
    breaks = np.unique(np.clip(cand, lo1, hi1))
    total = 0j
    for a, b in zip(breaks[:-1], breaks[1:]):
        n_out = max(1, int(math.ceil((b - a) * rate / phase_per_panel)))
        q1, w1 = _sub_panels(np.array(a), np.array(b), n_out, gx, gw)
        for i in range(0, q1.size, _ROWS):
            total += np.sum(w1[i:i + _ROWS] * _inner(u, p, tau, R, q1[i:i + _ROWS], rate,
                                                      phase_per_panel, gx, gw))
    return complex(1j * p**3 * total)


def _inner(u, p, tau, R, q1, rate, phase_per_panel, gx, gw):
    """Inner integral over q2 for each q1 (vectorized): equal panels on
    [lo, hi], with the panel straddling each interior break point cut in two."""
    lo = np.maximum(-R, 1 - q1 - R)
    hi = np.minimum(R, 1 - q1 + R)
    n = max(1, int(math.ceil(np.max(hi - lo) * rate / phase_per_panel)))
    frac = np.linspace(0.0, 1.0, n + 1)
    edges = lo[:, None] + (hi - lo)[:, None] * frac
    extra = np.stack([np.clip(0.0, lo, hi), np.clip(1 - q1, lo, hi),
                      np.clip((1 - q1) / 2, lo, hi)], axis=-1)
    edges = np.sort(np.concatenate([edges, extra], axis=1), axis=1)
    a, b = edges[:, :-1, None], edges[:, 1:, None]
    half = (b - a) / 2
    q2 = (a + half + half * gx).reshape(q1.size, -1)
    w2 = (half * gw).reshape(q1.size, -1)
    qq1 = q1[:, None]
    q3 = 1 - qq1 - q2
    ph = -tau * (1 - qq1**3 - q2**3 - q3**3)
    f = np.exp(1j * ph) * u(p * q2) * u(p * q3)
    return np.sum(w2 * f, axis=1) * u(p * q1)


# ---------------------------------------------------------------- physical route

PHYSICAL_MARGIN = 60.0
PHYSICAL_DP_MAX = 0.02
JUMP_MARGIN = 4000.0


def physical_grid_step(t, P, margin=PHYSICAL_MARGIN):
    """Uniform frequency step for the FFT route: the periodic x-box 2 pi / dp
    is four times the region |x| <= 3 t P^2 + margin occupied by u(t, .)."""
    return min(PHYSICAL_DP_MAX, math.pi / (2 * (3 * t * P * P + margin)))


def _uniform_samples(u: Profile, dp, K, P):
    """g_k = exp(i t p_k^3) u~(p_k), p_k = k dp, k = 0..K, with trapezoid end
    values at p = 0 (mean of the two one-sided limits) and at a support jump."""
    pk = dp * np.arange(K + 1)
    g = np.exp(1j * u.time * pk**3) * u(pk)
    g[0] = u.limit_at_zero.real
    if abs(pk[-1] - P) < 1e-9 * P and u.tail == "zero":
        g[-1] *= 0.5
    return g


def _cube_spectrum(g, dp, n_fft):
    """Samples u_j of u at x_j = j dx (j centred) and dx, from one-sided g."""
    K = g.size - 1
    F = np.zeros(n_fft, complex)
    F[:K + 1] = g
    F[n_fft - K:] = np.conj(g[1:][::-1])
    u = np.real(sfft.ifft(F)) * n_fft * dp / (2 * math.pi)
    return u, 2 * math.pi / (n_fft * dp)


def lattice_nonlinearity(values, dp, t):
    """N at p_k = k dp (k = 0..K) from profile samples u~(p_k) on the same
    lattice; values[0] should be the mean of the one-sided limits at 0."""
    values = np.asarray(values, dtype=complex)
    K = values.size - 1
    pk = dp * np.arange(K + 1)
    g = np.exp(1j * t * pk**3) * values
    n_fft = sfft.next_fast_len(4 * K + 4)
    uj, dx = _cube_spectrum(g, dp, n_fft)
    spec = sfft.fft(uj**3)[:K + 1] * dx
    return PHYSICAL_CONSTANT * 1j * pk * np.exp(-1j * t * pk**3) * spec


def eval_physical(u: Profile, p, margin=PHYSICAL_MARGIN, dp=None):
    """N[u](t, p) from the physical field: u(t, x) on a periodic grid, cubed
    pointwise and transformed back.  The discrete triple convolution this
    amounts to is the trapezoid rule for the q-integral on a uniform lattice;
    `p` may be a scalar or an array."""
    scalar = np.ndim(p) == 0
    ps = np.atleast_1d(np.asarray(p, dtype=float))
    if u.tail == "hold":
        warnings.warn("profile is not compactly supported; the cubed spectrum "
                      "is truncated at 3 p_max", AliasingWarning, stacklevel=2)
        P = u.grid.p_max
    else:
        P = _support(u)
    if P == 0:
        out = np.zeros(ps.shape, complex)
        return complex(out[0]) if scalar else out
    t = u.time
    jump = u.tail == "zero" and abs(u.values[-1]) > 1e-12 * u.sup() \
        and u.support_end() == len(u.grid)
    if dp is None:
        if jump:
            # lattice-aligned jumps converge only at second order in dp
            margin = max(margin, JUMP_MARGIN)
        dp = physical_grid_step(t, P, margin)
        if jump or ps.size != 1:
            # lattice through the support edge; output read off the lattice
            dp = P / math.ceil(P / dp)
        else:
            dp = abs(ps[0]) / math.ceil(abs(ps[0]) / dp) if ps[0] != 0 else dp
    K = int(math.floor(P / dp + 1e-9))
    n_fft = sfft.next_fast_len(4 * K + 4)
    g = _uniform_samples(u, dp, K, P)
    uj, dx = _cube_spectrum(g, dp, n_fft)
    cube = uj**3
    # centred x so that exp(-i p x) is evaluated on a symmetric window
    j = np.arange(n_fft)
    j = np.where(j < n_fft // 2, j, j - n_fft)
    x = j * dx
    out = np.empty(ps.shape, complex)
    on_lattice = np.abs(ps / dp - np.round(ps / dp)) < 1e-9
    if np.all(on_lattice):
        spec = sfft.fft(cube) * dx
        m = np.round(ps / dp).astype(int)
        out = np.where(m >= 0, spec[m % n_fft], np.conj(spec[(-m) % n_fft]))
    else:
        for i, pv in enumerate(ps):
            out[i] = np.sum(np.exp(-1j * pv * x) * cube) * dx
    res = PHYSICAL_CONSTANT * 1j * ps * np.exp(-1j * t * ps**3) * out
    return complex(res[0]) if scalar else res


# ---------------------------------------------------------------- stationary phase


def eval_stationary_phase(u: Profile, p):
    """(pi p^3 / <p^3 t>) (i |u~(p)|^2 u~(p) - 3^{-1/2} e^{-8 i t p^3 / 9} u~(p/3)^3)."""
    p = np.asarray(p, dtype=float)
    tau = p**3 * u.time
    v = u(p)
    v3 = u(p / 3)
    res = (math.pi * p**3 / japanese(tau)) * (
        1j * np.abs(v) ** 2 * v - np.exp(-8j * tau / 9) * v3**3 / math.sqrt(3))
    return complex(res) if res.ndim == 0 else res


# ---------------------------------------------------------------- remainder


# beyond this much phase across the q-domain the 2-d quadrature is impractical
DIRECT_PHASE_LIMIT = 600.0


def _direct_feasible(u, p, t):
    P = _support(u)
    R = P / p
    return p**3 * t * 3 * R**3 <= DIRECT_PHASE_LIMIT


def remainder_scan(u: Profile, p_t_pairs, method="auto"):
    """R = N - (stationary-phase main terms) on each (p, t) pair, the profile
    values being held fixed while t varies.  `method` chooses the reference
    evaluation: "direct", "physical" or "auto" (direct while the q-plane
    phase variation stays below DIRECT_PHASE_LIMIT, physical beyond)."""
    rows = []
    for p, t in p_t_pairs:
        ut = u.replace(time=t)
        use_direct = method == "direct" or (method == "auto" and _direct_feasible(u, p, t))
        d = eval_direct(ut, p) if use_direct else complex("nan+nanj")
        ph = eval_physical(ut, p)
        s = eval_stationary_phase(ut, p)
        ref = d if use_direct else ph
        rows.append(NonlinSample(float(p), float(t), d, ph, s, ref - s,
                                 "direct" if use_direct else "physical"))
    return rows


def remainder_envelope(p, t, norm):
    """p^3 |u|^3 tau^{-5/6} <tau>^{-1/4}, tau = p^3 t."""
    p = np.asarray(p, dtype=float)
    tau = p**3 * np.asarray(t, dtype=float)
    return p**3 * np.asarray(norm) ** 3 * tau ** (-5 / 6) * japanese(tau) ** (-0.25)


def envelope_constant(u: Profile, samples):
    """Smallest C with |R| <= C * envelope over all samples (e_norm at each t)."""
    if not samples:
        return 0.0
    norms = {t: e_norm(u.replace(time=t)).e_norm for t in {s.t for s in samples}}
    env = remainder_envelope([s.p for s in samples], [s.t for s in samples],
                             [norms[s.t] for s in samples])
    r = np.array([abs(s.remainder) for s in samples])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(env > 0, r / env, 0.0)
    return float(np.max(ratio))
