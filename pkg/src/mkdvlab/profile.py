"""Profiles u~(t, p) on a positive-frequency grid, their norms, and
reconstruction of the physical field u(t, x).

Conventions: u^(p) = int e^{-ipx} u(x) dx, the profile is
u~(t, p) = exp(-i t p^3) u^(t, p), and a real field is recovered from the
positive half-axis by

    u(t, x) = (1/pi) Re int_0^inf exp(i p x + i p^3 t) u~(t, p) dp.

Negative frequencies are never stored; u~(-p) = conj(u~(p)).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from . import specfun
from .errors import DomainError


class TailTruncationWarning(UserWarning):
    pass


class TruncationSuspectWarning(UserWarning):
    pass


def japanese(y):
    return np.sqrt(1.0 + np.square(y))


# ---------------------------------------------------------------- grids


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    nodes: np.ndarray
    weights: np.ndarray
    p_max: float
    # quadrature weight carried by the stored 0+ limit (non-zero only for uniform grids)
    zero_weight: float = 0.0
    spec: str = ""

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if nodes.size < 4:
            raise ValueError("grid needs at least 4 nodes")
        if nodes[0] <= 0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be positive and strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def hybrid(cls, p_max=16.0, p_min=1e-4, p_switch=0.1, n_log_panels=24,
               panel_width=0.25, order=8):
        """Gauss-Legendre panels: one on [0, p_min], geometric panels up to
        `p_switch`, then panels of width about `panel_width` up to `p_max`."""
        if not 0 < p_min < p_switch < p_max:
            raise ValueError("need 0 < p_min < p_switch < p_max")
        log_edges = np.geomspace(p_min, p_switch, n_log_panels + 1)
        n_lin = max(1, int(math.ceil((p_max - p_switch) / panel_width)))
        lin_edges = np.linspace(p_switch, p_max, n_lin + 1)
        edges = np.concatenate([[0.0], log_edges, lin_edges[1:]])
        x, w = np.polynomial.legendre.leggauss(order)
        a, b = edges[:-1, None], edges[1:, None]
        nodes = ((a + b) / 2 + (b - a) / 2 * x).ravel()
        weights = ((b - a) / 2 * w).ravel()
        spec = (f"hybrid:p_max={p_max!r};p_min={p_min!r};p_switch={p_switch!r};"
                f"n_log_panels={n_log_panels};panel_width={panel_width!r};order={order}")
        return cls(nodes, weights, float(p_max), 0.0, spec)

    @classmethod
    def uniform(cls, p_max, n):
        """Nodes k*dp, k = 1..n, dp = p_max/n, with trapezoid weights (the 0+
        limit carries weight dp/2)."""
        dp = p_max / n
        nodes = dp * np.arange(1, n + 1)
        weights = np.full(n, dp)
        weights[-1] = dp / 2
        return cls(nodes, weights, float(p_max), dp / 2, f"uniform:p_max={p_max!r};n={n}")

    @classmethod
    def from_spec(cls, spec):
        kind, _, rest = spec.partition(":")
        kwargs = {}
        for item in filter(None, rest.split(";")):
            key, _, val = item.partition("=")
            kwargs[key] = int(val) if key in ("n", "n_log_panels", "order") else float(val)
        if kind == "hybrid":
            return cls.hybrid(**kwargs)
        if kind == "uniform":
            return cls.uniform(kwargs["p_max"], kwargs["n"])
        raise ValueError(f"unknown grid spec {spec!r}")

    @classmethod
    def from_nodes(cls, nodes, p_max):
        """Trapezoid weights on arbitrary nodes (fallback for foreign files)."""
        nodes = np.asarray(nodes, dtype=float)
        pts = np.concatenate([[0.0], nodes])
        h = np.diff(pts)
        w = np.zeros_like(pts)
        w[:-1] += h / 2
        w[1:] += h / 2
        return cls(nodes, w[1:], float(p_max), float(w[0]), "")

    @property
    def is_uniform(self):
        return self.spec.startswith("uniform")

    @property
    def dp(self):
        return float(self.nodes[1] - self.nodes[0])

    def __len__(self):
        return self.nodes.size

    def integrate(self, values, at_zero=0.0):
        return np.sum(self.weights * values) + self.zero_weight * at_zero

    @cached_property
    def fd_stencil(self):
        return _fd_weights(np.concatenate([[0.0], self.nodes]))

    def scaled(self, factor):
        """Grid with every node multiplied by `factor`."""
        return FrequencyGrid(self.nodes * factor, self.weights * factor,
                             self.p_max * factor, self.zero_weight * factor, "")


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True, eq=False)
class Profile:
    grid: FrequencyGrid
    values: np.ndarray
    limit_at_zero: complex
    time: float
    # behaviour beyond p_max: "zero" (compact support) or "hold" (keep u~(p_max))
    tail: str = "zero"
    interpolation: str = field(default="spline", compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid")
        if not np.all(np.isfinite(values)) or not np.isfinite(self.limit_at_zero):
            raise ValueError("profile values must be finite")
        if not (self.time > 0):
            raise DomainError("profile time must be positive")
        if self.tail not in ("zero", "hold"):
            raise ValueError("tail must be 'zero' or 'hold'")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "limit_at_zero", complex(self.limit_at_zero))
        object.__setattr__(self, "time", float(self.time))

    # construction helpers

    @classmethod
    def from_function(cls, grid, func, time=1.0, limit=None, **kw):
        values = func(grid.nodes)
        if limit is None:
            limit = complex(func(np.array([0.0]))[0])
        return cls(grid, values, limit, time, **kw)

    @classmethod
    def zero(cls, grid, time=1.0):
        return cls(grid, np.zeros(len(grid), complex), 0j, time)

    def replace(self, **changes):
        data = dict(grid=self.grid, values=self.values, limit_at_zero=self.limit_at_zero,
                    time=self.time, tail=self.tail, interpolation=self.interpolation)
        data.update(changes)
        return Profile(**data)

    def __sub__(self, other):
        if other.grid is not self.grid:
            raise ValueError("profiles live on different grids")
        return self.replace(values=self.values - other.values,
                            limit_at_zero=self.limit_at_zero - other.limit_at_zero)

    def rescale(self, lam):
        """Profile of the rescaled solution lam^{1/3} u(lam t, lam^{1/3} x) at
        time t/lam: u~_lam(p) = u~(lam^{-1/3} p), i.e. the grid scaled by lam^{1/3}."""
        factor = lam ** (1.0 / 3.0)
        return Profile(self.grid.scaled(factor), self.values, self.limit_at_zero,
                       self.time / lam, self.tail, self.interpolation)

    # evaluation

    @cached_property
    def _interp(self):
        x = np.concatenate([[0.0], self.grid.nodes])
        y = np.concatenate([[self.limit_at_zero], self.values])
        if self.interpolation == "pchip":
            re, im = PchipInterpolator(x, y.real), PchipInterpolator(x, y.imag)
            return lambda p: re(p) + 1j * im(p)
        return CubicSpline(x, y)

    def __call__(self, p):
        """u~(p) for arbitrary real p (conjugate symmetry for p < 0)."""
        p = np.asarray(p, dtype=float)
        a = np.abs(p)
        inside = a <= self.grid.p_max
        out = np.zeros(p.shape, complex)
        if np.any(inside):
            out[inside] = self._interp(a[inside])
        if self.tail == "hold" and not np.all(inside):
            out[~inside] = self.values[-1]
        return np.where(p < 0, np.conj(out), out)

    def sup(self):
        return float(max(np.max(np.abs(self.values)), abs(self.limit_at_zero)))

    def derivative(self):
        """d/dp on (0, p_max] by non-uniform finite differences; the 0+ limit
        is used as the left end point (one-sided, never across 0)."""
        return _fd_derivative(None, np.concatenate([[self.limit_at_zero], self.values]),
                              self.grid.fd_stencil)

    def deriv_l2(self):
        d = self.derivative()
        return math.sqrt(self.grid.integrate(np.abs(d[1:]) ** 2, abs(d[0]) ** 2))

    def support_end(self, rel=0.0):
        """Index one past the last node with |u~| > rel * sup."""
        mag = np.abs(self.values)
        idx = np.nonzero(mag > rel * max(self.sup(), 1e-300))[0]
        if idx.size == 0:
            return 0
        return int(min(idx[-1] + 2, mag.size))


FD_STENCIL = 5


def _fd_weights(x, width=FD_STENCIL):
    """Finite-difference weights for d/dx on non-uniform points: centered
    stencils of `width` points, shifted one-sided near the ends."""
    n = x.size
    half = width // 2
    idx = np.clip(np.arange(n) - half, 0, n - width)[:, None] + np.arange(width)
    w = np.empty((n, width))
    for i in range(n):
        # scale-free Vandermonde solve for the first derivative
        h = x[idx[i]] - x[i]
        s = np.max(np.abs(h))
        V = np.vander(h / s, width, increasing=True).T
        rhs = np.zeros(width)
        rhs[1] = 1.0
        w[i] = np.linalg.solve(V, rhs) / s
    return idx, w


def _fd_derivative(x, f, cache=None):
    if cache is None:
        cache = _fd_weights(x)
    idx, w = cache
    return np.sum(w * f[idx], axis=1)


# ---------------------------------------------------------------- norms


@dataclass(frozen=True)
class NormReport:
    e_norm: float
    sup_part: float
    deriv_part: float


def e_norm(u: Profile) -> NormReport:
    if u.time <= 0:
        raise DomainError("t must be positive")
    sup_part = u.sup()
    deriv_part = u.time ** (-1.0 / 6.0) * u.deriv_l2()
    return NormReport(sup_part + deriv_part, sup_part, deriv_part)


def y_nu_norm(w: Profile, nu: float) -> float:
    """t^{nu/3-1/6} ||d_p w~||_2 + sup_p p^{-nu} <p^3 t>^{nu/3-1/6} |w~(p)|."""
    if not 0 < nu < 0.5:
        raise DomainError("nu must lie in (0, 1/2)")
    if abs(w.limit_at_zero) > 1e-14:
        raise DomainError("Y^nu norm needs a vanishing 0+ limit")
    t = w.time
    ex = nu / 3.0 - 1.0 / 6.0
    p = w.grid.nodes
    weight = lambda q: q ** (-nu) * japanese(q**3 * t) ** ex
    weighted = weight(p) * np.abs(w.values)
    # refine the node maximum with the interpolant on the neighbouring intervals
    j = int(np.argmax(weighted))
    lo = p[j - 1] if j > 0 else 0.5 * p[0]
    hi = p[j + 1] if j + 1 < p.size else p[j]
    q = np.linspace(lo, hi, 201)
    sup = max(float(weighted[j]), float(np.max(weight(q) * np.abs(w(q)))))
    return float(t**ex * w.deriv_l2() + sup)


@dataclass(frozen=True)
class WeightSequence:
    alpha: float
    a: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        object.__setattr__(self, "a", a)
        if self.alpha <= 0:
            raise DomainError("alpha must be positive")
        if len(a) < 2 or a[0] != 1.0 or a[1] != 1.0:
            raise DomainError("weights must start with a_0 = a_1 = 1")
        if any(v <= 0 for v in a):
            raise DomainError("weights must be positive")
        for k in range((len(a) - 1) // 2 + 1):
            if 2 * k + 1 < len(a) and a[k] > self.alpha * a[2 * k + 1] * (1 + 1e-12):
                raise DomainError(f"a_{k} > alpha * a_{2 * k + 1}")

    @property
    def k_max(self):
        return len(self.a) - 1

    @classmethod
    def constant(cls, k_max, alpha=1.0):
        return cls(alpha, (1.0,) * (k_max + 1))


def r_alpha_norm(w, dx, seq: WeightSequence) -> float:
    """(sup_k a_k ||d_x^k w||_2^2)^{1/2} for periodic samples `w` with spacing `dx`,
    derivatives taken spectrally."""
    w = np.asarray(w, dtype=float)
    n = w.size
    spec = np.fft.fft(w)
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    power = np.abs(spec) ** 2 * dx / n
    vals = np.array([a_k * np.sum(power * k ** (2 * j)) for j, a_k in enumerate(seq.a)])
    j_star = int(np.argmax(vals))
    if j_star == seq.k_max and seq.k_max > 0 and vals[j_star] > 0:
        warnings.warn("supremum attained at k_max; truncation suspect",
                      TruncationSuspectWarning, stacklevel=2)
    return float(math.sqrt(vals[j_star]))


# ---------------------------------------------------------------- physical space

PHASE_PER_SUBPANEL = 1.0
_SUB_ORDER = 6
_SUB_X, _SUB_W = np.polynomial.legendre.leggauss(_SUB_ORDER)
_CHUNK = 4_000_000


def _quadrature_nodes(edges, rate):
    """Subdivide each [edges[i], edges[i+1]] so the phase change per sub-panel
    stays below PHASE_PER_SUBPANEL; Gauss nodes on each sub-panel."""
    h = np.diff(edges)
    m = np.maximum(1, np.ceil(rate * h / PHASE_PER_SUBPANEL)).astype(int)
    starts = np.repeat(edges[:-1], m)
    widths = np.repeat(h / m, m)
    offsets = np.concatenate([np.arange(k) for k in m]) * widths
    a = (starts + offsets)[:, None]
    half = (widths / 2)[:, None]
    nodes = (a + half + half * _SUB_X).ravel()
    weights = (half * _SUB_W).ravel()
    return nodes, weights


def reconstruct_physical(u: Profile, x_nodes) -> np.ndarray:
    """u(t, x) = (1/pi) Re int_0^inf exp(ipx + ip^3 t) u~(p) dp at each x."""
    x = np.atleast_1d(np.asarray(x_nodes, dtype=float))
    t = u.time
    sup = u.sup()
    if sup == 0:
        return np.zeros_like(x)
    if u.tail == "zero":
        end = u.support_end()
        if abs(u.values[-1]) > 1e-6 * sup:
            warnings.warn("profile not negligible at p_max; tail truncated",
                          TailTruncationWarning, stacklevel=2)
    else:
        end = len(u.grid)
    edges = np.concatenate([[0.0], u.grid.nodes[:end]])
    if u.tail == "zero" and end == len(u.grid) and edges[-1] < u.grid.p_max:
        edges = np.append(edges, u.grid.p_max)
    rate = np.max(np.abs(x)) + 3 * t * edges[1:] ** 2
    # at least two sub-panels per grid interval so the interpolant is resolved too
    p, w = _quadrature_nodes(edges, np.maximum(rate, 2.0 * PHASE_PER_SUBPANEL / np.diff(edges)))
    f = w * u(p)
    out = np.empty_like(x)
    step = max(1, _CHUNK // p.size)
    cubic = t * p**3
    for i in range(0, x.size, step):
        xs = x[i:i + step, None]
        out[i:i + step] = np.real(np.exp(1j * (xs * p + cubic)) @ f)
    if u.tail == "hold":
        a = edges[-1]
        tail_val = u.values[-1]
        out += np.array([np.real(tail_val * specfun.half_line_kernel(a, xv, t)) for xv in x])
    return out / math.pi


def airy_main_term(u: Profile, x):
    """Split u(t, x) for x < -t^{1/3} into t^{-1/3} Re[Ai(x t^{-1/3}) u~(t, y)],
    y = sqrt(-x/3t), and the residual."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = u.time
    if np.any(x >= -t ** (1.0 / 3.0)):
        raise DomainError("airy_main_term needs x < -t^{1/3}")
    z = x * t ** (-1.0 / 3.0)
    y = np.sqrt(-x / (3 * t))
    main = t ** (-1.0 / 3.0) * np.real(specfun.airy_fock_array(z) * u(y))
    full = reconstruct_physical(u, x)
    return main, full - main


# ---------------------------------------------------------------- file format

HEADER = ["t", "p_max", "n_nodes", "limit_re", "limit_im", "tail", "grid"]


def _fmt(v):
    return repr(float(v))


def dumps_profile(u: Profile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    w.writerow([_fmt(u.time), _fmt(u.grid.p_max), len(u.grid), _fmt(u.limit_at_zero.real),
                _fmt(u.limit_at_zero.imag), u.tail, u.grid.spec])
    w.writerow(["p", "re", "im"])
    for p, v in zip(u.grid.nodes, u.values):
        w.writerow([_fmt(p), _fmt(v.real), _fmt(v.imag)])
    return buf.getvalue()


def loads_profile(text: str) -> Profile:
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 3:
        raise ValueError("profile file too short")
    head = dict(zip(rows[0], rows[1]))
    try:
        t = float(head["t"])
        p_max = float(head["p_max"])
        n = int(head["n_nodes"])
        limit = complex(float(head["limit_re"]), float(head["limit_im"]))
    except KeyError as exc:
        raise ValueError(f"profile header missing {exc.args[0]!r}") from None
    data = np.array([[float(c) for c in r] for r in rows[3:] if r], dtype=float)
    if data.shape != (n, 3):
        raise ValueError(f"expected {n} rows of p,re,im; found {data.shape[0]}")
    spec = head.get("grid", "")
    grid = None
    if spec:
        grid = FrequencyGrid.from_spec(spec)
        if len(grid) != n or not np.allclose(grid.nodes, data[:, 0], rtol=1e-12, atol=0):
            grid = None
    if grid is None:
        grid = FrequencyGrid.from_nodes(data[:, 0], p_max)
    return Profile(grid, data[:, 1] + 1j * data[:, 2], limit, t, head.get("tail") or "zero")


def save_profile(u: Profile, path):
    from .io import atomic_write_text
    atomic_write_text(path, dumps_profile(u))


def load_profile(path) -> Profile:
    with open(path) as fh:
        return loads_profile(fh.read())


def physical_on_lattice(u: Profile, margin=60.0, rel=1e-13, oversample=4):
    """u(t, x_j) on the uniform periodic grid dual to a frequency lattice that
    resolves |x| <= 3 t P^2 + margin (P = effective support); returns sorted
    (x, u).  Exact up to the trapezoid error in p and periodic wrap-around."""
    from scipy import fft as sfft

    t = u.time
    end = u.support_end(rel)
    if end == 0:
        x = np.linspace(-margin, margin, 16)
        return x, np.zeros_like(x)
    P = float(u.grid.nodes[end - 1]) if end < len(u.grid) else u.grid.p_max
    if u.tail == "hold":
        warnings.warn("non-compact profile truncated at p_max", TailTruncationWarning, stacklevel=2)
    dp = math.pi / (2 * (3 * t * P * P + margin))
    K = int(math.ceil(P / dp))
    pk = dp * np.arange(K + 1)
    g = np.exp(1j * t * pk**3) * u(pk)
    g[0] = u.limit_at_zero.real
    n = sfft.next_fast_len(oversample * 2 * K)
    F = np.zeros(n, complex)
    F[:K + 1] = g
    F[n - K:] = np.conj(g[1:][::-1])
    vals = np.real(sfft.ifft(F)) * n * dp / (2 * math.pi)
    dx = 2 * math.pi / (n * dp)
    j = np.arange(n)
    j = np.where(j < n // 2, j, j - n)
    order = np.argsort(j)
    return j[order] * dx, vals[order]
