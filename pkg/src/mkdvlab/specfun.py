"""Airy-Fock function and the half-line cubic-phase kernel.

The complex Airy-Fock function is

    Ai(z) = (1/pi) * int_0^inf exp(i p z + i p^3) dp,

whose real part is the classical Airy function up to a rescaling.  The
integral is only conditionally convergent on the real axis, so it is
evaluated by Gauss-Legendre panels on a real segment that covers the
stationary point, followed by a ray at angle pi/6 on which the integrand
decays like exp(-r^3).
"""

import math

import numpy as np

from .errors import DomainError

RAY_ANGLE = math.pi / 6
RAY = complex(math.cos(RAY_ANGLE), math.sin(RAY_ANGLE))

# quadrature knobs
PANEL_ORDER = 20
PHASE_PER_PANEL = 1.0
DECAY_CUTOFF = 46.0  # stop the ray once |integrand| < exp(-DECAY_CUTOFF)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(PANEL_ORDER)


def _panel_nodes(edges):
    """Gauss-Legendre nodes/weights on consecutive panels given by `edges`."""
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * _GL_X[None, :]
    weights = half * _GL_W[None, :]
    return nodes.ravel(), weights.ravel()


def _real_segment(s0, s1, z):
    if s1 <= s0:
        return np.empty(0), np.empty(0)
    # total phase variation bounds the panel count
    total = abs(z) * (s1 - s0) + (s1**3 - s0**3)
    n = max(2, int(math.ceil(total / PHASE_PER_PANEL)))
    return _panel_nodes(np.linspace(s0, s1, n + 1))


def _ray_length(s1, z):
    # Im(phase) along s1 + r e^{i pi/6} is increasing; find where it exceeds the cutoff
    def im_phase(r):
        return 0.5 * r * (z + 3 * s1 * s1) + 1.5 * math.sqrt(3) * s1 * r * r + r**3

    r = 1.0
    while im_phase(r) < DECAY_CUTOFF:
        r *= 1.5
    return r


def _ray_segment(s1, z):
    r_end = _ray_length(s1, z)
    # phase speed along the ray is bounded by |z| + 3|s|^2
    speed = abs(z) + 3 * (s1 + r_end) ** 2
    n = max(4, int(math.ceil(speed * r_end / (4 * PHASE_PER_PANEL))))
    # cluster panels near the start, where the integrand is largest
    edges = r_end * np.linspace(0.0, 1.0, n + 1) ** 1.5
    r, w = _panel_nodes(edges)
    return s1 + r * RAY, w * RAY


def cubic_phase_integral(s0, z, power=0):
    """Return int_{s0}^inf s**power * exp(i (s z + s^3)) ds for s0 >= 0."""
    if not (math.isfinite(z) and math.isfinite(s0)):
        raise DomainError(f"non-finite argument z={z!r}, s0={s0!r}")
    if s0 < 0:
        raise DomainError("lower limit must be non-negative")
    stationary = math.sqrt(max(-z, 0.0) / 3.0)
    s1 = max(s0, stationary + 0.5) if z < 0 else s0
    total = 0j
    s_re, w_re = _real_segment(s0, s1, z)
    if s_re.size:
        total += np.sum(w_re * s_re**power * np.exp(1j * (s_re * z + s_re**3)))
    s_ray, w_ray = _ray_segment(s1, z)
    total += np.sum(w_ray * s_ray**power * np.exp(1j * (s_ray * z + s_ray**3)))
    return complex(total)


def half_line_kernel(a, x, t, power=0):
    """int_a^inf p**power * exp(i p x + i p^3 t) dp  (a >= 0, t > 0).

    Reduced to `cubic_phase_integral` by p = s t^{-1/3}.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    scale = t ** (-1.0 / 3.0)
    return scale ** (power + 1) * cubic_phase_integral(a / scale, x * scale, power)


def _check(z):
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"non-finite argument {z!r}")
    return z


def airy_fock(z):
    """Complex Airy-Fock function (1/pi) int_0^inf exp(ipz + ip^3) dp."""
    return cubic_phase_integral(0.0, _check(z)) / math.pi


def airy_fock_deriv(z):
    """Derivative (1/pi) int_0^inf i p exp(ipz + ip^3) dp."""
    return 1j * cubic_phase_integral(0.0, _check(z), power=1) / math.pi


def airy_fock_array(z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.array([airy_fock(v) for v in z])


def airy_fock_deriv_array(z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.array([airy_fock_deriv(v) for v in z])
