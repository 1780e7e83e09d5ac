import math

import mpmath
import numpy as np
import pytest
from scipy import special

from mkdvlab import specfun
from mkdvlab.errors import DomainError
from mkdvlab.fit import fit_power_law

C3 = 3 ** (-1 / 3)


def test_real_part_is_scaled_classical_airy():
    z = np.linspace(-20, 20, 401)
    ai = specfun.airy_fock_array(z)
    ref = C3 * special.airy(C3 * z)[0]
    assert np.max(np.abs(ai.real - ref)) <= 1e-10


def test_imag_part_matches_scorer_gi():
    # (1/pi) int_0^inf sin(pz + p^3) dp = 3^{-1/3} Gi(3^{-1/3} z)
    for z in (-30.0, -7.5, -1.0, 0.0, 2.0, 12.0, 45.0):
        ref = C3 * float(mpmath.scorergi(C3 * z))
        assert abs(specfun.airy_fock(z).imag - ref) <= 1e-10


def test_value_at_zero_closed_form():
    ref = math.gamma(4 / 3) * complex(math.cos(math.pi / 6), math.sin(math.pi / 6)) / math.pi
    assert abs(specfun.airy_fock(0.0) - ref) <= 1e-12
    # the real part is 3^{-1/3} Ai(0)
    assert abs(ref.real - C3 * special.airy(0.0)[0]) <= 1e-14


def test_derivative_at_zero_closed_form():
    ref = 1j * complex(math.cos(math.pi / 3), math.sin(math.pi / 3)) * math.gamma(2 / 3) / (3 * math.pi)
    assert abs(specfun.airy_fock_deriv(0.0) - ref) <= 1e-10
    assert abs(specfun.airy_fock_deriv(0.0).real - 3 ** (-2 / 3) * special.airy(0.0)[1]) <= 1e-10


@pytest.mark.parametrize("z", [-40.0, -12.3, -1.0, 0.5, 3.0, 20.0])
def test_derivative_matches_finite_difference(z):
    errs = []
    for h in (1e-2, 5e-3):
        fd = (specfun.airy_fock(z + h) - specfun.airy_fock(z - h)) / (2 * h)
        errs.append(abs(fd - specfun.airy_fock_deriv(z)))
    assert errs[1] <= 1e-4
    assert errs[1] < errs[0] / 3  # second order


def test_derivative_real_part_classical():
    z = np.linspace(-50, 50, 101)
    d = specfun.airy_fock_deriv_array(z)
    assert np.max(np.abs(d.real - C3**2 * special.airy(C3 * z)[1])) <= 1e-8


def test_decay_slopes():
    z = np.linspace(5, 50, 200)
    s0 = fit_power_law(z, np.abs(specfun.airy_fock_array(-z)), (5, 50)).slope
    s1 = fit_power_law(z, np.abs(specfun.airy_fock_deriv_array(-z)), (5, 50)).slope
    assert abs(s0 + 0.25) <= 0.05
    assert abs(s1 - 0.25) <= 0.05


def test_monotone_decay_right_half_line():
    z = np.linspace(2, 50, 300)
    m = np.abs(specfun.airy_fock_array(z))
    assert np.all(np.diff(m) < 0)
    assert m[-1] < 1e-2


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
def test_non_finite_rejected(bad):
    with pytest.raises(DomainError):
        specfun.airy_fock(bad)
    with pytest.raises(DomainError):
        specfun.airy_fock_deriv(bad)


def test_half_line_kernel_scaling_and_split():
    # int_0^inf = int_0^a + int_a^inf; the first piece by brute-force quadrature
    from scipy import integrate
    a, x, t = 0.7, -3.0, 2.0
    head = integrate.quad(lambda p: math.cos(p * x + p**3 * t), 0, a, epsabs=1e-14)[0] \
        + 1j * integrate.quad(lambda p: math.sin(p * x + p**3 * t), 0, a, epsabs=1e-14)[0]
    full = specfun.half_line_kernel(0.0, x, t)
    assert abs(head + specfun.half_line_kernel(a, x, t) - full) <= 1e-12
    # t = 1 reduces to pi * Ai
    assert abs(specfun.half_line_kernel(0.0, x, 1.0) - math.pi * specfun.airy_fock(x)) <= 1e-13
    with pytest.raises(DomainError):
        specfun.half_line_kernel(0.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        specfun.cubic_phase_integral(-1.0, 0.0)
