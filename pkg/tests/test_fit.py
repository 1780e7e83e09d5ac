import numpy as np
import pytest

from mkdvlab.errors import FitError
from mkdvlab.fit import envelope_points, fit_envelope, fit_power_law


def test_exact_power():
    x = np.geomspace(1, 1e3, 50)
    f = fit_power_law(x, x**-0.25)
    assert f.slope == pytest.approx(-0.25, abs=1e-12)
    assert f.r_squared == pytest.approx(1.0, abs=1e-12)
    assert f.constant == pytest.approx(1.0, rel=1e-10)


def test_modulated_power():
    x = np.geomspace(1, 1e4, 400)
    y = x ** (-13 / 12) * (1 + 0.05 * np.sin(np.log(x)))
    assert fit_power_law(x, y, (10, 1e4)).slope == pytest.approx(-13 / 12, abs=0.03)


def test_pairs_input_and_window():
    x = np.geomspace(1, 100, 30)
    f = fit_power_law(np.column_stack([x, 3 * x**2]), window=(2, 50))
    assert f.slope == pytest.approx(2)
    assert f.window == (2.0, 50.0)
    assert f.n == np.count_nonzero((x >= 2) & (x <= 50))


def test_errors():
    x = np.geomspace(1, 100, 30)
    with pytest.raises(FitError):
        fit_power_law(x, x, (5.0, 5.0))
    with pytest.raises(FitError):
        fit_power_law(x, x, (1.0, 1.1))  # single point
    y = x.copy()
    y[3] = 0
    with pytest.raises(FitError):
        fit_power_law(x, y)
    with pytest.raises(FitError):
        fit_power_law(np.ones((4, 3)))


def test_envelope_of_oscillation():
    x = np.geomspace(1, 1e3, 50000)
    y = x**-0.5 * np.abs(np.cos(x))
    bx, by = envelope_points(x, y, (1, 1e3))
    assert np.all(by <= bx**-0.5 + 1e-15)
    assert fit_envelope(x, y, (30, 1e3)).slope == pytest.approx(-0.5, abs=0.03)
