"""Power-law fits on log-log data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError

MIN_SAMPLES = 8


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    n: int = 0

    @property
    def constant(self):
        return float(np.exp(self.intercept))

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "window": list(self.window), "n": self.n}


def fit_power_law(x, y=None, window=None, min_samples=MIN_SAMPLES) -> FitResult:
    """OLS of ln y on ln x for samples with x inside `window`.

    Accepts fit_power_law(pairs, window=...) or fit_power_law(x, y, window)."""
    if y is None:
        arr = np.asarray(x, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise FitError("samples must be (x, y) pairs")
        x, y = arr[:, 0], arr[:, 1]
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if window is None:
        window = (float(np.min(x)), float(np.max(x))) if x.size else (0.0, 0.0)
    lo, hi = window
    if not lo < hi:
        raise FitError(f"empty fit window {window}")
    sel = (x >= lo) & (x <= hi)
    xs, ys = x[sel], y[sel]
    if xs.size < min_samples:
        raise FitError(f"need at least {min_samples} samples in window {window}, got {xs.size}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("power-law fit needs strictly positive values")
    lx, ly = np.log(xs), np.log(ys)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)),
                     (float(lo), float(hi)), int(xs.size))


def envelope_points(x, y, window, n_bins=24):
    """Maximum of y in each of `n_bins` logarithmic bins of x over `window`
    (the upper envelope of an oscillating, decaying quantity)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    edges = np.geomspace(window[0], window[1], n_bins + 1)
    bx, by = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (x >= a) & (x < b) & (y > 0)
        if np.any(sel):
            i = np.argmax(np.where(sel, y, -np.inf))
            bx.append(x[i])
            by.append(y[i])
    return np.array(bx), np.array(by)


def fit_envelope(x, y, window, n_bins=24, min_samples=MIN_SAMPLES) -> FitResult:
    bx, by = envelope_points(x, y, window, n_bins)
    return fit_power_law(bx, by, window, min_samples)
