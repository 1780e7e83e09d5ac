import math

import numpy as np
import pytest

from mkdvlab import evolve, nonlin
from mkdvlab.errors import DomainError, InstabilityError
from mkdvlab.fit import fit_power_law
from mkdvlab.profile import FrequencyGrid, Profile, e_norm
from mkdvlab.suites import small_data


@pytest.fixture(scope="module")
def chis():
    return {n: evolve.build_chi(n) for n in (1, 2, 4, 8, 16)}


@pytest.fixture(scope="module")
def runs():
    out = {}
    for d in (0.05, 0.1, 0.2):
        out[d] = evolve.integrate(small_data(d), evolve.EvolveOptions(t_end=100.0))
    return out


# ---------------------------------------------------------------- cutoffs


def test_alpha_1(chis):
    c = chis[1]
    assert math.e - 1 <= c.alpha_n <= math.e
    assert abs(c.alpha_n - 2.51) <= 0.02
    assert c.residual <= 1e-12
    # the matching equation itself
    assert abs(1 - math.log(c.alpha_n) - math.exp(-c.alpha_n)) <= 1e-12


def test_alpha_bracket(chis):
    for n, c in chis.items():
        assert n * math.exp(n) - 1 <= c.alpha_n <= n * math.exp(n)


def test_chi_shape(chis):
    p = np.linspace(0, 40, 2001)
    for c in chis.values():
        v = c(p)
        assert abs(c(np.array([0.0]))[0] - 1) <= 1e-6
        assert np.all(v > 0) and np.all(v <= 1 + 1e-15)
        assert np.all(np.diff(v) <= 1e-15)
        assert np.allclose(c(-p), v, rtol=0, atol=1e-15)
    # pointwise convergence to 1
    q = np.array([0.5, 3.0, 10.0])
    vals = [chis[n](q) for n in (1, 2, 4, 8, 16)]
    for a, b in zip(vals, vals[1:]):
        assert np.all(b >= a - 1e-15)
    assert np.all(vals[-1] >= 1 - 1e-6)


def test_chi_log_derivative_sequence(chis):
    sups = [chis[n].sup_log_derivative() for n in (2, 4, 8, 16)]
    assert all(a > b for a, b in zip(sups, sups[1:]))
    # O(1/n): n * sup stays within a factor 2
    scaled = [n * s for n, s in zip((2, 4, 8, 16), sups)]
    assert max(scaled) / min(scaled) <= 2


def test_build_chi_rejects():
    with pytest.raises(DomainError):
        evolve.build_chi(0)


# ---------------------------------------------------------------- rhs


def test_rhs_zero():
    z = Profile.zero(FrequencyGrid.hybrid(p_max=4.0))
    assert np.all(evolve.rhs(z, evolve.EvolveOptions()) == 0)


def test_rhs_sign_flip():
    u = small_data(0.1)
    a = evolve.rhs(u, evolve.EvolveOptions(epsilon=1))
    b = evolve.rhs(u, evolve.EvolveOptions(epsilon=-1))
    assert np.array_equal(a, -b)


def test_rhs_stationary_branch_constant_band():
    # u~ = c on a band: at large tau the hybrid rhs is -(eps/4pi^2) times the
    # stationary-phase main terms, up to the remainder envelope
    g = FrequencyGrid.uniform(6.0, 3000)
    c = 0.1
    u = Profile(g, np.where(g.nodes <= 5.0, c, 0.0) + 0j, c, 10.0)
    opts = evolve.EvolveOptions(rhs_mode="hybrid")
    d = evolve.rhs(u, opts)
    p = g.nodes
    sel = (p**3 * u.time > 50) & (p < 1.5)
    main = -nonlin.eval_stationary_phase(u, p[sel]) / (4 * math.pi**2)
    env = nonlin.remainder_envelope(p[sel], u.time, e_norm(u).e_norm) / (4 * math.pi**2)
    assert np.all(np.abs(d[sel] - main) <= env)


def test_rhs_cutoff_multiplies():
    u = small_data(0.1)
    chi = evolve.build_chi(1)
    a = evolve.rhs(u, evolve.EvolveOptions())
    b = evolve.rhs(u, evolve.EvolveOptions(cutoff=chi))
    assert np.allclose(b, a * chi(u.grid.nodes), rtol=1e-12, atol=0)


def test_hybrid_close_to_direct():
    # the evolved profiles differ by a few percent of the nonlinear change
    u = small_data(0.5)
    ends = {}
    for mode in ("hybrid", "direct"):
        tr = evolve.integrate(u, evolve.EvolveOptions(t_end=4.0, rhs_mode=mode))
        ends[mode] = tr.snapshots[-1].values
    change = np.max(np.abs(ends["direct"] - u.values))
    assert np.max(np.abs(ends["hybrid"] - ends["direct"])) <= 0.05 * change


# ---------------------------------------------------------------- integrate


def test_zero_trajectory():
    z = Profile.zero(FrequencyGrid.hybrid(p_max=4.0))
    tr = evolve.integrate(z, evolve.EvolveOptions(t_end=5.0, save_times=(2.0, 3.0)))
    assert all(np.all(s.values == 0) for s in tr.snapshots)
    assert np.all(np.diff(tr.times) > 0)
    assert evolve.weighted_l2_drift(tr, evolve.build_chi(1)) == 0


def test_save_times_hit_exactly():
    tr = evolve.integrate(small_data(0.05), evolve.EvolveOptions(t_end=4.0, save_times=(1.5, 2.0, 3.3)))
    assert list(tr.times) == [1.0, 1.5, 2.0, 3.3, 4.0]
    assert tr.at(3.3).time == 3.3


def test_step_schedule():
    opts = evolve.EvolveOptions(t_end=50.0, dt0=0.01, growth=1.05, step_fraction=0.02)
    t = np.array(evolve.step_schedule(1.0, opts))
    dt = np.diff(t)
    assert t[0] == 1.0 and t[-1] == 50.0
    # a last step may absorb a sliver of under a quarter step
    assert np.all(dt <= 1.25 * 0.02 * t[:-1] * (1 + 1e-12))
    assert np.all(dt[:-1] <= 0.02 * t[:-2] * (1 + 1e-12))
    assert dt[0] == pytest.approx(0.01)


def test_rk_order():
    # smooth right-hand side (lattice route at every node) on a uniform grid
    g = FrequencyGrid.uniform(8.0, 2000)
    u0 = Profile.from_function(g, lambda p: 0.3 * np.exp(-p**2) * (1 + 0.5j * p) + 0j)
    cs = (0.04, 0.02, 0.01, 0.005)
    finals = {}
    for c in cs:
        opts = evolve.EvolveOptions(t_end=4.0, dt0=1.0, growth=1.0, step_fraction=c,
                                    rhs_mode="direct")
        finals[c] = evolve.integrate(u0, opts).snapshots[-1].values
    d = [np.max(np.abs(finals[a] - finals[b])) for a, b in zip(cs, cs[1:])]
    # successive differences shrink by 2^4 per halving (geometric mean of two halvings;
    # single ratios scatter because the oscillating phase is only just resolved at c = 0.04)
    assert math.sqrt(d[0] / d[2]) >= 12


def test_small_data_bound(runs):
    tr = runs[0.05]
    e = tr.column("e_norm")
    assert e.max() <= 2 * e[0]


def test_sup_bound_single_constant(runs):
    # sup|u~(t)| <= sup|u~(1)| + C (delta^3 + delta^5) with one C for all runs
    Cs = []
    for d, tr in runs.items():
        sp = tr.column("sup_profile")
        Cs.append((sp.max() - sp[0]) / (d**3 + d**5))
    C = max(Cs)
    assert C < 1.0
    for d, tr in runs.items():
        sp = tr.column("sup_profile")
        assert sp.max() <= sp[0] + C * (d**3 + d**5) + 1e-15


def test_time_derivative_bound(runs):
    # max|d_t u~| t / e_norm^3 bounded by one constant, the same for all delta
    Cs = []
    for tr in runs.values():
        Cs.append(np.max(tr.column("max_dudt") * tr.column("t") / tr.column("e_norm") ** 3))
    assert max(Cs) < 1.0
    assert max(Cs) / min(Cs) <= 1.05


def test_vector_field_growth(runs):
    slopes = []
    for d, tr in runs.items():
        fit = fit_power_law(tr.column("t"), tr.column("I_norm"), (1.0, 100.0))
        slopes.append(fit.slope)
        assert 0 <= fit.slope <= 10 * d**2
    assert slopes[0] < slopes[1] < slopes[2]


def test_vector_field_zero_and_flags():
    z = Profile.zero(FrequencyGrid.hybrid())
    samples, flagged = evolve.vector_field_I(z, np.zeros(len(z.grid), complex))
    assert np.all(samples == 0)
    assert np.all(flagged == (z.grid.nodes < 1e-3))


def test_guard_raises():
    u0 = small_data(20.0)
    with pytest.raises(InstabilityError):
        evolve.integrate(u0, evolve.EvolveOptions(t_end=3.0, dt0=0.5, growth=1.0, step_fraction=0.5))


def test_backward_rejected():
    with pytest.raises(DomainError):
        evolve.integrate(small_data(0.05), evolve.EvolveOptions(t_end=0.5))


def test_options_validation():
    with pytest.raises(DomainError):
        evolve.EvolveOptions(epsilon=0)
    with pytest.raises(DomainError):
        evolve.EvolveOptions(tau_star=0)
    with pytest.raises(DomainError):
        evolve.EvolveOptions(rhs_mode="exact")


def test_weighted_l2_conservation():
    chi = evolve.build_chi(1)
    g = FrequencyGrid.uniform(8.0, 3000)
    u0 = Profile.from_function(g, lambda p: 0.3 * np.exp(-p**2) * (1 + 0.5j * p) + 0j)
    opts = evolve.EvolveOptions(t_end=4.0, dt0=1.0, growth=1.0, step_fraction=0.02,
                                cutoff=chi, rhs_mode="direct", save_every_step=True)
    tr = evolve.integrate(u0, opts)
    assert evolve.weighted_l2_drift(tr, chi) <= 1e-6
