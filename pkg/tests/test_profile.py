import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from mkdvlab import profile as pr
from mkdvlab.errors import DomainError
from mkdvlab.fit import fit_envelope, fit_power_law
from mkdvlab.profile import FrequencyGrid, Profile, e_norm


@pytest.fixture(scope="module")
def grid():
    return FrequencyGrid.hybrid()


def gauss(p):
    return np.exp(-p**2) + 0j


# ---------------------------------------------------------------- grid


def test_hybrid_grid_shape(grid):
    assert np.all(np.diff(grid.nodes) > 0)
    assert np.mean(grid.nodes < grid.p_max / 100) >= 0.25


def test_grid_integrates_smooth_compact_functions(grid):
    def bump(p):
        s = np.clip(p / 5, 0, 1 - 1e-16)
        return np.where(p < 5, np.exp(-1 / (1 - s**2)), 0.0) * (1 + np.sin(3 * p))
    ref = integrate.quad(bump, 0, 5, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    assert abs(grid.integrate(bump(grid.nodes)) - ref) <= 1e-8 * abs(ref)


def test_grid_spec_round_trip(grid):
    again = FrequencyGrid.from_spec(grid.spec)
    assert np.array_equal(again.nodes, grid.nodes)
    u = FrequencyGrid.uniform(4.0, 100)
    assert np.array_equal(FrequencyGrid.from_spec(u.spec).nodes, u.nodes)


def test_grid_rejects_bad_nodes():
    with pytest.raises(ValueError):
        FrequencyGrid(np.array([1.0, 0.5, 2.0, 3.0]), np.ones(4), 3.0)


# ---------------------------------------------------------------- E norm


def test_e_norm_zero(grid):
    assert e_norm(Profile.zero(grid)).e_norm == 0


def test_e_norm_gaussian(grid):
    rep = e_norm(Profile.from_function(grid, gauss))
    exact = 1 + math.sqrt(0.5 * math.sqrt(math.pi / 2))
    assert abs(rep.e_norm - exact) <= 1e-4
    assert abs(rep.e_norm - 1.79162) <= 1e-4
    assert rep.e_norm == rep.sup_part + rep.deriv_part


def test_e_norm_sup_includes_jump(grid):
    u = Profile.from_function(grid, lambda p: 0.5 * np.exp(-p**2) + 0j, limit=2.0)
    assert e_norm(u).sup_part == 2.0


@pytest.mark.parametrize("lam", [1 / 8, 1.0, 8.0])
def test_e_norm_scaling_invariance(lam):
    # finer panels: at lam = 1/8 the profile is compressed by 2
    grid = FrequencyGrid.hybrid(panel_width=0.1)
    f = lambda p: np.exp(-p**2) * (1 + 0.5j * p)
    t = 2.0
    u = Profile.from_function(grid, f, time=lam * t)
    # u_lam(t, x) = lam^{1/3} u(lam t, lam^{1/3} x)  <=>  u~_lam(t, p) = u~(lam t, lam^{-1/3} p)
    u_lam = Profile.from_function(grid, lambda p: f(lam ** (-1 / 3) * p), time=t)
    assert abs(e_norm(u_lam).e_norm - e_norm(u).e_norm) <= 1e-6
    # the exact rescaling helper
    assert abs(e_norm(u.rescale(lam)).e_norm - e_norm(u).e_norm) <= 1e-12


def test_nonpositive_time_rejected(grid):
    with pytest.raises(DomainError):
        Profile.zero(grid, time=0.0)


def test_conjugate_symmetry(grid):
    u = Profile.from_function(grid, lambda p: np.exp(-p**2) * (1 + 1j * p))
    p = np.array([0.3, 1.7])
    assert np.allclose(u(-p), np.conj(u(p)), rtol=0, atol=1e-15)


# ---------------------------------------------------------------- Y^nu


def test_y_nu_zero(grid):
    assert pr.y_nu_norm(Profile.zero(grid), 0.45) == 0


def test_y_nu_matches_dense_reference(grid):
    nu = 0.45
    w = Profile.from_function(grid, lambda p: p * np.exp(-p**2) + 0j)
    d2 = integrate.quad(lambda p: ((1 - 2 * p**2) * np.exp(-p**2)) ** 2, 0, np.inf, epsabs=1e-15)[0]
    pd = np.linspace(1e-6, 16, 1_600_001)
    ex = nu / 3 - 1 / 6
    sup = np.max(pd ** (1 - nu) * np.exp(-pd**2) * pr.japanese(pd**3) ** ex)
    ref = math.sqrt(d2) + sup
    assert abs(pr.y_nu_norm(w, nu) - ref) <= 1e-5


def test_y_nu_resolution_doubling():
    f = lambda p: p * np.exp(-p**2) + 0j
    a = pr.y_nu_norm(Profile.from_function(FrequencyGrid.hybrid(), f), 0.45)
    b = pr.y_nu_norm(Profile.from_function(
        FrequencyGrid.hybrid(n_log_panels=48, panel_width=0.125), f), 0.45)
    assert abs(a - b) <= 1e-5


def test_y_nu_rejects(grid):
    with pytest.raises(DomainError):
        pr.y_nu_norm(Profile.from_function(grid, gauss), 0.45)
    w = Profile.from_function(grid, lambda p: p * np.exp(-p**2) + 0j)
    for nu in (0.0, 0.5, -0.1):
        with pytest.raises(DomainError):
            pr.y_nu_norm(w, nu)


# ---------------------------------------------------------------- R_alpha


def test_weight_sequence_validation():
    pr.WeightSequence(2.0, (1, 1, 0.5, 0.5))
    with pytest.raises(DomainError):
        pr.WeightSequence(1.0, (1, 1, 1, 0.5))  # a_1 > alpha a_3
    with pytest.raises(DomainError):
        pr.WeightSequence(1.0, (2, 1))
    with pytest.raises(DomainError):
        pr.WeightSequence(0.0, (1, 1))


def test_r_alpha_zero():
    assert pr.r_alpha_norm(np.zeros(64), 0.1, pr.WeightSequence.constant(5)) == 0


def test_r_alpha_band_limited_gaussian():
    # width-10 Gaussian: spectrum inside |p| <= 0.8, so the k = 0 term dominates
    x = np.linspace(-400, 400, 8192, endpoint=False)
    dx = x[1] - x[0]
    w = np.exp(-(x / 10) ** 2)
    l2 = math.sqrt(10 * math.sqrt(math.pi / 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        val = pr.r_alpha_norm(w, dx, pr.WeightSequence.constant(6))
    assert abs(val - l2) <= 1e-8


def test_r_alpha_warns_at_k_max():
    x = np.linspace(-40, 40, 2048, endpoint=False)
    w = np.exp(-(x**2)) * np.cos(3 * x)  # spectrum near |p| = 3 > 1
    with pytest.warns(pr.TruncationSuspectWarning):
        pr.r_alpha_norm(w, x[1] - x[0], pr.WeightSequence.constant(3))


# ---------------------------------------------------------------- physical space


def test_reconstruct_zero(grid):
    assert np.all(pr.reconstruct_physical(Profile.zero(grid), [-3.0, 0.0, 4.0]) == 0)


def test_reconstruct_gaussian_at_origin(grid):
    u = Profile.from_function(grid, gauss)
    ref = integrate.quad(lambda p: math.cos(p**3) * math.exp(-p**2), 0, 12,
                         epsabs=1e-14, limit=400)[0] / math.pi
    assert abs(pr.reconstruct_physical(u, [0.0])[0] - ref) <= 1e-8


def test_reconstruct_matches_conjugate_extension(grid):
    # the +-p discrete inverse FFT equals the half-line Re formula
    u = Profile.from_function(grid, lambda p: np.exp(-p**2) * (1 + 0.5j * p), time=2.0)
    x, ux = pr.physical_on_lattice(u)
    sel = np.abs(x) <= 30
    ref = pr.reconstruct_physical(u, x[sel])
    assert np.max(np.abs(ux[sel] - ref)) <= 1e-10


def test_reconstruct_warns_on_truncated_tail():
    g = FrequencyGrid.hybrid(p_max=2.0)
    u = Profile.from_function(g, gauss)
    with pytest.warns(pr.TailTruncationWarning):
        pr.reconstruct_physical(u, [0.0])


def test_right_side_decay(grid):
    u = Profile.from_function(grid, lambda p: np.exp(-p**2) * (1 + 0.5j * p))
    z = np.geomspace(10, 100, 200)
    slope = fit_power_law(z, np.abs(pr.reconstruct_physical(u, z)), (10, 100)).slope
    assert slope <= -0.75 + 0.1


def test_airy_main_term():
    g = FrequencyGrid.hybrid(p_max=6.0)
    with pytest.raises(DomainError):
        pr.airy_main_term(Profile.zero(g), [-0.5])
    main, res = pr.airy_main_term(Profile.zero(g), [-5.0])
    assert main[0] == 0 and res[0] == 0
    one = Profile(g, np.ones(len(g), complex), 1.0, 1.0, tail="hold")
    main, res = pr.airy_main_term(one, [-30.0])
    assert abs(res[0]) <= 0.5 * abs(main[0])
    # residual law for a smooth profile with a jump at 0
    u = Profile.from_function(g, lambda p: 1 + 0.5 * np.exp(-p**2) * (1 + 1j * p), tail="hold")
    x = np.geomspace(10, 200, 400)
    _, res = pr.airy_main_term(u, -x)
    assert fit_envelope(x, np.abs(res), (10, 200)).slope <= -0.3 + 0.05


def test_left_side_quarter_law():
    g = FrequencyGrid.hybrid(p_max=6.0)
    u = Profile.from_function(g, lambda p: 1 + 0.5 * np.exp(-p**2) * (1 + 1j * p), tail="hold")
    z = np.geomspace(10, 100, 400)
    slope = fit_envelope(z, np.abs(pr.reconstruct_physical(u, -z)), (10, 100)).slope
    assert abs(slope + 0.25) <= 0.05


def l6_cubed(u):
    x, v = pr.physical_on_lattice(u)
    return math.sqrt(np.sum(v**6) * (x[1] - x[0]))


def test_l6_bound(grid):
    # ||u(t)||_6^3 t^{5/6} / e_norm^3 for free evolution; the constant fitted at
    # the largest time bounds the earlier ones (it increases towards its
    # asymptotic value, so it is not constant to 20% on t in {1, 8, 64})
    u = Profile.from_function(grid, lambda p: np.exp(-(p / 4) ** 8) + 0j)
    ratios = []
    for t in (1.0, 8.0, 64.0):
        ut = u.replace(time=t)
        ratios.append(l6_cubed(ut) * t ** (5 / 6) / e_norm(ut).e_norm ** 3)
    C = ratios[-1]
    assert all(r <= C for r in ratios)
    assert C < 0.1


# ---------------------------------------------------------------- file format


def test_profile_file_round_trip(tmp_path, grid):
    u = Profile.from_function(grid, lambda p: np.exp(-p**2) * (1 + 0.3j * p), time=2.5,
                              limit=0.7 + 0.1j, tail="hold")
    path = tmp_path / "u.csv"
    pr.save_profile(u, path)
    v = pr.load_profile(path)
    assert np.array_equal(v.values, u.values) and v.limit_at_zero == u.limit_at_zero
    assert v.time == 2.5 and v.tail == "hold" and np.array_equal(v.grid.nodes, grid.nodes)
    assert pr.dumps_profile(v) == path.read_text()


def test_profile_file_errors():
    with pytest.raises(ValueError):
        pr.loads_profile("t\n1\n")
