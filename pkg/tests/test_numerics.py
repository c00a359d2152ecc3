import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.hermite_e import hermegauss

from gainloss.numerics import (BracketError, Grid2D, GridFunction, NonConvergenceError,
                               NumericalError, bisect, default_grid, expect_eps, expect_joint,
                               fixed_point, gauss_hermite, interp, load_grid_function,
                               save_grid_function)
from gainloss.preferences import PreferenceParams, weight_contemp
from gainloss.processes import TABLE1, ProcessParams, cdf_eps, stationary_log_y


def double_factorial_moment(k):
    # E[Z^k] for standard normal
    return 0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2, dtype=float))) if k else 1.0


def test_gauss_hermite_examples():
    r = gauss_hermite(1)
    assert list(r.nodes) == [0.0] and list(r.weights) == [1.0]
    r = gauss_hermite(21)
    assert r.expect(r.nodes ** 2) == pytest.approx(1.0, abs=1e-13)
    assert r.expect(r.nodes ** 4) == pytest.approx(3.0, abs=1e-12)
    s = 0.053
    assert r.expect(np.exp(s * r.nodes)) == pytest.approx(math.exp(s * s / 2), abs=1e-12)
    for bad in (0, 201):
        with pytest.raises(ValueError):
            gauss_hermite(bad)


@pytest.mark.parametrize("order", [2, 5, 21, 41, 80, 200])
def test_rule_invariants(order):
    r = gauss_hermite(order)
    assert abs(r.weights.sum() - 1) < 1e-13
    assert abs(r.raw_weights.sum() - math.sqrt(math.pi)) < 1e-12
    assert np.array_equal(r.nodes, -r.nodes[::-1])
    assert np.all(r.weights > 0)


@pytest.mark.parametrize("order", [3, 10, 21, 41])
def test_matches_numpy_rule(order):
    # independent construction of the same rule
    x, w = hermegauss(order)
    w = w / w.sum()
    r = gauss_hermite(order)
    assert np.max(np.abs(r.nodes - x)) < 1e-13 * max(1, np.abs(x).max())
    assert np.max(np.abs(r.weights - w) / w) < 1e-9


@pytest.mark.parametrize("order", [1, 2, 5, 10, 21])
def test_polynomial_exactness(order):
    r = gauss_hermite(order)
    for k in range(2 * order):
        got = r.expect(r.nodes ** k)
        want = double_factorial_moment(k)
        if want == 0:
            assert abs(got) < 1e-12 * max(1.0, double_factorial_moment(k + 1))
        else:
            assert got == pytest.approx(want, rel=1e-12)


def test_expect_eps_examples():
    r = gauss_hermite(21)
    assert expect_eps(r, lambda x: x, TABLE1) == pytest.approx(math.exp(0.058 + 0.053 ** 2 / 2), abs=1e-10)
    assert expect_eps(r, lambda x: np.ones_like(x), TABLE1) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(NumericalError) as ei:
        expect_eps(r, lambda x: np.where(x > 1.2, np.inf, x), TABLE1)
    assert ei.value.node > 1.2


def test_expect_eps_monte_carlo():
    prefs = PreferenceParams(b=1, lam=2)
    f = lambda x: x ** -4 * weight_contemp(prefs, cdf_eps(TABLE1, x))
    q = expect_eps(gauss_hermite(21), f, TABLE1)
    rng = np.random.default_rng(np.random.Philox(2024))
    draws = f(np.exp(0.058 + 0.053 * rng.standard_normal(10 ** 7)))
    se = draws.std() / math.sqrt(draws.size)
    assert abs(q - draws.mean()) < 3 * se


def test_expect_joint_examples():
    r = gauss_hermite(21)
    for law in ("ar1", "iid_ratio"):
        assert expect_joint(r, lambda e, ly: np.ones_like(e * ly), TABLE1, 2.0, law) == pytest.approx(1.0, abs=1e-14)
        assert expect_joint(r, lambda e, ly: e + 0 * ly, TABLE1, 2.0, law) == pytest.approx(
            math.exp(0.058 + 0.053 ** 2 / 2), rel=1e-12)
    k, sy = TABLE1.kappa, TABLE1.sigma_y
    got = expect_joint(r, lambda e, ly: np.exp(-ly) + 0 * e, TABLE1, k, "ar1")
    assert got == pytest.approx(math.exp(-k + sy ** 2 / 2), rel=1e-12)


@settings(max_examples=30)
@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-2, max_value=2),
       st.floats(min_value=0, max_value=4))
def test_expect_joint_separable(a, c, logy_now):
    r = gauss_hermite(21)
    g = lambda e: e ** a
    k = lambda ly: np.exp(c * ly)
    joint = expect_joint(r, lambda e, ly: g(e) * k(ly), TABLE1, logy_now, "ar1")
    from gainloss.processes import next_log_y
    one_d = r.expect(k(next_log_y(TABLE1, logy_now, r.nodes, "ar1")))
    assert joint == pytest.approx(expect_eps(r, g, TABLE1) * one_d, rel=1e-12)


# ---------------------------------------------------------------- grids

def test_default_grid():
    g = default_grid(TABLE1)
    assert g.shape == (41, 41)
    assert g.eps_axis[0] == pytest.approx(math.exp(0.058 - 4 * 0.053))
    assert g.eps_axis[-1] == pytest.approx(math.exp(0.058 + 4 * 0.053))
    sd = stationary_log_y(TABLE1).sd
    assert g.logy_axis[0] == pytest.approx(max(0.0, 2.816 - 4 * sd))
    assert g.logy_axis[-1] == pytest.approx(2.816 + 4 * sd)
    low = default_grid(ProcessParams(kappa=0.2))
    assert low.logy_axis[0] == 0.0


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(np.array([1.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        Grid2D(np.array([-1.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        Grid2D(np.array([1.0, 2.0]), np.array([-0.5, 1.0]))


def _bilinear_gf(a=1.0, b=2.0, c=-0.5):
    g = Grid2D(np.array([0.8, 0.9, 1.1, 1.3]), np.array([0.0, 1.0, 2.5]))
    E, L = np.meshgrid(g.eps_axis, g.logy_axis, indexing="ij")
    return GridFunction(g, a + b * E + c * L)


def test_interp_examples():
    gf = _bilinear_gf()
    assert interp(gf, 0.9, 1.0) == gf.values[1, 1]
    assert interp(gf, 1.0, 1.75) == pytest.approx(1 + 2 * 1.0 - 0.5 * 1.75, abs=1e-12)
    before = gf.clamp_count
    assert interp(gf, 5.0, 2.5) == gf.values[-1, -1]
    assert gf.clamp_count == before + 1
    with pytest.raises(ValueError):
        GridFunction(gf.grid, np.zeros((2, 2)))
    with pytest.raises(NumericalError):
        GridFunction(gf.grid, np.full(gf.grid.shape, np.nan))


@given(st.floats(min_value=0.5, max_value=1.5), st.floats(min_value=-1, max_value=3),
       st.lists(st.floats(min_value=-100, max_value=100), min_size=12, max_size=12))
def test_interp_bounded_by_corners(e, ly, vals):
    g = Grid2D(np.array([0.8, 0.9, 1.1, 1.3]), np.array([0.0, 1.0, 2.5]))
    gf = GridFunction(g, np.array(vals).reshape(4, 3))
    v = interp(gf, e, ly)
    ec, lc = np.clip(e, 0.8, 1.3), np.clip(ly, 0.0, 2.5)
    i = min(np.searchsorted(g.eps_axis, ec, side="right") - 1, 2)
    j = min(np.searchsorted(g.logy_axis, lc, side="right") - 1, 1)
    corners = gf.values[i:i + 2, j:j + 2]
    assert corners.min() - 1e-12 <= v <= corners.max() + 1e-12


def test_cache_roundtrip(tmp_path):
    gf = _bilinear_gf()
    gf.values[0, 0] = 1 / 3
    gf.meta["tol"] = 1e-10
    save_grid_function(gf, tmp_path / "h")
    back = load_grid_function(tmp_path / "h")
    assert np.array_equal(back.values, gf.values)
    assert np.array_equal(back.grid.eps_axis, gf.grid.eps_axis)
    assert back.meta == gf.meta


# ---------------------------------------------------------------- fixed point and roots

def test_fixed_point_affine():
    res = fixed_point(lambda v: 0.5 * v + 1, np.zeros(3), tol=1e-12)
    assert np.allclose(res.value, 2.0, atol=1e-12)
    assert np.allclose(res.contraction_ratios, 0.5, atol=1e-9)


def test_fixed_point_identity():
    v, it, hist = fixed_point(lambda v: v, np.array([1.0, -2.0]))
    assert it == 1 and hist == [0.0]


def test_fixed_point_nonconvergence():
    with pytest.raises(NonConvergenceError) as ei:
        fixed_point(lambda v: v + 1, np.zeros(2), max_iter=5)
    assert ei.value.last_residual == 1.0
    with pytest.raises(ValueError):
        fixed_point(lambda v: v, np.zeros(1), tol=0)


def test_bisect_examples():
    assert bisect(lambda x: x - 3, 0, 10) == pytest.approx(3, abs=1e-12)
    assert bisect(lambda x: x * x - 2, 0, 2, tol=1e-13) == pytest.approx(math.sqrt(2), abs=1e-13)
    with pytest.raises(BracketError):
        bisect(lambda x: x * x + 1, -1, 1)
