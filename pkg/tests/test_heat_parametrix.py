import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from eqindex.errors import DomainError, FitError
from eqindex.heat_parametrix import (
    BorelData,
    ModelGeometry,
    asymptotic_constant_term,
    borel_data,
    borel_sum,
    bump,
    curved_potential_series,
    estimate_bound_sequence,
    heat_residual_order,
    kernel_residual,
    partial_sum,
    q_t,
    raw_bound_sequence,
    recursion_defect,
    solve_theta_recursion,
)

SMALL_T = np.geomspace(0.005, 0.05, 8)


@pytest.fixture(scope="module")
def potential_table():
    return solve_theta_recursion(ModelGeometry(2, "flat-plus-potential", c=1.0), 20)


# -- recursion ---------------------------------------------------------------------

def test_flat_coefficients_vanish():
    tb = solve_theta_recursion(ModelGeometry(3), 6)
    assert np.all(tb.theta[0] == 1.0)
    assert np.all(tb.theta[1:] == 0.0)


@pytest.mark.parametrize("c", [1.0, -0.7, 2.5])
def test_flat_plus_potential_exponential(c):
    tb = solve_theta_recursion(ModelGeometry(2, "flat-plus-potential", c=c), 10)
    for i in range(11):
        assert np.max(np.abs(tb.theta[i] - (-c) ** i / math.factorial(i))) < 1e-9


def test_doubling_potential_doubles_theta1():
    a = solve_theta_recursion(ModelGeometry(2, "flat-plus-potential", c=0.3), 1)
    b = solve_theta_recursion(ModelGeometry(2, "flat-plus-potential", c=0.6), 1)
    assert np.allclose(b.theta[1], 2 * a.theta[1], rtol=0, atol=1e-15)


@pytest.mark.parametrize("profile,sign", [("sphere", 1), ("hyperbolic", -1)])
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_theta1_at_origin_is_scalar_over_six(profile, sign, n):
    tb = solve_theta_recursion(ModelGeometry(n, "radial-curved", profile=profile), 2)
    assert tb.theta_at(1, 0.0) == pytest.approx(sign * n * (n - 1) / 6, abs=1e-14)


@pytest.mark.parametrize("profile,c", [("sphere", -1.0), ("hyperbolic", 1.0)])
def test_three_dimensional_space_forms(profile, c):
    # conjugation by J^{1/2} turns the 3-dim space-form Laplacian into flat + c
    tb = solve_theta_recursion(ModelGeometry(3, "radial-curved", profile=profile), 10)
    for i in range(11):
        assert np.max(np.abs(tb.theta[i] - (-c) ** i / math.factorial(i))) < 1e-12


def _sympy_potential(profile, n):
    r = sp.symbols("r", positive=True)
    s = sp.sin(r) if profile == "sphere" else sp.sinh(r)
    l = (n - 1) * sp.log(s / r)
    W = sp.diff(l, r, 2) / 2 + sp.diff(l, r) ** 2 / 4 + (n - 1) * sp.diff(l, r) / (2 * r)
    return r, W


@pytest.mark.parametrize("profile", ["sphere", "hyperbolic"])
def test_potential_series_matches_closed_form(profile):
    n = 4
    r, W = _sympy_potential(profile, n)
    P = curved_potential_series(profile, n)
    for x in (0.1, 0.5, 1.0, 1.5):
        assert P(x * x) == pytest.approx(float(W.subs(r, x)), abs=1e-13)


@pytest.mark.parametrize("profile", ["sphere", "hyperbolic"])
def test_theta_matches_symbolic_recursion_in_r(profile):
    # independent route: work in r with the full radial operator on truncated Taylor polynomials
    n, order = 4, 24
    r, W = _sympy_potential(profile, n)
    Wp = sp.series(W, r, 0, order).removeO()
    u = sp.symbols("u", positive=True)
    theta = [sp.Integer(1)]
    for i in range(1, 4):
        g = theta[-1]
        Bg = sp.expand(-sp.diff(g, r, 2) - (n - 1) / r * sp.diff(g, r) + Wp * g)
        Bg = sum(Bg.coeff(r, k) * r**k for k in range(order - 2 * i))
        theta.append(sp.expand(-sp.integrate(u ** (i - 1) * Bg.subs(r, r * u), (u, 0, 1))))
    tb = solve_theta_recursion(ModelGeometry(n, "radial-curved", profile=profile), 3)
    for i in range(4):
        for x in (0.0, 0.4, 0.8):
            assert tb.theta_at(i, x) == pytest.approx(float(theta[i].subs(r, x)), abs=1e-10)


@pytest.mark.parametrize("profile", ["sphere", "hyperbolic"])
@pytest.mark.parametrize("n", [2, 4])
def test_recursion_self_consistency(profile, n):
    tb = solve_theta_recursion(ModelGeometry(n, "radial-curved", profile=profile), 10)
    assert recursion_defect(tb) < 1e-10


def test_finer_mesh_uniqueness():
    g = ModelGeometry(4, "radial-curved", profile="sphere", kappa=1.5)
    a = solve_theta_recursion(g, 6)
    b = solve_theta_recursion(g.refined(), 6)
    for i in range(7):
        assert np.max(np.abs(b.theta_at(i, a.r_mesh) - a.theta[i])) < 1e-8


def test_recursion_validation():
    with pytest.raises(DomainError):
        solve_theta_recursion(ModelGeometry(2), -1)
    with pytest.raises(DomainError):
        ModelGeometry(2, "cylinder")
    with pytest.raises(DomainError):
        ModelGeometry(2, kappa=0.0)
    with pytest.raises(DomainError):
        ModelGeometry(2, "radial-curved", kappa=3.0)


# -- bump functions ------------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3))
def test_bump_plateau_and_support(x):
    v = float(bump(x))
    assert 0.0 <= v <= 1.0
    if abs(x) <= 0.5:
        assert v == 1.0
    if abs(x) >= 1.0:
        assert v == 0.0
    assert v == float(bump(-x))


def test_chi_cutoff():
    bd = BorelData((1.0,), kappa=2.0)
    assert float(bd.chi(0.9)) == 1.0 and float(bd.chi(2.0)) == 0.0
    assert 0 < float(bd.chi(1.5)) < 1


def test_borel_data_validation():
    with pytest.raises(DomainError):
        BorelData((2.0, 1.0), 1.0)
    with pytest.raises(DomainError):
        BorelData((0.5,), 1.0)


# -- bound sequence -----------------------------------------------------------------

def test_bound_sequence_flat():
    tb = solve_theta_recursion(ModelGeometry(2), 5)
    raw = raw_bound_sequence(tb)
    assert raw[0] == 4.0 and np.all(raw[1:] == 1.0)
    assert estimate_bound_sequence(tb) == (4.0,) * 6


def test_bound_sequence_potential(potential_table):
    raw = raw_bound_sequence(potential_table)
    # C_{i,i} = 1/i! since every derivative vanishes
    expected = [max(4 / math.factorial(i), 1.0) for i in range(21)]
    assert np.allclose(raw, expected, rtol=1e-12)
    b = estimate_bound_sequence(potential_table)
    assert all(y >= x >= 1 for x, y in zip(b, b[1:]))


@pytest.mark.parametrize("n", [2, 4])
def test_bound_sequence_monotone_curved(n):
    tb = solve_theta_recursion(ModelGeometry(n, "radial-curved", profile="sphere"), 12)
    b = estimate_bound_sequence(tb)
    assert all(y >= x >= 1 for x, y in zip(b, b[1:]))
    assert all(bi >= 4 * c for bi, c in zip(b, tb.C_norms))


# -- Borel sum ----------------------------------------------------------------------

def test_borel_sum_flat_is_heat_kernel():
    tb = solve_theta_recursion(ModelGeometry(2, kappa=1.0), 4)
    bd = borel_data(tb)
    r = np.linspace(0, 1, 11)
    for t in (0.01, 0.1):
        assert np.array_equal(borel_sum(tb, bd, t, r), bd.chi(r) * q_t(t, r, 2))


@pytest.mark.parametrize("t", [0.1, 0.05, 0.01, 0.001])
def test_borel_sum_potential_exact(potential_table, t):
    bd = borel_data(potential_table)
    r = np.linspace(0, 0.5, 11)
    exact = math.exp(-t) * q_t(t, r, 2)
    assert np.max(np.abs(borel_sum(potential_table, bd, t, r) - exact) / exact) < 1e-12


def test_borel_sum_equals_partial_sum_below_threshold(potential_table):
    bd = borel_data(potential_table)
    r = np.linspace(0, 0.5, 7)
    t = 0.99 / (2 * max(bd.b))
    assert np.array_equal(borel_sum(potential_table, bd, t, r), partial_sum(potential_table, t, r))


def test_borel_sum_vanishes_for_large_t(potential_table):
    bd = borel_data(potential_table)
    assert np.all(borel_sum(potential_table, bd, 1.0, np.linspace(0, 1, 5)) == 0.0)


def test_borel_sum_domain(potential_table):
    bd = borel_data(potential_table)
    with pytest.raises(DomainError):
        borel_sum(potential_table, bd, 0.0, 0.1)
    with pytest.raises(DomainError):
        borel_sum(potential_table, bd, 0.1, 2.0)


# -- residual order -----------------------------------------------------------------

def test_residual_flat_is_floor():
    fit = heat_residual_order(ModelGeometry(2), None, 3, SMALL_T)
    assert fit.floor and fit.slope is None


def test_residual_potential_slope(potential_table):
    g = potential_table.geometry
    fit = heat_residual_order(g, borel_data(potential_table), 3, SMALL_T, potential_table)
    assert fit.slope >= 3 - 1 - 0.5
    assert fit.slope == pytest.approx(2.0, abs=1e-3)


@pytest.mark.parametrize("profile", ["sphere", "hyperbolic"])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_residual_slope_increments(profile, n):
    g = ModelGeometry(n, "radial-curved", profile=profile)
    tb = solve_theta_recursion(g, 6)
    bd = borel_data(tb)
    slopes = [heat_residual_order(g, bd, N, SMALL_T, tb).slope for N in (2, 3, 4)]
    for N, s in zip((2, 3, 4), slopes):
        assert s >= N - n / 2 - 0.5
    assert np.allclose(np.diff(slopes), 1.0, atol=0.05)


def test_residual_finite_difference_route_agrees():
    g = ModelGeometry(2, "radial-curved", profile="sphere")
    tb = solve_theta_recursion(g, 3)
    bd = borel_data(tb)
    for t in (0.01, 0.04):
        a = kernel_residual(tb, bd, t, 2, "taylor")
        b = kernel_residual(tb, bd, t, 2, "fd")
        assert b == pytest.approx(a, rel=1e-4)


def test_residual_grid_validation():
    with pytest.raises(DomainError):
        heat_residual_order(ModelGeometry(2), None, 2, [0.1])


# -- constant term ------------------------------------------------------------------

def test_constant_term_constant_samples():
    fit = asymptotic_constant_term([(t, 2 - 1j) for t in (1, 0.5, 0.25)], [0])
    assert fit.value == pytest.approx(2 - 1j, abs=1e-15)


def test_constant_term_synthetic_round_trip():
    grid = [1, 0.5, 0.25, 0.125, 0.0625]
    c = {-1.0: 0.3, 0.0: -1.25 + 0.5j, 1.0: 2.0}
    samples = [(t, sum(v * t**p for p, v in c.items())) for t in grid]
    fit = asymptotic_constant_term(samples, [-1, 0, 1])
    assert abs(fit.value - c[0.0]) < 1e-9
    assert fit.condition < 1e8


def test_constant_term_ill_conditioned():
    grid = [1.0, 0.999999, 0.999998, 0.999997]
    with pytest.raises(FitError):
        asymptotic_constant_term([(t, t) for t in grid], [0, 1, 2])


def test_constant_term_needs_zero_power_and_samples():
    with pytest.raises(DomainError):
        asymptotic_constant_term([(1, 1), (0.5, 1)], [1])
    with pytest.raises(FitError):
        asymptotic_constant_term([(1, 1)], [-1, 0])
