import itertools
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from eqindex.characteristic_forms import (
    CurvatureBlockData,
    GammaActionData,
    a_hat,
    assemble_integrand,
    det_half_denominator,
    normalization,
    relative_chern_localized,
    twisted_chern,
)
from eqindex.errors import DimensionError, DomainError
from eqindex.graded_forms import FormMatrix, GradedForm, inverse, top_component, wedge
from eqindex.spinors import clifford_top_coefficient, spin_lift

import forms_oracle as fo


def e(n, *idx, c=1.0):
    return GradedForm.basis(n, idx, c)


def random_F(rng, n, d):
    pairs = list(itertools.combinations(range(n), 2))
    Fd = [[{p: rng.normal() + 1j * rng.normal() for p in pairs} for _ in range(d)] for _ in range(d)]
    entries = [[GradedForm.from_components(n, Fd[i][j]) for j in range(d)] for i in range(d)]
    return Fd, FormMatrix.from_entries(entries)


# -- a_hat ---------------------------------------------------------------------

def test_ahat_zero_and_two_dim():
    assert a_hat(FormMatrix.zeros(4, 4, antisymmetric=True)).allclose(GradedForm.identity(4))
    w = e(2, 0, 1, c=2.5)
    R = FormMatrix.from_entries([[0, w], [-w, 0]], antisymmetric=True)
    assert a_hat(R).allclose(GradedForm.identity(2))


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_ahat_generic_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    Rd = fo.random_two_form_matrix(rng, 4, 4, density=1.0)
    got = fo.to_dict(a_hat(fo.matrix_to_formmatrix(Rd, 4)))
    assert fo.dict_allclose(got, fo.ahat_bruteforce(Rd, 4), atol=1e-12)


def test_ahat_first_pontryagin_term():
    # on n = 4: A-hat = 1 - tr(R^2)/48 since log g = -x^2/24 + ...
    rng = np.random.default_rng(5)
    R = fo.matrix_to_formmatrix(fo.random_two_form_matrix(rng, 4, 4, density=1.0), 4)
    tr2 = R.form.wedge(R.form).trace()
    assert a_hat(R).allclose(GradedForm.identity(4) - tr2 / 48, atol=1e-13)


def test_ahat_rejects_symmetric():
    w = e(2, 0, 1)
    with pytest.raises(DomainError):
        a_hat(FormMatrix.from_entries([[0, w], [w, 0]]))


def test_ahat_multiplicative():
    rng = np.random.default_rng(9)
    n = 8
    R1 = fo.matrix_to_formmatrix(fo.random_two_form_matrix(rng, n, 4), n)
    R2 = fo.matrix_to_formmatrix(fo.random_two_form_matrix(rng, n, 2), n)
    assert a_hat(FormMatrix.block_diag(R1, R2)).allclose(wedge(a_hat(R1), a_hat(R2)), atol=1e-10)


# -- twisted Chern ----------------------------------------------------------------

def test_twisted_chern_examples():
    assert twisted_chern(np.eye(3), FormMatrix.zeros(2, 3)).allclose(GradedForm.scalar(2, 3.0))
    w = e(4, 0, 1) + e(4, 2, 3, c=0.5)
    F = FormMatrix(w)
    expected = GradedForm.identity(4) - w + wedge(w, w) / 2
    assert twisted_chern([[1.0]], F).allclose(expected)
    th = 0.8
    g = np.diag([np.exp(1j * th), np.exp(-1j * th)])
    assert twisted_chern(g, FormMatrix.zeros(2, 2)).allclose(GradedForm.scalar(2, 2 * math.cos(th)))


def test_twisted_chern_dimension_mismatch():
    with pytest.raises(DimensionError):
        twisted_chern(np.eye(2), FormMatrix.zeros(2, 3))


def test_twisted_chern_matches_reference():
    rng = np.random.default_rng(4)
    Fd, F = random_F(rng, 4, 3)
    got = fo.to_dict(twisted_chern(np.eye(3), F))
    negF = [[fo.scale(Fd[i][j], -1.0) for j in range(3)] for i in range(3)]
    E = fo.mat_series([1, 1, 1 / 2, 1 / 6, 1 / 24], negF)
    ref = fo._sum(E[i][i] for i in range(3))
    assert fo.dict_allclose(got, ref, atol=1e-11)


# -- denominator -----------------------------------------------------------------

def test_denominator_theta_pi():
    d = det_half_denominator([math.pi], [GradedForm.zeros(2)])
    assert d.allclose(GradedForm.scalar(2, 2.0))


@pytest.mark.parametrize("theta,t", [(math.pi / 3, 1.0), (2.0, 0.4), (math.pi, 0.7)])
def test_denominator_matches_sine_series(theta, t):
    # 2 sin((theta - t omega)/2) with omega = e01 + e23, so omega^2 = 2 e0123
    n = 4
    om = e(n, 0, 1) + e(n, 2, 3)
    got = det_half_denominator([theta], [om], t_scale=t)
    x = sp.symbols("x")
    ser = sp.series(2 * sp.sin((sp.Float(theta, 30) - x) / 2), x, 0, 3).removeO()
    c = [complex(ser.coeff(x, k)) for k in range(3)]
    expected = GradedForm.scalar(n, c[0]) + c[1] * t * om + c[2] * t * t * wedge(om, om)
    assert got.allclose(expected, atol=1e-13)


def test_denominator_two_blocks_product():
    n = 4
    w1, w2 = e(n, 0, 1, c=0.3) + e(n, 2, 3), e(n, 0, 2, c=-0.7)
    both = det_half_denominator([1.0, 2.5], [w1, w2])
    prod = wedge(det_half_denominator([1.0], [w1]), det_half_denominator([2.5], [w2]))
    assert both.allclose(prod, atol=1e-14)


@pytest.mark.parametrize("bad", [0.0, -0.5, 3.2, 2 * math.pi])
def test_denominator_angle_domain(bad):
    with pytest.raises(DomainError):
        det_half_denominator([bad], [GradedForm.zeros(2)])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.1, math.pi), min_size=1, max_size=3), st.integers(0, 2**31 - 1))
def test_denominator_positive_branch_and_inverse(thetas, seed):
    rng = np.random.default_rng(seed)
    n = 4
    blocks = [fo.random_form(rng, n, 1, homogeneous=2) for _ in thetas]
    den = det_half_denominator(thetas, blocks)
    c0 = den.scalar_part()[0, 0]
    assert c0.imag == 0 and c0.real > 0
    assert c0.real == pytest.approx(math.prod(2 * math.sin(t / 2) for t in thetas), rel=1e-14)
    assert wedge(den, inverse(den)).allclose(GradedForm.identity(n), atol=1e-10)


# -- relative Chern ---------------------------------------------------------------

def test_relative_chern_trivial():
    g = GammaActionData(np.eye(1))
    assert relative_chern_localized(g, FormMatrix.zeros(2, 1), [1.0]).allclose(GradedForm.identity(2))


@pytest.mark.parametrize("m,theta", [(1, math.pi / 3), (-2, 2.0), (3, math.pi)])
def test_relative_chern_weight_line(m, theta):
    # raw mode: top Clifford coefficient of the spinor action twisted by the weight
    gE = np.exp(1j * m * theta) * spin_lift([theta])
    g = GammaActionData([[clifford_top_coefficient(gE)]], "raw-top-component")
    got = relative_chern_localized(g, None, [theta], fiber_rank=0)
    assert complex(got.scalar_part()[0, 0]) == pytest.approx(np.exp(1j * m * theta), abs=1e-14)
    gw = GammaActionData([[np.exp(1j * m * theta)]])
    got_w = relative_chern_localized(gw, None, [theta], fiber_rank=0)
    assert got_w.allclose(got, atol=1e-14)


def test_relative_chern_graded_cancellation():
    g = GammaActionData(np.eye(2) * np.exp(0.4j), grading=(1, 1))
    assert relative_chern_localized(g, FormMatrix.zeros(2, 2), [1.2]).allclose(GradedForm.zeros(2))


# -- assembly ----------------------------------------------------------------------

def test_isolated_spin_point():
    for th in (math.pi / 3, math.pi / 2, 2.0, math.pi):
        c = CurvatureBlockData(0, 2, theta=(th,))
        val = top_component(assemble_integrand(c, GammaActionData(np.eye(1))), 1)
        assert val == pytest.approx(1 / (1j * 2 * math.sin(th / 2)), abs=1e-15)


def test_isolated_point_four_dim_normal():
    th = (1.0, 2.0)
    c = CurvatureBlockData(0, 4, theta=th)
    val = top_component(assemble_integrand(c, GammaActionData(np.eye(1))), 1)
    assert val == pytest.approx(1 / (-1 * 4 * math.sin(0.5) * math.sin(1.0)), abs=1e-15)


def test_flat_untwisted_graded_dimension():
    n = 4
    c = CurvatureBlockData(n, 0, F_ES=FormMatrix.zeros(n, 3))
    g = GammaActionData(np.eye(3), grading=(2, 1))
    got = assemble_integrand(c, g)
    assert got.allclose(GradedForm.scalar(n, (2j * math.pi) ** (-2) * 1), atol=1e-15)


@pytest.mark.parametrize("seed", [21, 22])
def test_classical_integrand_agrees(seed):
    rng = np.random.default_rng(seed)
    n, d = 4, 2
    Rd = fo.random_two_form_matrix(rng, n, n, density=1.0)
    Fd, F = random_F(rng, n, d)
    c = CurvatureBlockData(n, 0, R0=fo.matrix_to_formmatrix(Rd, n), F_ES=F)
    got = fo.to_dict(assemble_integrand(c, GammaActionData(np.eye(d))))
    assert fo.dict_allclose(got, fo.classical_integrand(Rd, Fd, n), atol=1e-12)


def test_normalization_values():
    assert normalization(0, 0) == 1
    assert normalization(2, 0) == pytest.approx(1 / (2j * math.pi))
    assert normalization(0, 2) == pytest.approx(-1j)
    assert normalization(2, 2) == pytest.approx(1 / (2j * math.pi * 1j))


def test_block_data_validation():
    with pytest.raises(DomainError):
        CurvatureBlockData(1, 2, theta=(1.0,))
    with pytest.raises(DimensionError):
        CurvatureBlockData(0, 4, theta=(1.0,))
    with pytest.raises(DomainError):
        CurvatureBlockData(0, 2, theta=(0.0,))
    with pytest.raises(DomainError):
        GammaActionData(np.eye(1), reduction_mode="other")
