import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimerchain.capacitance import assemble, coefficients
from dimerchain.chebyshev import (
    RecurrenceSeeds,
    ToeplitzParams,
    analytic_eigenvector_even,
    analytic_eigenvector_odd,
    char_poly_even,
    char_poly_odd,
    chebT,
    chebU,
    chebyshev_ratio,
    defect_eigenvector,
    p_star,
    p_star_closed,
    phat_qhat,
    y_map,
)
from dimerchain.errors import DomainError, NotAnEigenvalueError
from dimerchain.gap import dimer_closed_form
from dimerchain.geometry import DimerSpec, build_defect_chain
from dimerchain.tridiag import dense_oracle, eigenvalues, solve

PHYS = ToeplitzParams(alpha=1.5, beta1=-1.0, beta2=-0.5)


def _random_params(rng, corners=True):
    b1 = -rng.uniform(0.5, 2.0)
    b2 = -rng.uniform(0.1, 2.0)
    a, b = (rng.uniform(-1, 1, 2) if corners else (0.0, 0.0))
    return ToeplitzParams(rng.uniform(-1, 2), b1, b2, float(a), float(b))


def test_chebU_small_cases():
    assert chebU(-1, 0.7) == 0.0
    assert chebU(0, 0.7) == 1.0
    assert math.isclose(chebU(1, 0.3), 0.6)
    assert abs(chebU(2, 0.5)) < 1e-15
    with pytest.raises(DomainError):
        chebU(-2, 0.0)


def test_chebU_trig_identity():
    theta = np.linspace(0.01, math.pi - 0.01, 97)
    for k in range(51):
        np.testing.assert_allclose(chebU(k, np.cos(theta)) * np.sin(theta), np.sin((k + 1) * theta), atol=1e-12)


def test_chebT_values_and_product_identity():
    assert chebT(2, 0.5) == -0.5
    assert chebT(0, 3.3) == 1.0
    x = np.linspace(-1.5, 1.5, 41)
    for ell in range(0, 6):
        for n in range(max(ell - 1, 0), 8):
            lhs = chebT(ell, x) * chebU(n, x)
            rhs = 0.5 * (chebU(ell + n, x) + chebU(n - ell, x))
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_ratio_matches_direct_quotient():
    y = np.array([-3.0, -1.4, 1.2, 2.5])
    for k in range(1, 30):
        np.testing.assert_allclose(chebyshev_ratio(k, y), chebU(k - 1, y) / chebU(k, y), rtol=1e-12)


def test_ratio_stays_finite_where_values_overflow():
    assert chebU(2000, -3.0) == np.inf
    assert chebU(2001, -3.0) == -np.inf
    r = chebyshev_ratio(2000, -3.0)
    assert math.isclose(r, -3.0 + math.sqrt(8.0), rel_tol=1e-14)


@pytest.mark.parametrize("grid", [np.linspace(1.0001, 5, 400), np.linspace(-5, -1.0001, 400)])
def test_ratio_strictly_decreasing(grid):
    for k in range(1, 51):
        assert np.all(np.diff(chebyshev_ratio(k, grid)) < 0)


def test_y_map_cases():
    assert y_map(0.0, -1.0, -1.0) == -1.0
    assert math.isclose(y_map(-1.5, -1.0, -0.5), 1.0)
    assert abs(y_map(-0.2807764, -1.0, -0.5) - (-1.171165)) < 1e-6
    with pytest.raises(DomainError):
        y_map(0.0, 0.0, 1.0)


def test_p_star_low_degrees():
    x = np.linspace(-1, 3, 9)
    np.testing.assert_array_equal(p_star(0, x, PHYS), 1.0)
    np.testing.assert_array_equal(p_star(-1, x, PHYS), 0.0)
    np.testing.assert_allclose(p_star(1, x, PHYS), (x - 1.5) ** 2 - 1.25, atol=1e-15)


def test_p_star_at_gap_point():
    y = y_map(1.2192236 - 1.5, -1.0, -0.5)
    assert math.isclose(p_star(2, 1.2192236, PHYS), 0.25 * (4 * y * y - 1), rel_tol=1e-13)


@settings(max_examples=50, deadline=None)
@given(k=st.integers(0, 60), x=st.floats(-1.0, 4.0), seed=st.integers(0, 1000))
def test_p_star_recurrence_equals_closed_form(k, x, seed):
    params = _random_params(np.random.default_rng(seed), corners=False)
    a, b = p_star(k, x, params), p_star_closed(k, x, params)
    assert abs(a - b) <= 1e-10 * max(abs(b), params.couplings**k, 1e-300)


def test_char_poly_small_cases():
    params = ToeplitzParams(0.0, -1.0, -0.5)
    x = np.linspace(-2, 2, 11)
    np.testing.assert_allclose(char_poly_odd(1, x, params), x * (x * x - 1.25), atol=1e-14)
    np.testing.assert_allclose(char_poly_odd(0, x, ToeplitzParams(1.0, -1.0, -0.5, 0.3, 0.2)), x - 1.5, atol=1e-15)
    roots = dense_oracle(params.matrix(3)).values
    np.testing.assert_allclose(roots, [-math.sqrt(1.25), 0.0, math.sqrt(1.25)], atol=1e-14)
    np.testing.assert_allclose(char_poly_even(1, x, PHYS), (x - 1.5) ** 2 - 1.0, atol=1e-14)


@pytest.mark.parametrize("seed", range(100))
def test_char_polys_vanish_at_eigenvalues_only(seed):
    rng = np.random.default_rng(seed)
    params = _random_params(rng)
    k = int(rng.integers(1, 7))
    for size, poly in ((2 * k + 1, char_poly_odd), (2 * k, char_poly_even)):
        matrix = params.matrix(size)
        w = eigenvalues(matrix)
        scale = matrix.norm_bound() ** size
        assert np.max(np.abs(poly(k, w, params))) <= 1e-9 * scale
        mid = 0.5 * (w[:-1] + w[1:])
        expected = np.array([np.linalg.det(x * np.eye(size) - matrix.to_dense()) for x in mid])
        np.testing.assert_allclose(poly(k, mid, params), expected, rtol=1e-7, atol=1e-12 * scale)


def test_even_poly_roots_give_dimer_bulk_set():
    spec = DimerSpec(1, 3)
    coef = coefficients(spec)
    params = ToeplitzParams(coef.alpha, coef.beta1, coef.beta2, coef.beta2, coef.beta2)
    m = 7
    w = dimer_closed_form(spec, m)
    assert np.max(np.abs(char_poly_even(m, w, params))) < 1e-12
    np.testing.assert_allclose(eigenvalues(params.matrix(2 * m)), w, atol=1e-13)


def test_phat_qhat_identities():
    p, q = phat_qhat(RecurrenceSeeds(1.0, 1.0, 0.37), 0.3, 12)
    np.testing.assert_allclose(p, [chebU(k, 0.3) for k in range(13)], atol=1e-13)
    p, _ = phat_qhat(RecurrenceSeeds(1.0, 1.0, 2.0), 1.0, 9)
    np.testing.assert_allclose(p, np.arange(1, 11))
    seeds = RecurrenceSeeds(0.7, -1.3, 0.25)
    p, q = phat_qhat(seeds, -1.7, 5)
    assert math.isclose(q[1] - p[1], seeds.beta * seeds.xi_p)
    assert phat_qhat(seeds, 0.4, 0)[0].tolist() == [0.7]
    with pytest.raises(DomainError):
        RecurrenceSeeds(1.0, 1.0, 0.0)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _close_up_to_sign(a, b, tol):
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) <= tol


@pytest.mark.parametrize("seed", range(25))
def test_analytic_vectors_match_solver(seed):
    rng = np.random.default_rng(100 + seed)
    s1, s2 = sorted(rng.uniform(0.3, 3.0, 2))
    coef = coefficients(DimerSpec(s1, s2))
    k = int(rng.integers(1, 6))
    a, b = rng.uniform(-0.5, 0.5, 2)
    params = ToeplitzParams(coef.alpha, coef.beta1, coef.beta2, float(a), float(b))
    for size, build in ((2 * k + 1, analytic_eigenvector_odd), (2 * k, analytic_eigenvector_even)):
        matrix = params.matrix(size)
        sp = solve(matrix)
        for j, lam in enumerate(sp.values):
            v = build(params, k, lam)
            assert np.linalg.norm(matrix.matvec(v) - lam * v) <= 1e-8 * matrix.norm_bound() * np.linalg.norm(v)
            assert _close_up_to_sign(_unit(v), sp.vectors[:, j], 1e-8)


def test_even_k1_against_two_by_two():
    params = ToeplitzParams(1.5, -1.0, -0.5, 0.2, -0.1)
    matrix = params.matrix(2).to_dense()
    w, q = np.linalg.eigh(matrix)
    for j in range(2):
        v = analytic_eigenvector_even(params, 1, w[j])
        xi_p, xi_q = 1.5 + 0.2 - w[j], 1.5 - w[j]
        np.testing.assert_allclose(v, [xi_q, -(1.5 - w[j]) * xi_p / -1.0])
        assert _close_up_to_sign(_unit(v), q[:, j], 1e-12)


def test_vector_vanishes_at_alpha_without_corners():
    # lambda = alpha is an eigenvalue of the 3x3 matrix, but the closed form degenerates to zero there
    params = ToeplitzParams(0.0, -1.0, -0.5)
    with pytest.raises(NotAnEigenvalueError):
        analytic_eigenvector_odd(params, 1, 0.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_defect_vectors_are_mirror_symmetric(m):
    spec = DimerSpec(1, 2, m=m)
    matrix = assemble(build_defect_chain(spec))
    sp = solve(matrix)
    for j, lam in enumerate(sp.values):
        v = defect_eigenvector(spec, lam)
        assert np.array_equal(v[::-1], v) or np.array_equal(v[::-1], -v)
        assert _close_up_to_sign(_unit(v), sp.vectors[:, j], 1e-8)


def test_defect_vector_zero_mode_is_constant():
    v = defect_eigenvector(DimerSpec(1, 2, m=3), 0.0)
    np.testing.assert_allclose(_unit(v), np.full(13, 13**-0.5), atol=1e-12)


def test_defect_vector_rejects_non_eigenvalue():
    with pytest.raises(NotAnEigenvalueError):
        defect_eigenvector(DimerSpec(1, 2, m=3), 1.7)
