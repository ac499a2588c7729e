import math

import numpy as np
import pytest

from gengauss.measures import jacobi_measure, monomial_moments
from gengauss.quadrature import rule_checks
from gengauss.rulegen import (
    GenGaussRule, build_rule, free_nodes, interior_basis_poly, interior_weights_via_modified_gauss,
    left_boundary_poly, reflect_rule, right_boundary_poly, taylor_reciprocal, vandermonde_weights,
)
from gengauss.utils.errors import DomainError
from gengauss.utils.precision import Precision


def test_gauss_radau_two_points(legendre):
    rule = build_rule(legendre, -1.0, 1, 1.0, 0, 1)
    assert rule.nodes == pytest.approx([1 / 3], abs=1e-12)
    assert rule.left_weights == pytest.approx([0.5], abs=1e-12)
    assert rule.interior_weights == pytest.approx([1.5], abs=1e-12)
    assert len(rule.right_weights) == 0


def test_gauss_lobatto_three_points(legendre):
    rule = build_rule(legendre, -1.0, 1, 1.0, 1, 1)
    assert rule.nodes == pytest.approx([0.0], abs=1e-12)
    assert rule.all_weights() == pytest.approx([1 / 3, 4 / 3, 1 / 3], abs=1e-12)
    assert rule.degree_exact == 3


def test_plain_gauss(legendre):
    rule = build_rule(legendre, None, 0, None, 0, 2)
    assert rule.nodes == pytest.approx([-1 / math.sqrt(3), 1 / math.sqrt(3)], abs=1e-14)
    assert rule.interior_weights == pytest.approx([1.0, 1.0], abs=1e-13)


def test_derivative_only_rules(legendre):
    trapezoid = build_rule(legendre, -1.0, 1, 1.0, 1, 0)
    assert trapezoid.all_weights() == pytest.approx([1.0, 1.0])
    left_only = build_rule(legendre, -1.0, 2, 1.0, 0, 0)
    assert left_only.left_weights == pytest.approx([2.0, 2.0])
    right_only = build_rule(legendre, -1.0, 0, 1.0, 2, 0)
    assert right_only.right_weights == pytest.approx([2.0, 2.0])


@pytest.mark.parametrize("p,q,n,r,s", [
    (0.0, 0.0, 1, 2, 2),
    (0.0, 0.0, 4, 3, 1),
    (0.5, -0.5, 3, 2, 3),
    (1.0, 1.0, 2, 4, 0),
])
def test_weights_agree_with_oracles(p, q, n, r, s):
    m = jacobi_measure(p, q)
    rule = build_rule(m, -1.0, r, 1.0, s, n)
    left, interior, right = vandermonde_weights(m, -1.0, r, 1.0, s, rule.nodes)
    assert rule.left_weights == pytest.approx(left, rel=1e-7, abs=1e-9)
    assert rule.interior_weights == pytest.approx(interior, rel=1e-7, abs=1e-9)
    assert rule.right_weights == pytest.approx(right, rel=1e-7, abs=1e-9)
    via_gauss = interior_weights_via_modified_gauss(m, -1.0, r, 1.0, s, n)
    assert rule.interior_weights == pytest.approx(via_gauss, rel=1e-10)


@pytest.mark.parametrize("p,q", [(-0.5, -0.5), (0.0, 0.0), (0.5, 1.0), (1.0, -0.5)])
def test_positive_and_exact(p, q):
    m = jacobi_measure(p, q)
    for n in (1, 3, 8):
        for r in range(5):
            for s in range(5):
                rule = build_rule(m, -1.0, r, 1.0, s, n)
                assert np.all(rule.all_weights() > 0), (n, r, s)
                K = rule.degree_exact
                mu = monomial_moments(m, K)
                q_k = rule.monomial_sums(K)
                assert np.all(np.abs(q_k - mu) <= 1e-10 * np.maximum(1.0, np.abs(mu))), (n, r, s)


@pytest.mark.parametrize("p,q", [(-0.5, -0.5), (0.0, 0.0), (1.0, 1.0)])
def test_one_point_gauss_for_symmetric_measures(p, q):
    # Q(t) and int t dlambda both vanish, so only an absolute scale accepts them
    rule = build_rule(jacobi_measure(p, q), None, 0, None, 0, 1)
    assert rule.nodes == pytest.approx([0.0], abs=1e-14)
    assert rule.monomial_sums(1) == pytest.approx(monomial_moments(jacobi_measure(p, q), 1), rel=1e-13, abs=1e-14)


@pytest.mark.slow
@pytest.mark.parametrize("n", range(1, 21))
@pytest.mark.parametrize("p,q", [(p, q) for p in (-0.5, 0.0, 0.5, 1.0) for q in (-0.5, 0.0, 0.5, 1.0)])
def test_full_grid_is_positive_exact_and_matches_leading_error(p, q, n):
    m = jacobi_measure(p, q)
    for r in range(7):
        for s in range(7):
            checks = rule_checks(m, build_rule(m, -1.0, r, 1.0, s, n))
            assert checks["positive"], (n, r, s, checks["min_weight"])
            assert checks["exact"], (n, r, s, checks["max_exactness_error"])
            assert checks["leading_identity"], (n, r, s)


def test_laguerre_rule_is_positive_and_exact(laguerre):
    rule = build_rule(laguerre, None, 2, None, 0, 3)
    assert rule.a == 0.0
    assert np.all(rule.all_weights() > 0)
    K = rule.degree_exact
    mu = monomial_moments(laguerre, K)
    assert rule.monomial_sums(K) == pytest.approx(mu, rel=1e-10)


def test_double_double_matches_double(legendre):
    plain = build_rule(legendre, -1.0, 3, 1.0, 2, 4, Precision.DOUBLE)
    extended = build_rule(legendre, -1.0, 3, 1.0, 2, 4, Precision.DOUBLE_DOUBLE)
    assert extended.precision == "double-double"
    assert extended.all_weights() == pytest.approx(plain.all_weights(), rel=1e-10)


def test_high_multiplicity_engages_double_double(legendre):
    rule = build_rule(legendre, -1.0, 5, 1.0, 5, 2)
    assert rule.precision == "double-double"
    assert np.all(rule.all_weights() > 0)


def test_taylor_reciprocal_known_series():
    # 1/(1-u)^2 = sum (k+1) u^k
    assert taylor_reciprocal([1.0, -2.0, 1.0], 6) == pytest.approx(np.arange(1, 8))
    with pytest.raises(DomainError):
        taylor_reciprocal([0.0, 1.0], 3)


def test_reciprocal_of_factored_polynomial_is_positive(rng):
    # prod (d_i - u)^{m_i} with all d_i > 0 has a reciprocal with positive coefficients
    P = np.polynomial.polynomial
    for _ in range(1000):
        k = rng.integers(1, 4)
        coeffs = np.array([1.0])
        for d, mult in zip(rng.uniform(0.2, 3.0, size=k), rng.integers(1, 3, size=k)):
            for _ in range(mult):
                coeffs = P.polymul(coeffs, [d, -1.0])
        order = int(rng.integers(1, 9))
        assert np.all(taylor_reciprocal(coeffs, order) > 0)


def test_omega_partial_sums_are_positive(legendre, rng):
    for _ in range(50):
        n = int(rng.integers(1, 6))
        nodes = np.sort(rng.uniform(-0.95, 0.95, size=n))
        r, s = int(rng.integers(1, 6)), int(rng.integers(0, 4))
        for j in range(r):
            poly = left_boundary_poly(j, -1.0, r, 1.0, s, nodes)
            assert all(c > 0 for c in poly.series)


def test_boundary_polys_interpolate(legendre):
    a, r, b, s = -1.0, 3, 1.0, 2
    nodes = free_nodes(legendre, a, r, b, s, 2)
    Poly = np.polynomial.Polynomial
    for j in range(r):
        p = Poly(left_boundary_poly(j, a, r, b, s, nodes).coefficients())
        at_a = [p.deriv(k)(a) if k else p(a) for k in range(r)]
        assert at_a == pytest.approx([1.0 if k == j else 0.0 for k in range(r)], abs=1e-9)
        at_b = [p.deriv(k)(b) if k else p(b) for k in range(s)]
        assert at_b == pytest.approx([0.0] * s, abs=1e-9)
        assert p(nodes) == pytest.approx([0.0, 0.0], abs=1e-9)
    for j in range(s):
        p = Poly(right_boundary_poly(j, a, r, b, s, nodes).coefficients())
        at_b = [p.deriv(k)(b) if k else p(b) for k in range(s)]
        assert at_b == pytest.approx([1.0 if k == j else 0.0 for k in range(s)], abs=1e-9)
        assert p(nodes) == pytest.approx([0.0, 0.0], abs=1e-9)
    p = Poly(interior_basis_poly(1, a, r, b, s, nodes).coefficients())
    assert p(nodes) == pytest.approx([1.0, 0.0], abs=1e-9)


def test_boundary_poly_signs(legendre):
    a, r, b, s = -1.0, 4, 1.0, 3
    nodes = free_nodes(legendre, a, r, b, s, 3)
    t = np.linspace(a, b, 401)
    for j in range(r):
        assert np.all(left_boundary_poly(j, a, r, b, s, nodes)(t) >= -1e-14)
    for j in range(s):
        assert np.all((-1) ** j * right_boundary_poly(j, a, r, b, s, nodes)(t) >= -1e-14)


def test_reflect_rule():
    m = jacobi_measure(0.5, 1.0)
    rule = build_rule(m, -1.0, 2, 1.0, 1, 3)
    twice = reflect_rule(reflect_rule(rule))
    assert twice.nodes == pytest.approx(rule.nodes)
    assert twice.all_weights() == pytest.approx(rule.all_weights())
    mirrored = build_rule(jacobi_measure(1.0, 0.5), -1.0, 1, 1.0, 2, 3)
    reflected = reflect_rule(rule)
    assert reflected.nodes == pytest.approx(mirrored.nodes, abs=1e-12)
    assert reflected.all_weights() == pytest.approx(mirrored.all_weights(), rel=1e-10)


def test_rule_from_dict_validates(legendre):
    rule = build_rule(legendre, -1.0, 1, 1.0, 1, 2)
    data = rule.to_dict()
    assert GenGaussRule.from_dict(data).all_weights() == pytest.approx(rule.all_weights())
    data["nodes"] = data["nodes"][:1]
    with pytest.raises(DomainError):
        GenGaussRule.from_dict(data)
    with pytest.raises(DomainError):
        GenGaussRule.from_dict({"a": -1})


def test_rule_frame(legendre):
    frame = build_rule(legendre, -1.0, 2, 1.0, 1, 3).to_frame()
    assert list(frame.columns) == ["kind", "index", "abscissa", "order", "weight"]
    assert list(frame["kind"]) == ["left", "left", "interior", "interior", "interior", "right"]


def test_build_rule_preconditions(legendre, laguerre):
    with pytest.raises(DomainError):
        build_rule(laguerre, None, 0, None, 1, 2)
    with pytest.raises(DomainError):
        build_rule(legendre, -0.5, 1, 1.0, 0, 2)
    with pytest.raises(DomainError):
        build_rule(legendre, -1.0, 0, 1.0, 0, 0)
    with pytest.raises(DomainError):
        build_rule(legendre, -1.0, -1, 1.0, 0, 2)
