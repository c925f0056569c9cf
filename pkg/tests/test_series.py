import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from qdexciton.errors import DomainError, InsufficientDataError, NonNormalizableError, ResourceError
from qdexciton.series import (
    ALPHA,
    G,
    G2,
    Candidate,
    build_candidate,
    claimed_candidate,
    coefficient_polynomials,
    coefficients,
    count_polynomial_nodes,
    ode_residual,
    polynomial_nodes,
    reduced_polynomials,
    tail_diagnostic,
    termination_degree,
    truncated_candidate,
)

m_st = st.integers(min_value=0, max_value=5)
g_st = st.floats(min_value=0.0, max_value=5.0, allow_nan=False)
a_st = st.floats(min_value=-10.0, max_value=30.0, allow_nan=False)


# --- recurrence ------------------------------------------------------------


def test_exact_coefficients_at_reference_point():
    s = coefficients(0, 1, 3, 10)
    assert s.mode == "exact"
    assert s.coeffs[:4] == (1, -1, 0, Fraction(-1, 9))


def test_oscillator_limit_terminates_at_zero():
    for m in range(4):
        s = coefficients(m, 0, 2 * (m + 1), 30)
        assert all(c == 0 for c in s.coeffs[1:])
        assert termination_degree(s) == 0


def test_modes_agree():
    ex = coefficients(1, Fraction(3, 2), Fraction(7, 3), 30)
    fl = coefficients(1, 1.5, 7 / 3, 30)
    with mpmath.workdps(40):
        seven_thirds = mpmath.mpf(7) / 3
    mp = coefficients(1, "1.5", seven_thirds, 30, precision=40)
    assert ex.mode == "exact" and fl.mode == "float" and mp.mode == "extended"
    for e, f, x in zip(ex.coeffs, fl.coeffs, mp.coeffs):
        assert float(e) == pytest.approx(f, rel=1e-12, abs=1e-300)
        with mpmath.workdps(40):
            assert abs(mpmath.mpf(e.numerator) / e.denominator - x) <= mpmath.mpf(10) ** -35 * max(1, abs(x))


@pytest.mark.parametrize("kwargs", [dict(m=-1, g=1, alpha_bar=1, N=5), dict(m=0, g=1, alpha_bar=1, N=1)])
def test_coefficients_reject_bad_input(kwargs):
    with pytest.raises(DomainError):
        coefficients(**kwargs)


@settings(max_examples=100, deadline=None)
@given(m=m_st, g=g_st, a=a_st)
def test_recurrence_identity_holds_numerically(m, g, a):
    c = coefficients(m, g, a, 40).coeffs
    for n in range(39):
        lhs = (n + 2) * (2 * m + n + 2) * c[n + 2]
        terms = ((2 * (m + n + 1) - a) * c[n], -g * c[n + 1])
        scale = abs(lhs) + sum(abs(t) for t in terms)
        assert abs(lhs - sum(terms)) <= 1e-13 * scale + 1e-300


# --- symbolic coefficients -------------------------------------------------


def _direct_symbolic(m, N):
    a = [sympy.Integer(1), -G / (2 * m + 1)]
    for n in range(N - 1):
        a.append(sympy.expand(((2 * (m + n + 1) - ALPHA) * a[n] - G * a[n + 1]) / ((n + 2) * (2 * m + n + 2))))
    return a


@pytest.mark.parametrize("m", [0, 1, 3])
def test_polynomials_match_plain_sympy_expansion(m):
    polys = coefficient_polynomials(m, 8)
    for p, ref in zip(polys, _direct_symbolic(m, 8)):
        assert sympy.expand(p.poly.as_expr() - ref) == 0


def test_polynomial_structure():
    polys = coefficient_polynomials(2, 12)
    for p in polys:
        assert p.degree_alpha == p.n // 2
        # parity: a_n(-g) = (-1)^n a_n(g)
        flipped = p.poly.as_expr().subs(G, -G)
        assert sympy.expand(flipped - (-1) ** p.n * p.poly.as_expr()) == 0


def test_reduced_matches_parity_reduction():
    for m in (0, 2):
        full = coefficient_polynomials(m, 10)
        red = reduced_polynomials(m, 10)
        for p, b in zip(full, red):
            assert p.reduced() == b


@settings(max_examples=100, deadline=None)
@given(m=m_st, g=g_st, a=a_st)
def test_polynomials_agree_with_numeric_recurrence(m, g, a):
    polys = coefficient_polynomials(m, 16)
    c = coefficients(m, g, a, 16).coeffs
    for p in polys:
        terms = [float(coef) * a**i * g**j for (i, j), coef in p.poly.terms()]
        scale = sum(abs(t) for t in terms)
        assert abs(p(a, g) - c[p.n]) <= 1e-10 * max(scale, 1e-300)


def test_polynomial_order_limit():
    with pytest.raises(ResourceError):
        coefficient_polynomials(0, 65)
    with pytest.raises(DomainError):
        reduced_polynomials(-1, 4)


# --- candidates and normalization ------------------------------------------


def _gamma_norm(m, coeffs):
    """1/sqrt(int rho^(2m+1) e^(-rho^2) p^2) from int rho^k e^(-rho^2) = Gamma((k+1)/2)/2."""
    sq = np.polynomial.polynomial.polymul(coeffs, coeffs)
    total = sum(c * math.gamma((2 * m + 2 + k) / 2) / 2 for k, c in enumerate(sq))
    return 1 / math.sqrt(total)


@pytest.mark.parametrize("m,coeffs", [(0, (1.0,)), (0, (1.0, -1.0)), (2, (1.0, 0.3, -0.2)), (5, (1.0, -2.0, 0.5, 0.1))])
def test_normalization_against_gamma_moments(m, coeffs):
    c = Candidate.from_coeffs(m, coeffs)
    assert c.normalization == pytest.approx(_gamma_norm(m, coeffs), rel=1e-12)


def test_oscillator_ground_state_normalization():
    # phi = sqrt(2) e^{-rho^2/2} for m = 0
    assert Candidate.from_coeffs(0, (1.0,)).normalization == pytest.approx(math.sqrt(2), rel=1e-13)


def test_candidate_rejects_zero_leading_coefficient():
    with pytest.raises(DomainError):
        Candidate.from_coeffs(0, (0.0, 1.0))


def test_claimed_candidate_and_truncation_agree():
    s = coefficients(1, 0.7, 3.0, 20)
    c1 = claimed_candidate(1, 0.7)
    c2 = truncated_candidate(s, 1)
    assert c1.poly_coeffs == pytest.approx(c2.poly_coeffs)
    assert c1.poly_coeffs[1] == pytest.approx(-0.7 / 3)
    with pytest.raises(DomainError):
        truncated_candidate(s, 21)


def test_build_candidate_requires_termination():
    g = math.sqrt(2)
    ok = build_candidate(0, g, coefficients(0, g, 4.0, 60))
    assert ok.degree == 1
    with pytest.raises(NonNormalizableError):
        build_candidate(0, 1.0, coefficients(0, 1.0, 3.0, 60))
    with pytest.raises(DomainError):
        build_candidate(1, g, coefficients(0, g, 4.0, 60))


# --- residual --------------------------------------------------------------


def _sympy_residual(m, coeffs, a, g, rho_values):
    r = sympy.Symbol("rho", positive=True)
    phi = r**m * sympy.exp(-r**2 / 2) * sum(sympy.nsimplify(c) * r**k for k, c in enumerate(coeffs))
    expr = sympy.diff(phi, r, 2) + sympy.diff(phi, r) / r - m**2 * phi / r**2 + (a - r**2 + g / r) * phi
    f = sympy.lambdify(r, expr, "mpmath")
    return np.array([float(f(x)) for x in rho_values])


@pytest.mark.parametrize("m,coeffs,a,g", [(0, (1.0, -1.0), 3.0, 1.0), (2, (1.0, 0.5, -0.25), 5.5, 0.3), (1, (1.0,), 2.0, 0.8)])
def test_residual_matches_symbolic_differentiation(m, coeffs, a, g):
    c = Candidate.from_coeffs(m, coeffs)
    grid = np.array([0.05, 0.3, 1.0, 1.7, 3.2])
    expected = c.normalization * _sympy_residual(m, coeffs, a, g, grid)
    got = [ode_residual(c, a, g, grid=[x]).max_abs for x in grid]
    assert got == pytest.approx(np.abs(expected), rel=1e-9, abs=1e-12)


def test_residual_vanishes_at_qes_point_and_not_elsewhere():
    g = math.sqrt(2)
    assert ode_residual(claimed_candidate(0, g), 4.0, g).max_abs < 1e-10
    assert ode_residual(claimed_candidate(0, 1.0), 3.0, 1.0).max_abs > 1e-2
    # hand value: for the linear candidate the residual is N rho^m e^{-rho^2/2} * (-g^2/(2m+1) + 2(2m+1)... )
    bad = ode_residual(claimed_candidate(0, 1.0), 3.0, 1.0)
    assert bad.l2 > 0


def test_residual_rejects_bad_grid():
    c = claimed_candidate(0, 1.0)
    for grid in ([], [0.0, 1.0], [1.0, 0.5]):
        with pytest.raises(DomainError):
            ode_residual(c, 3.0, 1.0, grid=grid)


def test_residual_of_series_state():
    g = math.sqrt(2)
    s = coefficients(0, g, 4.0, 30)
    assert ode_residual(s, 4.0, g).max_abs < 1e-10


# --- termination and growth ------------------------------------------------


def test_genuine_termination_at_sixty_digits():
    with mpmath.workdps(60):
        g = mpmath.sqrt(2)
    s = coefficients(0, g, 4, 80, precision=60)
    assert termination_degree(s) == 1
    assert abs(s.coeffs[2]) < mpmath.mpf(10) ** -55
    assert abs(s.coeffs[3]) < mpmath.mpf(10) ** -55
    assert tail_diagnostic(s).kind == "terminates"


def test_terminating_exact_series():
    # degree-2 point for m = 0: abar = 6, g^2 = 12
    s = coefficients(0, math.sqrt(12), 6.0, 60)
    assert termination_degree(s) == 2
    assert str(tail_diagnostic(s)) == "terminates at degree 2"


def test_growth_detected_at_reference_point():
    v = tail_diagnostic(coefficients(0, 1, 3, 50))
    assert v.kind == "grows"
    assert all(abs(r - 1) <= 0.1 for r in v.ratios)


@pytest.mark.parametrize("m,g,a", [(0, 1.0, 3.0), (1, 0.5, 2.0), (2, 2.0, 9.0), (0, 0.0, 3.0)])
def test_float_series_without_termination_is_not_declared_terminated(m, g, a):
    s = coefficients(m, g, a, 200)
    assert termination_degree(s) is None
    assert tail_diagnostic(s).kind == "grows"


def test_tail_needs_enough_coefficients():
    with pytest.raises(InsufficientDataError):
        tail_diagnostic(coefficients(0, 1.0, 3.0, 19))


# --- nodes -----------------------------------------------------------------


def test_linear_candidate_has_one_node():
    g = math.sqrt(2)
    nodes = polynomial_nodes(claimed_candidate(0, g))
    assert nodes == pytest.approx([1 / math.sqrt(2)], abs=1e-12)


def test_node_count_examples():
    assert count_polynomial_nodes(Candidate.from_coeffs(0, (1.0,))) == 0
    assert count_polynomial_nodes(Candidate.from_coeffs(0, (1.0, 1.0))) == 0
    # (1 - rho)(2 - rho) = 2 - 3 rho + rho^2 -> scaled so a0 = 1
    assert polynomial_nodes(Candidate.from_coeffs(1, (1.0, -1.5, 0.5))) == pytest.approx([1.0, 2.0])
    # complex pair only
    assert count_polynomial_nodes(Candidate.from_coeffs(0, (1.0, 0.0, 1.0))) == 0
