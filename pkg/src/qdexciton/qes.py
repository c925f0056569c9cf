"""Quasi-exact termination of the series.

The series ends at degree ``d`` only when ``a_{d+1}`` and ``a_{d+2}`` vanish
together.  For fixed ``(m, d)`` this is two polynomial equations in
``(abar, g^2)``, so the coupling is not free: it is fixed by the state.  The
solver reports every such coupling so the state dependence is explicit.

Exact mode eliminates ``abar`` with a resultant over the rationals and
isolates the real roots of each irreducible factor.  Float mode (the default
above degree 6) uses the recurrence identity
``(d+2)(2m+d+2) a_{d+2} = [2(m+d+1) - abar] a_d - g a_{d+1}``, which pins
``abar = 2(m+d+1)`` whenever ``a_d != 0``; it then takes companion-matrix
roots of ``a_{d+1}`` in ``g^2`` and polishes each with bivariate Newton.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
import sympy

from .errors import ConvergenceError, DegenerateConditionError, DomainError, ResourceError
from .series import ALPHA, G2, coefficients, reduced_polynomials

MAX_DEGREE = 12
EXACT_MAX_DEGREE = 6
WORK_DPS = 50
EXACT_CERT_TOL = 1e-20
FLOAT_CERT_TOL = 1e-13


@dataclass(frozen=True)
class QesPoint:
    """Parameters at which the series collapses to a polynomial of ``degree``.

    ``alpha_exact``/``g_squared_exact`` carry the exact values when the
    resultant route certified them; ``residual`` is the larger of the two
    back-substituted conditions (relative to their term scale).
    """

    m: int
    degree: int
    alpha_bar: float
    g_squared: float
    energy_physical: float
    alpha_exact: Fraction | None = None
    g_squared_exact: sympy.Expr | None = None
    residual: float = 0.0
    method: str = "exact"

    @property
    def g(self) -> float:
        return math.sqrt(self.g_squared)

    @property
    def n_r(self) -> int:
        return self.degree - 1

    def label(self) -> str:
        return f"m={self.m} degree={self.degree}: state-dependent coupling g^2={self.g_squared:.12g}, abar={self.alpha_bar:.12g}"


@dataclass(frozen=True)
class QesSolution:
    points: tuple[QesPoint, ...]
    discarded_nonpositive: int  # real roots with g^2 <= 0
    discarded_lower_degree: int  # common roots where a_degree also vanishes


def qes_points(m: int, degree: int, method: str = "auto", hbar_omega: float = 1.0) -> tuple[QesPoint, ...]:
    """All ``(abar, g^2 > 0)`` at which the series terminates at exactly ``degree``."""
    return solve_qes(m, degree, method, hbar_omega).points


def solve_qes(m: int, degree: int, method: str = "auto", hbar_omega: float = 1.0) -> QesSolution:
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if degree < 1:
        raise DomainError(f"degree must be >= 1, got {degree}")
    if degree > MAX_DEGREE:
        raise ResourceError(f"QES search limited to degree <= {MAX_DEGREE}, got {degree}")
    if method == "auto":
        method = "exact" if degree <= EXACT_MAX_DEGREE else "float"
    if method == "exact":
        sol = _solve_exact(int(m), int(degree))
    elif method == "float":
        sol = _solve_float(int(m), int(degree))
    else:
        raise DomainError(f"unknown method {method!r}")
    if hbar_omega != 1.0:
        pts = tuple(
            QesPoint(**{**p.__dict__, "energy_physical": p.alpha_bar * hbar_omega / 2.0}) for p in sol.points
        )
        sol = QesSolution(pts, sol.discarded_nonpositive, sol.discarded_lower_degree)
    return sol


def _eval_mp(poly: sympy.Poly, a, g2):
    """Value and absolute term scale of ``poly(a, g2)`` in the current mp context."""
    val = mpmath.mpf(0)
    scale = mpmath.mpf(0)
    for (i, j), c in poly.terms():
        t = mpmath.mpf(c.p) / c.q * a**i * g2**j
        val += t
        scale += abs(t)
    return val, scale


def _rel(poly, a, g2):
    val, scale = _eval_mp(poly, a, g2)
    return abs(val) / scale if scale else mpmath.mpf(0)


@lru_cache(maxsize=None)
def _solve_exact(m: int, d: int) -> QesSolution:
    b = reduced_polynomials(m, d + 2)
    p_d, p1, p2 = b[d], b[d + 1], b[d + 2]
    res = sympy.resultant(p1, p2, ALPHA)
    res = sympy.Poly(res, G2, domain="QQ")
    if res.is_zero:
        raise ConvergenceError(f"conditions share a common factor at m={m}, degree={d}")
    points, nonpos, lower = [], 0, 0
    with mpmath.workdps(WORK_DPS):
        for factor, _mult in res.factor_list()[1]:
            for root in sympy.Poly(factor, G2).real_roots():
                g2v = mpmath.mpf(str(sympy.N(root, WORK_DPS + 10)))
                if g2v <= 0:
                    nonpos += 1
                    continue
                for av in _common_alpha(p1, p2, g2v):
                    if _rel(p_d, av, g2v) < mpmath.mpf(10) ** (-30):
                        lower += 1
                        continue
                    alpha_exact = _certify(p1, p2, factor, av)
                    r = max(_rel(p1, av, g2v), _rel(p2, av, g2v))
                    if alpha_exact is None or r > EXACT_CERT_TOL:
                        raise ConvergenceError(
                            f"could not certify QES root m={m}, degree={d}, g^2={float(g2v):.15g}"
                        )
                    points.append(
                        QesPoint(
                            m=m,
                            degree=d,
                            alpha_bar=float(av),
                            g_squared=float(g2v),
                            energy_physical=float(av) / 2.0,
                            alpha_exact=alpha_exact,
                            g_squared_exact=sympy.nsimplify(root) if root.is_rational else root,
                            residual=float(r),
                            method="exact",
                        )
                    )
    points.sort(key=lambda p: p.g_squared)
    return QesSolution(tuple(points), nonpos, lower)


def _common_alpha(p1, p2, g2v):
    """Real roots in ``abar`` of ``p1(., g2v)`` that also annihilate ``p2``."""
    deg = p1.degree(ALPHA)
    coeffs = [mpmath.mpf(0)] * (deg + 1)
    for (i, j), c in p1.terms():
        coeffs[deg - i] += mpmath.mpf(c.p) / c.q * g2v**j
    if deg == 0:
        return []
    roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
    out = []
    for r in roots:
        if abs(mpmath.im(r)) > mpmath.mpf(10) ** (-25) * max(1, abs(r)):
            continue
        a = mpmath.re(r)
        if _rel(p2, a, g2v) < mpmath.mpf(10) ** (-25):
            out.append(a)
    return out


def _certify(p1, p2, factor, av) -> Fraction | None:
    """Exact ``abar`` if it is rational and both conditions vanish on ``factor``."""
    guess = Fraction(str(mpmath.nstr(av, 40))).limit_denominator(10**6)
    if abs(mpmath.mpf(guess.numerator) / guess.denominator - av) > mpmath.mpf(10) ** (-35):
        return None
    q = sympy.Rational(guess.numerator, guess.denominator)
    f = sympy.Poly(factor, G2, domain="QQ")
    for p in (p1, p2):
        u = sympy.Poly(p.as_expr().subs(ALPHA, q), G2, domain="QQ")
        if not u.rem(f).is_zero:
            return None
    return guess


@lru_cache(maxsize=None)
def _solve_float(m: int, d: int) -> QesSolution:
    b = reduced_polynomials(m, d + 2)
    p_d, p1, p2 = b[d], b[d + 1], b[d + 2]
    a_star = 2 * (m + d + 1)
    uni = sympy.Poly(p1.as_expr().subs(ALPHA, a_star), G2)
    coeffs = [float(c) for c in uni.all_coeffs()]
    roots = np.roots(coeffs) if len(coeffs) > 1 else np.empty(0)
    points, nonpos, lower = [], 0, 0
    seen: list[float] = []
    jac = [[sympy.Poly(p.diff(v), ALPHA, G2) for v in (ALPHA, G2)] for p in (p1, p2)]
    with mpmath.workdps(30):
        for r in roots:
            if abs(r.imag) > 1e-8 * max(1.0, abs(r)):
                continue
            if r.real <= 0:
                nonpos += 1
                continue
            a, g2 = _newton(p1, p2, jac, mpmath.mpf(a_star), mpmath.mpf(r.real))
            res = max(_rel(p1, a, g2), _rel(p2, a, g2))
            if res > FLOAT_CERT_TOL:
                raise ConvergenceError(f"Newton polish failed at m={m}, degree={d}, g^2~{r.real:.6g}")
            if _rel(p_d, a, g2) < 1e-20:
                lower += 1
                continue
            if any(abs(float(g2) - s) <= 1e-9 * max(1.0, s) for s in seen):
                continue
            seen.append(float(g2))
            points.append(
                QesPoint(
                    m=m,
                    degree=d,
                    alpha_bar=float(a),
                    g_squared=float(g2),
                    energy_physical=float(a) / 2.0,
                    residual=float(res),
                    method="float",
                )
            )
    points.sort(key=lambda p: p.g_squared)
    return QesSolution(tuple(points), nonpos, lower)


def _newton(p1, p2, jac, a, g2, max_iter=50):
    for _ in range(max_iter):
        f1, _s1 = _eval_mp(p1, a, g2)
        f2, _s2 = _eval_mp(p2, a, g2)
        J = mpmath.matrix([[_eval_mp(jac[i][k], a, g2)[0] for k in range(2)] for i in range(2)])
        step = mpmath.lu_solve(J, mpmath.matrix([f1, f2]))
        a, g2 = a - step[0], g2 - step[1]
        if abs(step[0]) + abs(step[1]) < mpmath.mpf(10) ** (-25) * (1 + abs(a) + abs(g2)):
            break
    return a, g2


def constraint_residual(m: int, g) -> object:
    """``2(2m+1) - g^2``: vanishes exactly when the linear trial function is a solution."""
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    return 2 * (2 * m + 1) - g**2


def single_condition_alpha(
    m: int,
    n_r: int,
    g,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 200,
):
    """``abar`` that makes ``a_{n_r+2}`` vanish, and nothing more.

    This is the quantization ``abar = 2(m+n_r+1) - g a_{n_r+1}/a_{n_r}``.  For
    ``n_r = 0`` it is explicit, ``2(m+1) + g^2/(2m+1)``, and keeps the input's
    number type (a ``Fraction`` ``g`` gives an exact answer).  For ``n_r > 0``
    the ratio depends on ``abar`` itself and a damped fixed-point iteration is
    used.

    Raises
    ------
    DegenerateConditionError
        ``a_{n_r}`` vanishes at an iterate.
    ConvergenceError
        The iteration does not settle to ``tol`` within ``max_iter`` steps.
    """
    if m < 0 or n_r < 0:
        raise DomainError(f"need m >= 0 and n_r >= 0, got m={m}, n_r={n_r}")
    if n_r == 0:
        return 2 * (m + 1) + g**2 / (2 * m + 1)
    g = float(g)
    target = 2 * (m + n_r + 1)
    alpha = float(target)
    for _ in range(max_iter):
        a = coefficients(m, g, alpha, n_r + 2).coeffs
        if a[n_r] == 0 or abs(a[n_r]) < 1e-300:
            raise DegenerateConditionError(f"a_{n_r} vanishes at abar={alpha:.15g} (m={m}, g={g:.15g})")
        new = (1 - damping) * alpha + damping * (target - g * a[n_r + 1] / a[n_r])
        if not math.isfinite(new):
            raise ConvergenceError(f"fixed-point iterate diverged (m={m}, n_r={n_r}, g={g:.15g})")
        if abs(new - alpha) <= tol * max(1.0, abs(new)):
            return _polish(m, n_r, g, new)
        alpha = new
    raise ConvergenceError(f"fixed point not reached in {max_iter} iterations (m={m}, n_r={n_r}, g={g:.15g})")


def _polish(m: int, n_r: int, g: float, alpha: float) -> float:
    """Secant steps on ``a_{n_r+2}(abar)`` down to rounding level.

    The damped iteration converges linearly and stops at ``tol``; a few
    secant steps on the polynomial itself recover the last digits, which
    decide whether the truncated series terminates in extended precision.
    """

    def f(a):
        return coefficients(m, g, a, n_r + 2).coeffs[n_r + 2]

    x0, x1 = alpha, alpha * (1 + 1e-9) + 1e-12
    f0, f1 = f(x0), f(x1)
    for _ in range(8):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not math.isfinite(x2) or abs(x2 - alpha) > 1e-6 * max(1.0, abs(alpha)):
            return alpha
        x0, f0, x1, f1 = x1, f1, x2, f(x2)
        if abs(x1 - x0) <= 4 * math.ulp(x1):
            break
    return x1 if abs(f1) <= abs(f(alpha)) else alpha
