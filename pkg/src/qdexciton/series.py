"""Power-series machinery for the scaled radial equation.

Writing ``phi(rho) = rho**m * exp(-rho**2/2) * sum_n a_n rho**n`` turns the
radial equation into the three-term recurrence::

    (n+2)(2m+n+2) a_{n+2} = [2(m+n+1) - abar] a_n - g a_{n+1}

with ``a_0 = 1`` and ``a_1 = -g/(2m+1)``.  Because three consecutive
coefficients are linked, a single vanishing coefficient does not end the
series; two consecutive zeros do.

Coefficients can be produced in three arithmetic modes, selected from the
inputs: exact (``int``/``Fraction`` inputs give ``Fraction`` coefficients),
extended (``precision=`` digits through mpmath) and plain floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Sequence

import mpmath
import numpy as np
import sympy
from numpy.polynomial import polynomial as P
from scipy import integrate

from .errors import DomainError, InsufficientDataError, NonNormalizableError, ResourceError

ALPHA, G = sympy.symbols("alpha_bar g")
G2 = sympy.Symbol("g2")  # g**2, used by the parity-reduced polynomials

ZERO_RTOL = 1e-13
MAX_POLY_ORDER = 64
DEFAULT_RESIDUAL_GRID = np.geomspace(1e-2, 10.0, 400)


@dataclass(frozen=True)
class SeriesState:
    """Coefficients ``a_0..a_N`` at a fixed ``(m, g, abar)``."""

    m: int
    g: object
    alpha_bar: object
    coeffs: tuple

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    @property
    def mode(self) -> str:
        c = self.coeffs[0]
        if isinstance(c, Fraction):
            return "exact"
        if isinstance(c, mpmath.mpf):
            return "extended"
        return "float"


def coefficients(m: int, g, alpha_bar, N: int, precision: int | None = None) -> SeriesState:
    """Run the recurrence up to ``a_N``.

    Parameters
    ----------
    m : int
        Angular number, ``m >= 0``.
    g, alpha_bar :
        Coupling and dimensionless energy.  Rational inputs (``int`` or
        ``Fraction``) give exact ``Fraction`` coefficients unless
        ``precision`` is set.
    N : int
        Highest index computed, ``N >= 2``.
    precision : int, optional
        Decimal digits for mpmath arithmetic.  ``g`` and ``alpha_bar`` may
        then be strings or mpf values so that no double rounding leaks in.
    """
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    m = int(m)
    if precision is not None:
        with mpmath.workdps(precision):
            gv, av = mpmath.mpf(g), mpmath.mpf(alpha_bar)
            coeffs = _run(m, gv, av, N, mpmath.mpf(1))
        return SeriesState(m, gv, av, tuple(coeffs))
    if _is_rational(g) and _is_rational(alpha_bar):
        gv, av = Fraction(g), Fraction(alpha_bar)
        return SeriesState(m, gv, av, tuple(_run(m, gv, av, N, Fraction(1))))
    gv, av = float(g), float(alpha_bar)
    return SeriesState(m, gv, av, tuple(_run(m, gv, av, N, 1.0)))


def _is_rational(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def _run(m, g, alpha_bar, N, one):
    a = [one, -g / (2 * m + 1)]
    for n in range(N - 1):
        a.append(((2 * (m + n + 1) - alpha_bar) * a[n] - g * a[n + 1]) / ((n + 2) * (2 * m + n + 2)))
    return a


@dataclass(frozen=True)
class CoeffPolynomial:
    """``a_n`` as an exact polynomial in ``(alpha_bar, g)`` over the rationals."""

    n: int
    poly: sympy.Poly

    @property
    def degree_alpha(self) -> int:
        return self.poly.degree(ALPHA)

    def __call__(self, alpha_bar, g) -> float:
        return float(self.poly.eval({ALPHA: alpha_bar, G: g}))

    def reduced(self) -> sympy.Poly:
        """``a_n / g**(n % 2)`` written in ``(alpha_bar, g2)`` with ``g2 = g**2``.

        Parity makes this exact: even-index coefficients are even in ``g``
        and odd-index ones are ``g`` times an even polynomial.
        """
        shift = self.n % 2
        terms = {}
        for (i, j), coef in self.poly.terms():
            k, odd = divmod(j - shift, 2)
            if odd:
                raise ArithmeticError(f"a_{self.n} violates g-parity")
            terms[(i, k)] = coef
        return sympy.Poly.from_dict(terms or {(0, 0): 0}, ALPHA, G2, domain="QQ")


@lru_cache(maxsize=None)
def _reduced_table(m: int, N: int) -> tuple:
    # b_n = a_n / g^(n%2) obeys a recurrence in which only g**2 enters
    b = [
        sympy.Poly(1, ALPHA, G2, domain="QQ"),
        sympy.Poly(sympy.Rational(-1, 2 * m + 1), ALPHA, G2, domain="QQ"),
    ]
    alpha = sympy.Poly(ALPHA, ALPHA, G2, domain="QQ")
    g2 = sympy.Poly(G2, ALPHA, G2, domain="QQ")
    for n in range(N - 1):
        lead = (2 * (m + n + 1) - alpha) * b[n]
        cross = g2 * b[n + 1] if n % 2 == 0 else b[n + 1]
        b.append((lead - cross).quo_ground((n + 2) * (2 * m + n + 2)))
    return tuple(b)


def reduced_polynomials(m: int, N: int) -> tuple:
    """Parity-reduced coefficient polynomials ``b_0..b_N`` in ``(alpha_bar, g2)``."""
    _check_poly_order(m, N)
    return _reduced_table(int(m), int(N))


@lru_cache(maxsize=None)
def coefficient_polynomials(m: int, N: int) -> tuple[CoeffPolynomial, ...]:
    """Exact ``a_0..a_N`` as polynomials in ``(alpha_bar, g)``.

    Built independently of :func:`reduced_polynomials` by running the
    recurrence directly over ``QQ[alpha_bar, g]``.
    """
    _check_poly_order(m, N)
    alpha = sympy.Poly(ALPHA, ALPHA, G, domain="QQ")
    g = sympy.Poly(G, ALPHA, G, domain="QQ")
    a = [sympy.Poly(1, ALPHA, G, domain="QQ"), g.quo_ground(-(2 * m + 1))]
    for n in range(N - 1):
        a.append(((2 * (m + n + 1) - alpha) * a[n] - g * a[n + 1]).quo_ground((n + 2) * (2 * m + n + 2)))
    return tuple(CoeffPolynomial(n, p) for n, p in enumerate(a))


def _check_poly_order(m: int, N: int) -> None:
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if N > MAX_POLY_ORDER:
        raise ResourceError(f"exact coefficient polynomials limited to N <= {MAX_POLY_ORDER}, got {N}")


# --- candidates ------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    """Closed-form trial function ``N rho^m exp(-rho^2/2) sum_n c_n rho^n``."""

    m: int
    poly_coeffs: tuple[float, ...]
    normalization: float

    @property
    def degree(self) -> int:
        return len(self.poly_coeffs) - 1

    @classmethod
    def from_coeffs(cls, m: int, coeffs: Sequence) -> "Candidate":
        c = tuple(float(x) for x in coeffs)
        if not c or c[0] == 0:
            raise DomainError("leading series coefficient a_0 must be nonzero")
        return cls(int(m), c, _normalization(int(m), c))

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.normalization * rho**self.m * np.exp(-0.5 * rho**2) * P.polyval(rho, self.poly_coeffs)

    def u(self, rho):
        """``sqrt(rho) * phi``, the function the finite-difference oracle resolves."""
        rho = np.asarray(rho, dtype=float)
        return np.sqrt(rho) * self(rho)


def _normalization(m: int, coeffs: tuple[float, ...]) -> float:
    def density(r):
        p = P.polyval(r, coeffs)
        return r ** (2 * m + 1) * math.exp(-r * r) * p * p

    # split at the Gaussian width so quad resolves the polynomial humps
    total = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, 4.0), (4.0, 12.0), (12.0, np.inf)):
        val, _ = integrate.quad(density, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    if not total > 0:
        raise NonNormalizableError("trial function has zero norm")
    return 1.0 / math.sqrt(total)


def claimed_candidate(m: int, g: float) -> Candidate:
    """Linear-polynomial trial function ``1 - g rho / (2m+1)`` proposed for ``n_r = 0``."""
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    return Candidate.from_coeffs(m, (1.0, -float(g) / (2 * m + 1)))


def truncated_candidate(state: SeriesState, degree: int) -> Candidate:
    """Keep ``a_0..a_degree`` of a series regardless of whether it terminates."""
    if not 0 <= degree <= state.N:
        raise DomainError(f"degree {degree} outside 0..{state.N}")
    return Candidate.from_coeffs(state.m, state.coeffs[: degree + 1])


def build_candidate(m: int, g, truncate: SeriesState) -> Candidate:
    """Normalized trial function from a series that genuinely terminates.

    Raises
    ------
    NonNormalizableError
        If the series does not end in (at least) two vanishing coefficients.
    """
    if truncate.m != m:
        raise DomainError(f"series was computed for m={truncate.m}, not m={m}")
    if not _same_number(truncate.g, g):
        raise DomainError(f"series was computed for g={truncate.g}, not g={g}")
    d = termination_degree(truncate)
    if d is None:
        raise NonNormalizableError(
            f"series at m={m}, g={float(g):.6g}, abar={float(truncate.alpha_bar):.6g} does not terminate "
            f"within N={truncate.N}"
        )
    return Candidate.from_coeffs(m, truncate.coeffs[: d + 1])


def _same_number(a, b) -> bool:
    fa, fb = float(a), float(b)
    return fa == fb or abs(fa - fb) <= 1e-14 * max(1.0, abs(fa))


def _cancelled(c: Sequence, j: int) -> bool:
    """``a_j`` is zero exactly, or negligible next to its two predecessors."""
    x = c[j]
    if x == 0:
        return True
    if isinstance(x, Fraction):
        return False
    local = max(abs(c[j - 1]), abs(c[j - 2])) if j >= 2 else abs(c[0])
    return abs(x) <= ZERO_RTOL * local


def termination_degree(state: SeriesState) -> int | None:
    """Degree ``d`` at which the series ends, or ``None``.

    ``a_{d+1}`` and ``a_{d+2}`` must both vanish, exactly or to ``1e-13`` of
    the larger of their two predecessors, and every later
    coefficient must stay below ``1e-13 * max_{k<=d} |a_k|``.  The cancellation
    test matters: the coefficients of any entire function decay factorially,
    so a floor relative to ``max |a_k|`` alone would eventually declare every
    series terminated.
    """
    c = state.coeffs
    scale = 0
    for d in range(len(c) - 2):
        scale = max(scale, abs(c[d]))
        if c[d] == 0 or not (_cancelled(c, d + 1) and _cancelled(c, d + 2)):
            continue
        tail = c[d + 1 :]
        if isinstance(c[0], Fraction):
            if all(x == 0 for x in tail):
                return d
        elif all(abs(x) <= ZERO_RTOL * scale for x in tail):
            return d
    return None


# --- residual and growth ---------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    l2: float


def ode_residual(c: Candidate | SeriesState, alpha_bar, g, grid=None) -> ResidualReport:
    """Left-hand side of the scaled radial equation evaluated on ``grid``.

    Derivatives come from the product rule on ``rho^m exp(-rho^2/2) p(rho)``;
    nothing is differenced numerically.  A :class:`SeriesState` is treated as
    the (unnormalized) polynomial of all its coefficients.  ``l2`` is
    ``sqrt(int R^2 rho drho)`` by the trapezoidal rule on ``grid``.
    """
    rho = DEFAULT_RESIDUAL_GRID if grid is None else np.asarray(grid, dtype=float)
    if rho.ndim != 1 or rho.size == 0:
        raise DomainError("residual grid must be a non-empty 1D sequence")
    if np.any(rho <= 0) or np.any(np.diff(rho) <= 0):
        raise DomainError("residual grid must be positive and strictly increasing")
    if isinstance(c, SeriesState):
        m, coeffs, norm = c.m, np.array([float(x) for x in c.coeffs]), 1.0
    else:
        m, coeffs, norm = c.m, np.asarray(c.poly_coeffs), c.normalization
    a, gg = float(alpha_bar), float(g)

    p = P.polyval(rho, coeffs)
    dp = P.polyval(rho, P.polyder(coeffs)) if coeffs.size > 1 else np.zeros_like(rho)
    d2p = P.polyval(rho, P.polyder(coeffs, 2)) if coeffs.size > 2 else np.zeros_like(rho)
    w = norm * rho**m * np.exp(-0.5 * rho**2)
    q = m / rho - rho  # w'/w
    phi = p
    dphi = q * p + dp
    d2phi = (q * q - m / rho**2 - 1.0) * p + 2.0 * q * dp + d2p
    r = w * (d2phi + dphi / rho - (m * m / rho**2) * phi + (a - rho**2 + gg / rho) * phi)
    l2 = math.sqrt(np.trapezoid(r * r * rho, rho)) if rho.size > 1 else float(abs(r[0]))
    return ResidualReport(float(np.max(np.abs(r))), l2)


@dataclass(frozen=True)
class TailVerdict:
    kind: str  # "terminates" | "grows" | "inconclusive"
    degree: int | None = None
    ratios: tuple[float, ...] = ()

    def __str__(self) -> str:
        return f"terminates at degree {self.degree}" if self.kind == "terminates" else self.kind


GROWTH_WINDOW = 10
GROWTH_RTOL = 0.10


def tail_diagnostic(s: SeriesState) -> TailVerdict:
    """Classify the tail of a series as terminating or ``exp(rho^2)``-like.

    Termination is decided by :func:`termination_degree` (exact zeros for
    ``Fraction`` coefficients).  Growth is recognised from the even-step ratio
    ``n a_{n+2} / (2 a_n)``, which tends to 1 for the coefficients of
    ``exp(rho^2)``; all ratios whose upper index lies in the last ten must be
    within 10 % of 1.  Such growth beats the Gaussian prefactor, so the
    resulting function is not normalizable.
    """
    if s.N < 20:
        raise InsufficientDataError(f"tail diagnosis needs N >= 20, got {s.N}")
    d = termination_degree(s)
    if d is not None:
        return TailVerdict("terminates", d)
    ratios = []
    for top in range(s.N - GROWTH_WINDOW + 1, s.N + 1):
        n = top - 2
        if n % 2 or n <= 0:
            continue
        a_n, a_top = s.coeffs[n], s.coeffs[top]
        if a_n == 0:
            return TailVerdict("inconclusive")
        ratios.append(float(n * a_top / (2 * a_n)))
    if ratios and all(abs(r - 1.0) <= GROWTH_RTOL for r in ratios):
        return TailVerdict("grows", None, tuple(ratios))
    return TailVerdict("inconclusive", None, tuple(ratios))


# --- nodes -----------------------------------------------------------------

ROOT_IMAG_TOL = 1e-10


def polynomial_nodes(c: Candidate) -> np.ndarray:
    """Strictly positive real roots of the polynomial factor, ascending, with multiplicity."""
    coeffs = np.trim_zeros(np.asarray(c.poly_coeffs, dtype=float), "b")
    if coeffs.size <= 1:
        return np.empty(0)
    roots = P.polyroots(coeffs)
    real = roots[np.abs(roots.imag) <= ROOT_IMAG_TOL * np.maximum(1.0, np.abs(roots))].real
    deriv = P.polyder(coeffs)
    polished = []
    for x in real:
        for _ in range(3):
            dp = P.polyval(x, deriv)
            if dp == 0:
                break
            x = x - P.polyval(x, coeffs) / dp
        polished.append(x)
    out = np.sort(np.array(polished))
    return out[out > 0]


def count_polynomial_nodes(c: Candidate) -> int:
    return int(polynomial_nodes(c).size)
