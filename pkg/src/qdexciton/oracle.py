"""Independent numerical eigensolvers for the scaled radial problem.

Two routes, sharing nothing but the equation:

* a conservative finite-difference discretisation of
  ``-(1/rho)(rho phi')' + (m^2/rho^2 + rho^2 - g/rho) phi = abar phi`` on the
  cell-centred grid ``rho_j = (j - 1/2) h``, symmetrised by ``u_j = sqrt(rho_j) phi_j``
  into a symmetric tridiagonal matrix, solved by Sturm bisection and
  Richardson-extrapolated in ``h``;
* Numerov shooting on ``u'' + [abar + g/rho - rho^2 - (m^2 - 1/4)/rho^2] u = 0``
  from both ends, matched at ``rho = 1.5``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from ._kernels import bisect_index, numerov_march
from .errors import BracketError, ConvergenceError, DomainError
from .series import coefficients

BISECT_TOL = 1e-12
NODE_FLOOR = 1e-8


@dataclass(frozen=True)
class GridSpec:
    r_max: float = 12.0
    n_points: int = 4000

    def __post_init__(self):
        if not self.r_max > 0:
            raise DomainError(f"r_max must be positive, got {self.r_max!r}")
        if self.n_points < 100:
            raise DomainError(f"n_points must be >= 100, got {self.n_points}")

    @property
    def h(self) -> float:
        # Dirichlet node sits at (n + 1/2) h = r_max
        return self.r_max / (self.n_points + 0.5)

    @property
    def grid(self) -> np.ndarray:
        return (np.arange(1, self.n_points + 1) - 0.5) * self.h

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.r_max, self.n_points * factor)


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    diag: np.ndarray
    offdiag: np.ndarray
    m: int | None = None
    g: float | None = None
    spec: GridSpec | None = None

    def __post_init__(self):
        if self.offdiag.shape[0] != self.diag.shape[0] - 1:
            raise DomainError("offdiag must be one shorter than diag")

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[:-1] += self.offdiag * u[1:]
        out[1:] += self.offdiag * u[:-1]
        return out


def discretize(m: int, g: float, spec: GridSpec = GridSpec()) -> TridiagonalOperator:
    """Symmetric tridiagonal matrix of the scaled radial operator.

    The flux form ``rho_{j+1/2} (phi_{j+1} - phi_j)`` with ``rho_{1/2} = 0``
    builds the regularity condition at the origin into the first row, so the
    scheme stays second order even for ``m = 0`` where ``u ~ sqrt(rho)``.
    """
    m = abs(int(m))
    h = spec.h
    rho = spec.grid
    faces = np.arange(1, spec.n_points) * h  # rho_{j+1/2}, j = 1..n-1
    diag = 2.0 / h**2 + m * m / rho**2 + rho**2 - g / rho
    off = -faces / (h**2 * np.sqrt(rho[:-1] * rho[1:]))
    return TridiagonalOperator(diag, off, m, float(g), spec)


def _gershgorin(op: TridiagonalOperator) -> tuple[float, float]:
    a = np.abs(op.offdiag)
    radius = np.zeros(op.size)
    radius[:-1] += a
    radius[1:] += a
    return float(np.min(op.diag - radius)), float(np.max(op.diag + radius))


def lowest_eigenvalues(op: TridiagonalOperator, k: int, tol: float = BISECT_TOL) -> np.ndarray:
    """The ``k`` smallest eigenvalues by Sturm-sequence bisection."""
    if not 1 <= k <= op.size:
        raise DomainError(f"k must lie in 1..{op.size}, got {k}")
    diag = np.ascontiguousarray(op.diag, dtype=np.float64)
    off2 = np.ascontiguousarray(op.offdiag, dtype=np.float64) ** 2
    lo, hi = _gershgorin(op)
    pad = 1e-9 * max(1.0, abs(lo), abs(hi))
    lo, hi = lo - pad, hi + pad
    pivmin = np.finfo(np.float64).tiny * max(1.0, float(off2.max()) if off2.size else 1.0)
    out = np.empty(k)
    for i in range(k):
        out[i], _ = bisect_index(diag, off2, i, lo if i == 0 else out[i - 1] - tol, hi, tol, pivmin)
    return out


@dataclass(frozen=True)
class GridEigenvalues:
    m: int
    g: float
    spec: GridSpec
    values: np.ndarray


def grid_eigenvalues(m: int, g: float, spec: GridSpec, k: int) -> GridEigenvalues:
    return GridEigenvalues(abs(int(m)), float(g), spec, lowest_eigenvalues(discretize(m, g, spec), k))


def refine(coarse: GridEigenvalues, fine: GridEigenvalues) -> tuple[np.ndarray, np.ndarray]:
    """Richardson step assuming an ``h^2`` leading error.

    Returns extrapolated values and the error estimate
    ``|E_fine - E_coarse| h_f^2 / (h_c^2 - h_f^2)``; for an exact halving of
    ``h`` these reduce to ``(4 E_fine - E_coarse)/3`` and ``|E_fine - E_coarse|/3``.
    """
    if (coarse.m, coarse.g, coarse.spec.r_max) != (fine.m, fine.g, fine.spec.r_max):
        raise DomainError("Richardson pair must share m, g and r_max")
    if fine.spec.n_points <= coarse.spec.n_points:
        raise DomainError("fine grid must have more points than the coarse grid")
    if coarse.values.shape != fine.values.shape:
        raise DomainError("Richardson pair must hold the same number of eigenvalues")
    hc2, hf2 = coarse.spec.h**2, fine.spec.h**2
    w = hf2 / (hc2 - hf2)
    diff = fine.values - coarse.values
    return fine.values + w * diff, np.abs(w * diff)


def eigenfunction(op: TridiagonalOperator, alpha_bar: float, tol: float = 1e-8, max_iter: int = 50) -> np.ndarray:
    """Inverse iteration at fixed shift ``alpha_bar``.

    Convergence is judged on ``||(A - lambda) u|| / ||u||`` with ``lambda`` the
    Rayleigh quotient.  The result is normalised to ``h * sum u^2 = 1`` (unit
    sum of squares when the operator carries no grid) and its first component
    above the noise floor is positive.
    """
    n = op.size
    ab = np.zeros((3, n))
    ab[0, 1:] = op.offdiag
    ab[2, :-1] = op.offdiag
    shift = float(alpha_bar)
    u = np.random.default_rng(0).standard_normal(n)
    u /= np.linalg.norm(u)
    for _ in range(max_iter):
        ab[1] = op.diag - shift
        try:
            v = solve_banded((1, 1), ab, u, check_finite=False)
        except LinAlgError:
            shift += 1e-12 * max(1.0, abs(shift))
            continue
        u = v / np.linalg.norm(v)
        Au = op.matvec(u)
        lam = float(u @ Au)
        if np.linalg.norm(Au - lam * u) < tol:
            break
    else:
        raise ConvergenceError(f"inverse iteration at shift {alpha_bar:.12g} did not converge in {max_iter} steps")
    weight = op.spec.h if op.spec is not None else 1.0
    u = u / math.sqrt(weight * float(u @ u))
    big = np.flatnonzero(np.abs(u) > NODE_FLOOR * np.max(np.abs(u)))
    if u[big[0]] < 0:
        u = -u
    return u


def count_grid_nodes(u: np.ndarray, floor: float = NODE_FLOOR) -> int:
    """Sign changes among components above ``floor * max|u|``."""
    u = np.asarray(u)
    kept = u[np.abs(u) > floor * np.max(np.abs(u))]
    return int(np.count_nonzero(np.signbit(kept[1:]) != np.signbit(kept[:-1])))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    m: int
    g: float
    eigenvalues: np.ndarray  # Richardson-extrapolated
    node_counts: tuple[int, ...]
    eigenfunctions: np.ndarray  # rows u_k on `grid` (fine grid)
    grid: np.ndarray
    h: float
    raw_eigenvalues: np.ndarray  # fine-grid values before extrapolation
    extrapolation_error: np.ndarray
    degenerate: tuple[bool, ...] = field(default=())

    @property
    def oscillation_ok(self) -> bool:
        return all(n == k for k, n in enumerate(self.node_counts))

    def phi(self, k: int) -> np.ndarray:
        return self.eigenfunctions[k] / np.sqrt(self.grid)

    def overlap(self, k: int, u_other: np.ndarray) -> float:
        """Cosine between eigenfunction ``k`` and ``u_other`` in the grid inner product."""
        u = self.eigenfunctions[k]
        return float(abs(u @ u_other) / math.sqrt((u @ u) * (u_other @ u_other)))

    def nearest(self, alpha_bar: float) -> tuple[int, float]:
        idx = int(np.argmin(np.abs(self.eigenvalues - alpha_bar)))
        return idx, float(abs(self.eigenvalues[idx] - alpha_bar))


def spectrum(m: int, g: float, k: int = 5, spec: GridSpec = GridSpec(), with_eigenfunctions: bool = True) -> SpectrumResult:
    """Lowest ``k`` levels at ``spec`` and ``spec.refined()``, extrapolated.

    Eigenfunctions and node counts come from the finer grid.
    """
    m = abs(int(m))
    fine_spec = spec.refined()
    coarse = grid_eigenvalues(m, g, spec, k)
    fine_op = discretize(m, g, fine_spec)
    fine = GridEigenvalues(m, float(g), fine_spec, lowest_eigenvalues(fine_op, k))
    values, errors = refine(coarse, fine)
    degenerate = np.zeros(k, dtype=bool)
    close = np.diff(fine.values) < 10 * BISECT_TOL * np.maximum(1.0, np.abs(fine.values[1:]))
    degenerate[:-1] |= close
    degenerate[1:] |= close
    if with_eigenfunctions:
        vecs = np.array([eigenfunction(fine_op, lam) for lam in fine.values])
        nodes = tuple(count_grid_nodes(v) for v in vecs)
    else:
        vecs = np.empty((0, fine_spec.n_points))
        nodes = ()
    return SpectrumResult(
        m=m,
        g=float(g),
        eigenvalues=values,
        node_counts=nodes,
        eigenfunctions=vecs,
        grid=fine_spec.grid,
        h=fine_spec.h,
        raw_eigenvalues=fine.values,
        extrapolation_error=errors,
        degenerate=tuple(bool(x) for x in degenerate),
    )


# --- Numerov shooting ------------------------------------------------------

R_MATCH = 1.5
R_START = 0.1
NUMEROV_H = 1e-3


def _k2(rho: np.ndarray, m: int, g: float, alpha_bar: float) -> np.ndarray:
    return alpha_bar + g / rho - rho**2 - (m * m - 0.25) / rho**2


def _deriv5(y: np.ndarray, i: int, h: float) -> float:
    return (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h)


def matching_defect(
    m: int,
    g: float,
    alpha_bar: float,
    r_match: float = R_MATCH,
    r_max: float = 12.0,
    h: float = NUMEROV_H,
) -> float:
    """Sine of the angle between outward and inward ``(u, u')`` at ``r_match``.

    Zero exactly when the logarithmic derivatives agree, and free of the
    poles a plain log-derivative difference has where ``u`` vanishes.
    """
    m = abs(int(m))
    n_out = max(4, round((r_match - R_START) / h))
    h_out = (r_match - R_START) / n_out
    rho_out = R_START + h_out * np.arange(n_out + 3)
    state = coefficients(m, g, alpha_bar, 40)
    c = np.array(state.coeffs, dtype=float)
    head = rho_out[:2]
    u_head = np.sqrt(head) * head**m * np.exp(-0.5 * head**2) * np.polynomial.polynomial.polyval(head, c)
    y_out = numerov_march(_k2(rho_out, m, g, alpha_bar), u_head[0], u_head[1], h_out)

    n_in = max(4, round((r_max - r_match) / h))
    h_in = (r_max - r_match) / n_in
    rho_in = r_max - h_in * np.arange(n_in + 3)
    y_in = numerov_march(_k2(rho_in, m, g, alpha_bar), 0.0, 1e-30, h_in)

    uo, do = y_out[n_out], _deriv5(y_out, n_out, h_out)
    ui, di = y_in[n_in], -_deriv5(y_in, n_in, h_in)
    return (do * ui - di * uo) / math.sqrt((uo * uo + do * do) * (ui * ui + di * di))


def numerov_crosscheck(
    m: int,
    g: float,
    bracket: tuple[float, float],
    tol: float = 1e-12,
    samples: int = 16,
    **kwargs,
) -> float:
    """Eigenvalue inside ``bracket`` by bisection on :func:`matching_defect`.

    Raises
    ------
    BracketError
        When the sampled defect does not change sign exactly once.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise BracketError(f"empty bracket {bracket!r}")
    xs = np.linspace(lo, hi, samples + 1)
    ds = np.array([matching_defect(m, g, x, **kwargs) for x in xs])
    flips = np.flatnonzero(np.signbit(ds[1:]) != np.signbit(ds[:-1]))
    if flips.size != 1:
        raise BracketError(f"defect changes sign {flips.size} times in [{lo}, {hi}] (m={m}, g={g})")
    i = int(flips[0])
    a, b, da = xs[i], xs[i + 1], ds[i]
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a <= tol or mid in (a, b):
            break
        dm = matching_defect(m, g, mid, **kwargs)
        if dm == 0:
            return mid
        if np.signbit(dm) == np.signbit(da):
            a, da = mid, dm
        else:
            b = mid
    return 0.5 * (a + b)


def numerov_eigenvalues(m: int, g: float, approx) -> np.ndarray:
    """Numerov eigenvalues near each of ``approx`` (ascending, well separated)."""
    approx = np.asarray(approx, dtype=float)
    gaps = np.diff(approx)
    out = []
    for i, e in enumerate(approx):
        left = gaps[i - 1] / 2 if i > 0 else (gaps[0] / 2 if gaps.size else 1.0)
        right = gaps[i] / 2 if i < gaps.size else left
        out.append(numerov_crosscheck(m, g, (e - left, e + right)))
    return np.array(out)
