"""Compiled inner loops for the eigenvalue oracles."""
import numpy as np
from numba import njit

_TINY = np.finfo(np.float64).tiny


@njit(cache=True)
def sturm_count(diag, off2, x, pivmin):
    """Number of eigenvalues of the symmetric tridiagonal matrix strictly below ``x``.

    ``off2`` holds the squared off-diagonal entries.
    """
    n = diag.shape[0]
    count = 0
    q = diag[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for j in range(1, n):
        q = diag[j] - x - off2[j - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def bisect_index(diag, off2, k, lo, hi, tol, pivmin):
    """Bisect for the ``k``-th (0-based) eigenvalue inside ``[lo, hi]``."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid <= lo or mid >= hi:
            break
        if sturm_count(diag, off2, mid, pivmin) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), hi - lo


@njit(cache=True)
def numerov_march(k2, y0, y1, h):
    """March ``y'' = -k2 y`` over equally spaced samples of ``k2``."""
    n = k2.shape[0]
    y = np.empty(n)
    y[0] = y0
    y[1] = y1
    c = h * h / 12.0
    for i in range(1, n - 1):
        y[i + 1] = (2.0 * y[i] * (1.0 - 5.0 * c * k2[i]) - y[i - 1] * (1.0 + c * k2[i - 1])) / (1.0 + c * k2[i + 1])
    return y
