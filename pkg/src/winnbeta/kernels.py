"""Hot numeric kernels, each in a numba and a pure NumPy variant.

The active variant is bound at import time from :mod:`winnbeta.backend`;
both variants stay importable so the test suite and the benchmark can
compare them on identical inputs.
"""

import numpy as np

from .backend import NUMBA_ENABLED

__all__ = [
    "ljung_box_q",
    "ljung_box_q_numpy",
    "ljung_box_q_loops",
    "bspline_design",
    "bspline_design_numpy",
    "bspline_design_loops",
]


def ljung_box_q_numpy(values: np.ndarray, lags: int) -> float:
    """Portmanteau statistic n(n+2) * sum_k r_k^2 / (n-k) on the centered series.

    Autocorrelations use the biased estimator (denominator n via the total
    sum of squares), matching the classical definition.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    x = x - x.mean()
    denom = float(x @ x)
    q = 0.0
    for k in range(1, lags + 1):
        r = float(x[k:] @ x[:-k]) / denom
        q += r * r / (n - k)
    return n * (n + 2.0) * q


def _ljung_box_q_impl(values, lags):
    n = values.shape[0]
    mean = 0.0
    for i in range(n):
        mean += values[i]
    mean /= n
    denom = 0.0
    for i in range(n):
        d = values[i] - mean
        denom += d * d
    q = 0.0
    for k in range(1, lags + 1):
        acc = 0.0
        for t in range(k, n):
            acc += (values[t] - mean) * (values[t - k] - mean)
        r = acc / denom
        q += r * r / (n - k)
    return n * (n + 2.0) * q


def bspline_design_numpy(t: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Cubic B-spline basis matrix via the Cox-de Boor recurrence, vectorized.

    ``knots`` is a full clamped vector (first and last values repeated four
    times); the result has ``knots.size - 4`` columns.
    """
    t = np.asarray(t, dtype=np.float64)
    knots = np.asarray(knots, dtype=np.float64)
    m = knots.size
    basis = ((t[:, None] >= knots[None, :-1]) & (t[:, None] < knots[None, 1:])).astype(np.float64)
    # close the last non-degenerate interval on the right so t == knots[-1] is covered
    nonzero = np.nonzero(knots[:-1] < knots[1:])[0]
    basis[t == knots[-1], nonzero[-1]] = 1.0
    for k in range(1, 4):
        nxt = np.zeros((t.size, m - k - 1))
        for j in range(m - k - 1):
            den_left = knots[j + k] - knots[j]
            den_right = knots[j + k + 1] - knots[j + 1]
            if den_left > 0.0:
                nxt[:, j] += (t - knots[j]) / den_left * basis[:, j]
            if den_right > 0.0:
                nxt[:, j] += (knots[j + k + 1] - t) / den_right * basis[:, j + 1]
        basis = nxt
    return basis


def _bspline_design_impl(t, knots):
    # De Boor basis evaluation, one knot span per point
    n_pts = t.shape[0]
    nb = knots.shape[0] - 4
    p = 3
    out = np.zeros((n_pts, nb))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    vals = np.zeros(p + 1)
    for i in range(n_pts):
        u = t[i]
        if u >= knots[nb]:
            span = nb - 1
        else:
            span = p
            while knots[span + 1] <= u:
                span += 1
        vals[0] = 1.0
        for j in range(1, p + 1):
            left[j] = u - knots[span + 1 - j]
            right[j] = knots[span + j] - u
            saved = 0.0
            for r in range(j):
                temp = vals[r] / (right[r + 1] + left[j - r])
                vals[r] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            vals[j] = saved
        for r in range(p + 1):
            out[i, span - p + r] = vals[r]
    return out


if NUMBA_ENABLED:
    from numba import njit

    ljung_box_q_loops = njit(cache=True)(_ljung_box_q_impl)
    bspline_design_loops = njit(cache=True)(_bspline_design_impl)
    ljung_box_q = ljung_box_q_loops
    bspline_design = bspline_design_loops
else:
    ljung_box_q_loops = _ljung_box_q_impl
    bspline_design_loops = _bspline_design_impl
    ljung_box_q = ljung_box_q_numpy
    bspline_design = bspline_design_numpy
