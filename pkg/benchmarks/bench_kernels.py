"""Time the numba kernels against their pure NumPy twins.

Run as ``python3 benchmarks/bench_kernels.py``; pass ``--repeats`` to
change the sample count.  Set WINNBETA_DISABLE_NUMBA=1 to see the
fallback only.
"""

import argparse
import timeit

import numpy as np

from winnbeta.backend import NUMBA_ENABLED
from winnbeta.kernels import (
    bspline_design_loops,
    bspline_design_numpy,
    ljung_box_q_loops,
    ljung_box_q_numpy,
)


def cubic_knots(n_interior: int) -> np.ndarray:
    interior = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
    return np.concatenate([np.zeros(4), interior, np.ones(4)])


def best_of(func, repeats: int) -> float:
    timer = timeit.Timer(func)
    loops, _ = timer.autorange()
    return min(timer.repeat(repeats, loops)) / loops


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = []
    for n in (48, 96, 480):
        values = rng.normal(size=n)
        lags = min(10, n // 5)
        cases.append(
            (
                f"ljung_box_q n={n} lags={lags}",
                lambda v=values, l=lags: ljung_box_q_numpy(v, l),
                lambda v=values, l=lags: ljung_box_q_loops(v, l),
                lambda v=values, l=lags: (
                    ljung_box_q_numpy(v, l) - ljung_box_q_loops(v, l)
                ),
            )
        )
    for n, df in ((48, 6), (96, 10), (96, 15)):
        t = np.arange(n, dtype=np.float64) / (n - 1)
        knots = cubic_knots(df - 4)
        cases.append(
            (
                f"bspline_design n={n} df={df}",
                lambda t=t, k=knots: bspline_design_numpy(t, k),
                lambda t=t, k=knots: bspline_design_loops(t, k),
                lambda t=t, k=knots: np.max(
                    np.abs(bspline_design_numpy(t, k) - bspline_design_loops(t, k))
                ),
            )
        )

    backend = "numba" if NUMBA_ENABLED else "python loops (numba disabled)"
    print(f"loops backend: {backend}")
    header = f"{'kernel':32} {'numpy':>12} {'loops':>12} {'speedup':>9} {'max diff':>10}"
    print(header)
    print("-" * len(header))
    for name, numpy_func, loops_func, diff_func in cases:
        loops_func()  # compile before timing
        t_numpy = best_of(numpy_func, args.repeats)
        t_loops = best_of(loops_func, args.repeats)
        diff = float(np.max(np.abs(diff_func())))
        print(
            f"{name:32} {t_numpy * 1e6:9.2f} us {t_loops * 1e6:9.2f} us "
            f"{t_numpy / t_loops:8.1f}x {diff:10.2e}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
