"""Independent reference implementations used only by the test suite.

Everything here is deliberately naive: direct sums, explicit Python loops,
and high-precision quadrature through mpmath. The only numpy use is RNG and
array-to-list conversion, so a bug in the package's vectorised or jitted
code cannot be mirrored here.
"""

from __future__ import annotations

import json
from pathlib import Path

import mpmath as mp
import numpy as np

DATA_DIR = Path(__file__).parent / "data"
TAIL_ORACLE_PATH = DATA_DIR / "tail_oracle.json"


def chi2_sf_quad(x: float, k: int, dps: int = 40) -> float:
    """Upper chi-square tail by integrating the density out to infinity."""
    with mp.workdps(dps):
        xm = mp.mpf(x)
        km = mp.mpf(k)
        if xm <= 0:
            return 1.0
        norm = mp.mpf(2) ** (km / 2) * mp.gamma(km / 2)

        def dens(t):
            return t ** (km / 2 - 1) * mp.e ** (-t / 2) / norm

        return float(mp.quad(dens, [xm, mp.inf]))


def f_sf_quad(x: float, d1: int, d2: int, dps: int = 40) -> float:
    """Upper F tail by integrating the density out to infinity."""
    with mp.workdps(dps):
        xm = mp.mpf(x)
        a = mp.mpf(d1)
        b = mp.mpf(d2)
        if xm <= 0:
            return 1.0
        const = (
            mp.gamma((a + b) / 2)
            / (mp.gamma(a / 2) * mp.gamma(b / 2))
            * (a / b) ** (a / 2)
        )

        def dens(t):
            return const * t ** (a / 2 - 1) * (1 + a * t / b) ** (-(a + b) / 2)

        return float(mp.quad(dens, [xm, mp.inf]))


def normal_quantile_mp(p: float, dps: int = 40) -> float:
    with mp.workdps(dps):
        return float(mp.sqrt(2) * mp.erfinv(2 * mp.mpf(p) - 1))


def ljung_box_stat_direct(values, lags: int) -> float:
    """O(n^2) direct-sum form of the portmanteau statistic."""
    x = [float(v) for v in values]
    n = len(x)
    mean = sum(x) / n
    d = [v - mean for v in x]
    denom = sum(v * v for v in d)
    total = 0.0
    for k in range(1, lags + 1):
        num = sum(d[i] * d[i - k] for i in range(k, n))
        r = num / denom
        total += r * r / (n - k)
    return n * (n + 2) * total


def anova_f_direct(groups) -> tuple[float, int, int]:
    """Hand-built one-way F ratio: between and within sums of squares."""
    groups = [[float(v) for v in g] for g in groups]
    all_values = [v for g in groups for v in g]
    grand = sum(all_values) / len(all_values)
    ssb = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ssw = sum(sum((v - sum(g) / len(g)) ** 2 for v in g) for g in groups)
    df1 = len(groups) - 1
    df2 = len(all_values) - len(groups)
    f = (ssb / df1) / (ssw / df2)
    return f, df1, df2


def _median_direct(values) -> float:
    s = sorted(values)
    n = len(s)
    mid = n // 2
    if n % 2 == 1:
        return s[mid]
    return 0.5 * (s[mid - 1] + s[mid])


def levene_f_direct(groups, center: str = "median") -> tuple[float, int, int]:
    """Spread test as an F ratio on absolute deviations from a group center."""
    transformed = []
    for g in groups:
        g = [float(v) for v in g]
        if center == "median":
            c = _median_direct(g)
        else:
            c = sum(g) / len(g)
        transformed.append([abs(v - c) for v in g])
    return anova_f_direct(transformed)


def midranks_direct(values) -> list[float]:
    """Average ranks (1-based) with explicit tie runs over a sorted copy."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def fligner_stat_direct(groups, dps: int = 30) -> tuple[float, int]:
    """Rank-based normal-scores spread statistic with mpmath quantiles."""
    groups = [[float(v) for v in g] for g in groups]
    devs = []
    sizes = []
    for g in groups:
        med = _median_direct(g)
        devs.extend(abs(v - med) for v in g)
        sizes.append(len(g))
    n_total = len(devs)
    ranks = midranks_direct(devs)
    scores = [
        normal_quantile_mp(0.5 + r / (2.0 * (n_total + 1)), dps=dps) for r in ranks
    ]
    grand = sum(scores) / n_total
    var = sum((s - grand) ** 2 for s in scores) / (n_total - 1)
    stat = 0.0
    pos = 0
    for size in sizes:
        chunk = scores[pos : pos + size]
        pos += size
        gm = sum(chunk) / size
        stat += size * (gm - grand) ** 2
    return stat / var, len(groups) - 1


def spearman_direct(x, y) -> float:
    """Pearson correlation of midranks, written with plain sums."""
    rx = midranks_direct([float(v) for v in x])
    ry = midranks_direct([float(v) for v in y])
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = (
        sum((a - mx) ** 2 for a in rx) ** 0.5
        * sum((b - my) ** 2 for b in ry) ** 0.5
    )
    return num / den


def tail_grid() -> tuple[list[tuple[float, int]], list[tuple[float, int, int]]]:
    """Deterministic evaluation grid covering the ranges the pipeline hits."""
    chi_pts: list[tuple[float, int]] = [
        (0.001, 1),
        (0.5, 1),
        (1.0, 2),
        (2.5, 2),
        (5.0, 3),
        (10.0, 5),
        (18.3, 10),
        (31.4, 10),
        (45.0, 20),
        (80.0, 30),
    ]
    rng = np.random.default_rng(20240811)
    while len(chi_pts) < 100:
        k = int(rng.integers(1, 31))
        x = float(rng.uniform(0.01, 4.0 * k))
        chi_pts.append((x, k))

    f_pts: list[tuple[float, int, int]] = [
        (0.01, 1, 10),
        (0.5, 2, 20),
        (1.0, 3, 30),
        (2.0, 4, 40),
        (4.0, 5, 50),
        (8.0, 9, 9),
        (15.0, 1, 5),
        (30.0, 2, 8),
        (0.1, 14, 100),
        (6.5, 7, 3),
    ]
    while len(f_pts) < 100:
        d1 = int(rng.integers(1, 21))
        d2 = int(rng.integers(2, 61))
        x = float(rng.uniform(0.01, 12.0))
        f_pts.append((x, d1, d2))
    return chi_pts, f_pts


def generate_tail_oracle(path: Path = TAIL_ORACLE_PATH) -> dict:
    chi_pts, f_pts = tail_grid()
    payload = {
        "chi_square": [[x, k, chi2_sf_quad(x, k)] for x, k in chi_pts],
        "f": [[x, d1, d2, f_sf_quad(x, d1, d2)] for x, d1, d2 in f_pts],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return payload


def load_tail_oracle(path: Path = TAIL_ORACLE_PATH) -> dict:
    return json.loads(path.read_text())


if __name__ == "__main__":
    generate_tail_oracle()
    print(f"wrote {TAIL_ORACLE_PATH}")
