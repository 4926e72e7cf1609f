"""Hypothesis-test layer: statistics, p-values, invariances, calibration."""

from __future__ import annotations

import numpy as np
import pytest

from winnbeta.errors import DegenerateSeriesError, GroupSizeError, ParameterError
from winnbeta.stats_tests import (
    VARIANCE_TEST_KINDS,
    GroupedSample,
    TestKind,
    anova_oneway,
    default_lags,
    fligner_killeen,
    levene,
    ljung_box,
    midranks,
    variance_homogeneity,
)
from winnbeta.tails import chi_square_sf

from .oracles import (
    anova_f_direct,
    chi2_sf_quad,
    f_sf_quad,
    fligner_stat_direct,
    levene_f_direct,
    ljung_box_stat_direct,
    midranks_direct,
)


def grouped(*groups):
    return GroupedSample(
        [f"P{i+1}" for i in range(len(groups))],
        [np.asarray(g, dtype=float) for g in groups],
    )


def test_default_lags_rule():
    assert default_lags(50) == 10
    assert default_lags(96) == 10
    assert default_lags(20) == 4
    assert default_lags(5) == 1
    with pytest.raises(ParameterError):
        default_lags(4)


def test_midranks_match_direct():
    rng = np.random.default_rng(3)
    for _ in range(30):
        x = rng.integers(0, 6, size=int(rng.integers(2, 40))).astype(float)
        np.testing.assert_array_equal(midranks(x), midranks_direct(x.tolist()))


def test_ljung_box_alternating_series_rejects():
    x = np.array([1.0, -1.0] * 25)
    result = ljung_box(x, 5)
    assert result.p_value < 1e-10
    assert result.kind is TestKind.LJUNG_BOX
    assert result.dof == (5,)


def test_ljung_box_linear_ramp_rejects():
    result = ljung_box(np.arange(1.0, 101.0), 5)
    assert result.p_value < 1e-10


def test_ljung_box_matches_direct_sum_oracle():
    rng = np.random.default_rng(17)
    for _ in range(25):
        n = int(rng.integers(20, 90))
        x = rng.normal(size=n) + np.sin(np.linspace(0, 3, n)) * rng.uniform(0, 2)
        lags = default_lags(n)
        result = ljung_box(x, lags)
        stat = ljung_box_stat_direct(x, lags)
        assert result.statistic == pytest.approx(stat, rel=1e-10)
        assert result.p_value == pytest.approx(chi2_sf_quad(stat, lags, dps=30), abs=1e-10)


def test_ljung_box_iid_calibration():
    rng = np.random.default_rng(2024)
    ok = 0
    for _ in range(100):
        if ljung_box(rng.normal(size=500), 10).p_value > 0.01:
            ok += 1
    assert ok >= 95


def test_ljung_box_shift_scale_invariance():
    rng = np.random.default_rng(8)
    x = rng.normal(size=60)
    base = ljung_box(x, 10).statistic
    assert ljung_box(x + 1000.0, 10).statistic == pytest.approx(base, rel=1e-12)
    assert ljung_box(x * -3.25, 10).statistic == pytest.approx(base, rel=1e-12)


def test_ljung_box_errors():
    with pytest.raises(DegenerateSeriesError):
        ljung_box(np.full(30, 2.5), 5)
    with pytest.raises(ParameterError):
        ljung_box(np.arange(10.0), 10)
    with pytest.raises(ParameterError):
        ljung_box(np.arange(10.0), 0)


def test_anova_hand_value():
    result = anova_oneway(grouped([1, 2, 3], [4, 5, 6]))
    assert result.statistic == pytest.approx(13.5, rel=1e-12)
    assert result.dof == (1, 4)
    assert result.p_value == pytest.approx(f_sf_quad(13.5, 1, 4), abs=1e-10)


def test_anova_identical_groups():
    result = anova_oneway(grouped([1, 2, 3], [1, 2, 3]))
    assert result.statistic == 0.0
    assert result.p_value == 1.0


def test_anova_zero_within_spread():
    result = anova_oneway(grouped([5, 5], [7, 7]))
    assert result.p_value == 0.0
    assert result.degenerate
    with pytest.raises(DegenerateSeriesError):
        anova_oneway(grouped([5, 5], [5, 5]))


def test_anova_affine_invariance():
    rng = np.random.default_rng(9)
    groups = [rng.normal(loc=i, size=12) for i in range(4)]
    base = anova_oneway(grouped(*groups)).statistic
    shifted = anova_oneway(grouped(*[g * 7.5 - 3.1 for g in groups])).statistic
    assert shifted == pytest.approx(base, rel=1e-10)


def test_anova_matches_direct_oracle():
    rng = np.random.default_rng(21)
    for _ in range(20):
        groups = [
            rng.normal(loc=rng.normal(), size=int(rng.integers(3, 12)))
            for _ in range(int(rng.integers(2, 6)))
        ]
        result = anova_oneway(grouped(*groups))
        f, d1, d2 = anova_f_direct([g.tolist() for g in groups])
        assert result.statistic == pytest.approx(f, rel=1e-10)
        assert result.dof == (d1, d2)


def test_levene_identical_groups():
    result = levene(grouped([1, 2, 3], [1, 2, 3]), center="median")
    assert result.statistic == pytest.approx(0.0, abs=1e-12)
    assert result.p_value == pytest.approx(1.0)


def test_levene_mean_hand_value():
    # deviations {1,0,1} vs {10,0,10}; F = 648/202 by direct arithmetic
    result = levene(grouped([1, 2, 3], [10, 20, 30]), center="mean")
    assert result.statistic == pytest.approx(648.0 / 202.0, rel=1e-12)
    f, _, _ = levene_f_direct([[1, 2, 3], [10, 20, 30]], center="mean")
    assert result.statistic == pytest.approx(f, rel=1e-12)
    assert result.kind is TestKind.LEVENE_MEAN


def test_levene_matches_direct_oracle():
    rng = np.random.default_rng(33)
    for center in ("median", "mean"):
        for _ in range(15):
            groups = [
                (rng.normal(size=int(rng.integers(4, 15))) * rng.uniform(0.5, 3)).tolist()
                for _ in range(int(rng.integers(2, 5)))
            ]
            result = levene(grouped(*groups), center=center)
            f, d1, d2 = levene_f_direct(groups, center=center)
            assert result.statistic == pytest.approx(f, rel=1e-10)
            assert result.p_value == pytest.approx(f_sf_quad(f, d1, d2, dps=30), abs=1e-8)


def test_levene_errors():
    with pytest.raises(GroupSizeError):
        levene(grouped([1.0], [2, 3, 4]))
    with pytest.raises(GroupSizeError):
        levene(GroupedSample(["only"], [np.array([1.0, 2.0])]))
    with pytest.raises(DegenerateSeriesError):
        levene(grouped([5, 5, 5], [7, 7, 7]))


def test_fligner_identical_groups():
    result = fligner_killeen(grouped([1, 2, 3], [1, 2, 3]))
    assert result.statistic == pytest.approx(0.0, abs=1e-12)
    assert result.p_value == pytest.approx(1.0)


def test_fligner_detects_spread_ratio():
    rng = np.random.default_rng(12)
    a = rng.normal(size=30)
    b = rng.normal(size=30) * 100.0
    assert fligner_killeen(grouped(a, b)).p_value < 1e-6


def test_fligner_matches_direct_oracle():
    rng = np.random.default_rng(29)
    for _ in range(10):
        groups = [
            (rng.normal(size=int(rng.integers(5, 14))) * rng.uniform(0.5, 2)).tolist()
            for _ in range(int(rng.integers(2, 5)))
        ]
        result = fligner_killeen(grouped(*groups))
        stat, df = fligner_stat_direct(groups, dps=25)
        assert result.statistic == pytest.approx(stat, rel=1e-10)
        assert result.dof == (df,)
        assert result.p_value == pytest.approx(chi2_sf_quad(stat, df, dps=25), abs=1e-8)


def test_fligner_same_distribution_calibration():
    rng = np.random.default_rng(2025)
    ok = 0
    for _ in range(100):
        groups = [rng.normal(size=50) for _ in range(3)]
        if fligner_killeen(grouped(*groups)).p_value > 0.01:
            ok += 1
    assert ok >= 95


def test_spread_tests_ignore_group_mean_shifts():
    rng = np.random.default_rng(14)
    groups = [rng.normal(size=20) for _ in range(3)]
    shifted = [g + off for g, off in zip(groups, (0.0, 55.0, -120.0))]
    assert levene(grouped(*shifted), center="median").statistic == pytest.approx(
        levene(grouped(*groups), center="median").statistic, rel=1e-9
    )
    # rounding in the shifted deviations can swap adjacent ranks, so the
    # rank-based statistic is only approximately shift invariant
    assert fligner_killeen(grouped(*shifted)).statistic == pytest.approx(
        fligner_killeen(grouped(*groups)).statistic, rel=1e-4
    )


def test_false_positive_rates_near_alpha():
    rng = np.random.default_rng(777)
    hits = {"lb": 0, "flig": 0, "lev": 0, "anova": 0}
    trials = 1000
    for _ in range(trials):
        x = rng.normal(size=50)
        if ljung_box(x, 10).p_value < 0.05:
            hits["lb"] += 1
        groups = [rng.normal(size=40) for _ in range(3)]
        sample = grouped(*groups)
        if fligner_killeen(sample).p_value < 0.05:
            hits["flig"] += 1
        if levene(sample, center="median").p_value < 0.05:
            hits["lev"] += 1
        if anova_oneway(sample).p_value < 0.05:
            hits["anova"] += 1
    for name, count in hits.items():
        assert 0.02 <= count / trials <= 0.09, (name, count)


def test_tail_monotonicity():
    xs = np.linspace(0.0, 40.0, 200)
    ps = [chi_square_sf(x, 7) for x in xs]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def test_variance_homogeneity_dispatch():
    sample = grouped([1, 2, 3, 4], [2, 4, 6, 8])
    assert set(VARIANCE_TEST_KINDS) == {"fligner", "levene-median", "levene-mean"}
    assert variance_homogeneity(sample, "fligner").kind is TestKind.FLIGNER_KILLEEN
    assert variance_homogeneity(sample, "levene-median").kind is TestKind.LEVENE_MEDIAN
    assert variance_homogeneity(sample, "levene-mean").kind is TestKind.LEVENE_MEAN
    with pytest.raises(ParameterError):
        variance_homogeneity(sample, "bartlett")


def test_grouped_sample_from_series():
    from winnbeta.data_model import MetaboliteSeries

    series = MetaboliteSeries(
        "M",
        np.arange(6.0),
        np.array(["B", "B", "A", "A", "B", "A"], dtype=object),
        np.arange(1, 7),
    )
    sample = GroupedSample.from_series(series)
    # first-appearance order, not alphabetical
    assert sample.labels == ["B", "A"]
    np.testing.assert_array_equal(sample.groups[0], [0.0, 1.0, 4.0])
    np.testing.assert_array_equal(sample.groups[1], [2.0, 3.0, 5.0])
