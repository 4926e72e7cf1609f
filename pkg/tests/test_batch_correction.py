"""Plate-level spread and mean gates."""

from __future__ import annotations

import numpy as np
import pytest

from winnbeta.batch_correction import (
    equalize_plates,
    residualize_by_plate,
    variance_normalize,
)
from winnbeta.data_model import MetaboliteSeries
from winnbeta.errors import DegeneratePlateError, GroupSizeError, ParameterError


def series_from_plates(plates, name="M"):
    values = np.concatenate([np.asarray(v, dtype=float) for v in plates.values()])
    labels = np.concatenate(
        [np.full(len(v), lab, dtype=object) for lab, v in plates.items()]
    )
    return MetaboliteSeries(name, values, labels, np.arange(1, values.size + 1))


def test_variance_gate_stays_quiet_on_homogeneous_plates():
    rng = np.random.default_rng(100)
    series = series_from_plates({f"P{i}": rng.normal(size=48) for i in range(4)})
    out, state = variance_normalize(series)
    assert not state.variance_normalized
    assert state.variance_test is not None and state.variance_test.p_value >= 0.05
    np.testing.assert_array_equal(out.values, series.values)


def test_variance_gate_fires_and_unitizes_plate_sds():
    rng = np.random.default_rng(101)
    series = series_from_plates(
        {"A": rng.normal(scale=1.0, size=48), "B": rng.normal(scale=10.0, size=48)}
    )
    out, state = variance_normalize(series)
    assert state.variance_normalized
    assert state.variance_test.p_value < 0.05
    for lab in ("A", "B"):
        sd = out.values[series.plate_mask(lab)].std(ddof=1)
        assert sd == pytest.approx(1.0, rel=1e-10)
        assert state.plate_sds[lab] > 0
    # recorded SDs replay the transform exactly
    rebuilt = series.values.copy()
    for lab, sd in state.plate_sds.items():
        rebuilt[series.plate_mask(lab)] /= sd
    np.testing.assert_array_equal(rebuilt, out.values)


def test_variance_gate_singleton_plate_is_an_error():
    series = series_from_plates({"A": [1.0, 2.0, 3.0], "B": [9.0]})
    with pytest.raises(GroupSizeError):
        variance_normalize(series)


def test_variance_gate_single_plate_study_flagged():
    series = series_from_plates({"A": [1.0, 2.0, 3.0, 4.0]})
    out, state = variance_normalize(series)
    assert any(f.startswith("variance_gate_skipped") for f in state.flags)
    np.testing.assert_array_equal(out.values, series.values)


def test_variance_gate_constant_series_flagged():
    series = series_from_plates({"A": [5.0] * 4, "B": [5.0] * 4})
    out, state = variance_normalize(series)
    assert any(f.startswith("variance_gate_skipped") for f in state.flags)
    assert not state.variance_normalized


def test_variance_gate_zero_spread_plate_named():
    rng = np.random.default_rng(102)
    series = series_from_plates(
        {"LIVE": rng.normal(scale=10.0, size=24), "DEAD": [3.0] * 24}
    )
    with pytest.raises(DegeneratePlateError, match="DEAD"):
        variance_normalize(series)


def test_residualize_fires_and_zeros_plate_means():
    rng = np.random.default_rng(103)
    series = series_from_plates(
        {"A": rng.normal(loc=0.0, size=30), "B": rng.normal(loc=100.0, size=30)}
    )
    out, state = residualize_by_plate(series)
    assert state.residualized
    for lab in ("A", "B"):
        assert abs(out.values[series.plate_mask(lab)].mean()) < 1e-10
    rebuilt = series.values.copy()
    for lab, m in state.plate_means.items():
        rebuilt[series.plate_mask(lab)] -= m
    np.testing.assert_array_equal(rebuilt, out.values)


def test_residualize_calibrated_on_centered_plates():
    rng = np.random.default_rng(104)
    quiet = 0
    for _ in range(100):
        plates = {f"P{i}": rng.normal(size=20) for i in range(3)}
        _, state = residualize_by_plate(series_from_plates(plates))
        if not state.residualized:
            quiet += 1
    assert quiet >= 95


def test_residualize_single_plate_noop():
    series = series_from_plates({"A": [1.0, 2.0, 3.0]})
    out, state = residualize_by_plate(series)
    assert any(f.startswith("mean_gate_skipped") for f in state.flags)
    np.testing.assert_array_equal(out.values, series.values)


def test_residualize_equal_constant_plates_flagged():
    series = series_from_plates({"A": [5.0, 5.0], "B": [5.0, 5.0]})
    out, state = residualize_by_plate(series)
    assert any(f.startswith("mean_gate_skipped") for f in state.flags)
    assert not state.residualized
    np.testing.assert_array_equal(out.values, series.values)


def test_residualize_distinct_constant_plates_fire():
    # zero within-plate spread with real between-plate separation: the mean
    # test reports p = 0 with a degeneracy note and the correction applies
    series = series_from_plates({"A": [5.0, 5.0], "B": [7.0, 7.0]})
    out, state = residualize_by_plate(series)
    assert state.residualized
    assert state.mean_test.degenerate
    assert "mean_test_degenerate" in state.flags
    np.testing.assert_array_equal(out.values, np.zeros(4))


def test_alpha_validation():
    series = series_from_plates({"A": [1.0, 2.0], "B": [3.0, 4.0]})
    for bad in (0.0, 1.0, -0.1, float("nan")):
        with pytest.raises(ParameterError):
            variance_normalize(series, alpha=bad)
        with pytest.raises(ParameterError):
            residualize_by_plate(series, alpha=bad)


def test_equalize_reaches_all_four_outcomes():
    rng = np.random.default_rng(105)

    quiet = series_from_plates({f"P{i}": rng.normal(size=48) for i in range(3)})
    _, state = equalize_plates(quiet)
    assert (state.variance_normalized, state.residualized) == (False, False)

    spread_only = series_from_plates(
        {"A": rng.normal(scale=1.0, size=48), "B": rng.normal(scale=6.0, size=48)}
    )
    _, state = equalize_plates(spread_only)
    assert state.variance_normalized and not state.residualized

    shift_only = series_from_plates(
        {"A": rng.normal(loc=0.0, size=48), "B": rng.normal(loc=5.0, size=48)}
    )
    _, state = equalize_plates(shift_only)
    assert not state.variance_normalized and state.residualized

    both = series_from_plates(
        {"A": rng.normal(loc=0.0, scale=1.0, size=48),
         "B": rng.normal(loc=50.0, scale=6.0, size=48)}
    )
    _, state = equalize_plates(both)
    assert state.variance_normalized and state.residualized


def test_equalize_is_idempotent_after_firing():
    rng = np.random.default_rng(106)
    series = series_from_plates(
        {"A": rng.normal(loc=0.0, scale=1.0, size=48),
         "B": rng.normal(loc=50.0, scale=6.0, size=48)}
    )
    once, state = equalize_plates(series)
    assert state.variance_normalized and state.residualized
    twice, state2 = equalize_plates(once)
    assert not state2.variance_normalized and not state2.residualized
    np.testing.assert_array_equal(twice.values, once.values)


def test_equalize_contains_dead_plate_and_still_centers():
    rng = np.random.default_rng(107)
    series = series_from_plates(
        {"LIVE": rng.normal(scale=10.0, size=24), "DEAD": [40.0] * 24}
    )
    out, state = equalize_plates(series)
    assert any(f.startswith("variance_normalization_aborted") for f in state.flags)
    assert not state.variance_normalized
    # the mean gate still ran on the untouched series
    assert state.residualized
    assert abs(out.values[series.plate_mask("DEAD")].mean()) < 1e-10
