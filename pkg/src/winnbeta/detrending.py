"""Within-plate trend removal gated by white noise tests.

A metabolite enters detrending only when the portmanteau test on the whole
run-ordered series rejects whiteness; each plate is then tested on its
own, and plates that reject get a least-squares trend fit subtracted.  The
trend is a regression spline whose freedom is tuned to make the residual
look most like white noise; ties prefer the smallest freedom, and freedom
one (a constant) is always in the grid, so tuning can never make the
residual's white noise p-value worse than the plate's own.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import RunConfig
from .data_model import MetaboliteSeries
from .errors import DegenerateSeriesError, FitError, ParameterError
from .stats_tests import TestResult, ljung_box

__all__ = [
    "SplineFit",
    "TuneResult",
    "DetrendDecision",
    "Phase2Result",
    "fit_spline",
    "tune_df",
    "detrend_plates",
]


@dataclass
class SplineFit:
    df: int
    coefficients: np.ndarray
    fitted: np.ndarray


@dataclass
class TuneResult:
    df: int
    p_value: float
    fit: SplineFit
    tried: list[tuple[int, float]]


@dataclass
class DetrendDecision:
    plate: str
    n: int
    tested: bool = False
    wn_before: TestResult | None = None
    detrended: bool = False
    df: int | None = None
    wn_after: TestResult | None = None
    flags: list[str] = field(default_factory=list)


@dataclass
class Phase2Result:
    series: MetaboliteSeries
    study_gate: TestResult | None
    decisions: list[DetrendDecision]
    study_after: TestResult | None
    flags: list[str] = field(default_factory=list)

    @property
    def plates_detrended(self) -> list[str]:
        return [d.plate for d in self.decisions if d.detrended]


def _design_matrix(n: int, df: int) -> np.ndarray:
    t = np.zeros(1) if n == 1 else np.arange(n, dtype=np.float64) / (n - 1)
    if df <= 3:
        return np.vander(t, df, increasing=True)
    interior = np.linspace(0.0, 1.0, df - 2)[1:-1]
    knots = np.concatenate([np.zeros(4), interior, np.ones(4)])
    return kernels.bspline_design(np.ascontiguousarray(t), np.ascontiguousarray(knots))


def fit_spline(values: np.ndarray, df: int) -> SplineFit:
    """Least-squares trend against run position, normalized to [0, 1].

    Freedom 1 fits a constant, 2 a line, 3 a quadratic; from 4 upward the
    basis is a clamped cubic B-spline with df - 4 equally spaced interior
    knots, giving exactly df basis functions.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    df = int(df)
    if df < 1:
        raise ParameterError(f"spline freedom must be at least 1, got {df}")
    if df > n:
        raise ParameterError(f"freedom {df} exceeds the {n} available points")
    design = _design_matrix(n, df)
    coef, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
    if rank < df:
        raise FitError(f"design matrix rank {rank} below freedom {df}")
    return SplineFit(df=df, coefficients=coef, fitted=design @ coef)


def tune_df(values: np.ndarray, lags: int, df_grid: list[int]) -> TuneResult:
    """Pick the freedom whose residual looks most like white noise.

    Every candidate in ``df_grid`` is fitted and its residual run through
    the portmanteau test at ``lags``; the winner maximizes the p-value,
    with ties going to the smallest freedom.  A residual too degenerate to
    test counts as maximally white.
    """
    if not df_grid:
        raise ParameterError("empty freedom grid")
    best: tuple[float, int, SplineFit] | None = None
    tried: list[tuple[int, float]] = []
    for df in sorted(df_grid):
        try:
            fit = fit_spline(values, df)
        except FitError:
            continue
        residual = values - fit.fitted
        try:
            p = ljung_box(residual, lags).p_value
        except DegenerateSeriesError:
            p = 1.0
        tried.append((df, p))
        if best is None or p > best[0]:
            best = (p, df, fit)
    if best is None:
        raise FitError("no freedom in the grid produced a usable fit")
    return TuneResult(df=best[1], p_value=best[0], fit=best[2], tried=tried)


def detrend_plates(series: MetaboliteSeries, config: RunConfig) -> Phase2Result:
    """Gate on the whole series, then test and detrend plate by plate."""
    n = series.n
    lags = config.effective_lags(n)
    if lags < 1 or n < lags + 1:
        return Phase2Result(
            series, None, [], None, flags=["white_noise_gate_skipped:series_too_short"]
        )
    try:
        study_gate = ljung_box(series.values, lags)
    except DegenerateSeriesError:
        return Phase2Result(
            series, None, [], None, flags=["white_noise_gate_skipped:constant_series"]
        )
    if study_gate.p_value >= config.alpha:
        return Phase2Result(series, study_gate, [], None)
    values = series.values.copy()
    decisions = []
    for label in series.plate_labels():
        mask = series.plate_mask(label)
        plate_values = values[mask]
        decision = DetrendDecision(plate=label, n=plate_values.size)
        decisions.append(decision)
        if plate_values.size < config.min_batch_size:
            decision.flags.append("plate_below_min_batch_size")
            continue
        plate_lags = config.effective_lags(plate_values.size)
        if plate_lags < 1 or plate_values.size < plate_lags + 1:
            decision.flags.append("plate_too_short_to_test")
            continue
        try:
            decision.wn_before = ljung_box(plate_values, plate_lags)
        except DegenerateSeriesError:
            decision.flags.append("plate_constant")
            continue
        decision.tested = True
        if decision.wn_before.p_value >= config.alpha:
            continue
        tuned = tune_df(plate_values, plate_lags, config.df_grid(plate_values.size))
        if tuned.p_value <= decision.wn_before.p_value:
            decision.flags.append("tuning_no_improvement")
            continue
        values[mask] = plate_values - tuned.fit.fitted
        decision.detrended = True
        decision.df = tuned.df
        try:
            decision.wn_after = ljung_box(values[mask], plate_lags)
        except DegenerateSeriesError:
            decision.flags.append("residual_degenerate")
            continue
        if decision.wn_after.p_value < config.alpha:
            decision.flags.append("still_autocorrelated_after_detrend")
    out = series.replace_values(values)
    study_after: TestResult | None = None
    if any(d.detrended for d in decisions):
        try:
            study_after = ljung_box(values, lags)
        except DegenerateSeriesError:
            pass
    return Phase2Result(out, study_gate, decisions, study_after)
