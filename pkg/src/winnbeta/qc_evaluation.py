"""QC-based evaluation of a corrected study.

Repeated QC injections share one biological sample, so their coefficient
of variation before versus after correction measures what the correction
bought.  QC wells never enter the correction itself; the correction is
carried over to them by rescaling QC to the experimental level, restoring
the corrected experimental series to its original scale, forming the
well-wise corrected-over-original ratio, and interpolating that ratio at
each QC position.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .data_model import SampleType, StudyMatrix
from .errors import DegenerateSeriesError, DomainError, ParameterError
from .stats_tests import midranks

__all__ = [
    "cv",
    "rescale_qc",
    "restore_scale",
    "correction_ratio",
    "apply_qc_correction",
    "QcTransfer",
    "qc_transfer",
    "CvRecord",
    "cv_report",
    "cumulative_cv_table",
    "spearman",
]

RATIO_FLOOR = 1e-9


def cv(values: np.ndarray) -> float:
    """Coefficient of variation SD/mean, sample SD, positive mean required."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ParameterError(f"CV needs at least 2 values, got {values.size}")
    mean = float(values.mean())
    if not mean > 0.0:
        raise DomainError(f"CV is defined for positive means only, got {mean}")
    return float(values.std(ddof=1)) / mean


def rescale_qc(qc_values: np.ndarray, experimental_mean: float) -> tuple[np.ndarray, float, float]:
    """Affine map a*qc + b that brings QC onto the experimental level.

    The slope is CV(qc) * experimental_mean / SD(qc) and the intercept is
    the leftover experimental_mean - a * mean(qc); together they reduce to
    a pure ratio-of-means scaling with zero intercept, which the tests pin
    down as an algebraic identity.
    """
    qc_values = np.asarray(qc_values, dtype=np.float64)
    experimental_mean = float(experimental_mean)
    if experimental_mean <= 0.0:
        raise DomainError(f"experimental mean must be positive, got {experimental_mean}")
    qc_cv = cv(qc_values)
    sd = float(qc_values.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSeriesError("QC values have zero spread, slope is undefined")
    a = qc_cv * experimental_mean / sd
    b = experimental_mean - a * float(qc_values.mean())
    return a * qc_values + b, a, b


def restore_scale(
    corrected: np.ndarray,
    original_mean: float,
    original_sd: float,
    literal: bool = False,
) -> np.ndarray:
    """Map a corrected series back onto the original mean and SD.

    The default recenters then rescales, so the result has exactly the
    original mean and SD.  ``literal=True`` instead shifts by the mean
    difference first and applies the SD ratio to the shifted values, which
    scales the restored mean by the same ratio; it is kept for comparison
    against runs of the method's original published form.
    """
    corrected = np.asarray(corrected, dtype=np.float64)
    if corrected.size < 2:
        raise ParameterError("need at least 2 values to restore scale")
    sd = float(corrected.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSeriesError("corrected series has zero spread")
    if not (original_sd > 0.0) or not math.isfinite(original_sd):
        raise DomainError(f"original SD must be positive and finite, got {original_sd}")
    mean = float(corrected.mean())
    if literal:
        return (corrected + original_mean - mean) * original_sd / sd
    return (corrected - mean) * original_sd / sd + original_mean


def correction_ratio(
    restored: np.ndarray, original: np.ndarray, floor: float = RATIO_FLOOR
) -> tuple[np.ndarray, np.ndarray]:
    """Well-wise restored/original ratio with near-zero denominators masked.

    Entries where |original| < floor * SD(original) come back NaN with a
    False mask so callers can drop them instead of amplifying noise.
    """
    restored = np.asarray(restored, dtype=np.float64)
    original = np.asarray(original, dtype=np.float64)
    if restored.shape != original.shape:
        raise ParameterError("restored and original series differ in shape")
    cut = floor * float(original.std(ddof=1)) if original.size > 1 else floor
    valid = np.abs(original) >= cut
    ratio = np.full(original.shape, np.nan)
    ratio[valid] = restored[valid] / original[valid]
    return ratio, valid


def apply_qc_correction(
    qc_run_orders: np.ndarray,
    qc_rescaled: np.ndarray,
    exp_run_orders: np.ndarray,
    ratio: np.ndarray,
    valid: np.ndarray | None = None,
) -> np.ndarray:
    """Carry the correction ratio onto QC wells by run-order interpolation.

    Ratios are linearly interpolated between the experimental wells that
    bracket each QC position; QC wells outside the experimental range take
    the nearest end's ratio.
    """
    qc_run_orders = np.asarray(qc_run_orders, dtype=np.float64)
    exp_run_orders = np.asarray(exp_run_orders, dtype=np.float64)
    ratio = np.asarray(ratio, dtype=np.float64)
    qc_rescaled = np.asarray(qc_rescaled, dtype=np.float64)
    if valid is None:
        valid = np.isfinite(ratio)
    else:
        valid = np.asarray(valid, dtype=bool) & np.isfinite(ratio)
    if not valid.any():
        raise DegenerateSeriesError("no valid ratio points to interpolate from")
    xs = exp_run_orders[valid]
    ys = ratio[valid]
    order = np.argsort(xs, kind="mergesort")
    interpolated = np.interp(qc_run_orders, xs[order], ys[order])
    return qc_rescaled * interpolated


@dataclass
class QcTransfer:
    a: float
    b: float
    restored: np.ndarray
    ratio: np.ndarray
    valid: np.ndarray
    qc_corrected: np.ndarray
    flags: list[str] = field(default_factory=list)


def qc_transfer(
    qc_values: np.ndarray,
    qc_run_orders: np.ndarray,
    exp_before: np.ndarray,
    exp_after: np.ndarray,
    exp_run_orders: np.ndarray,
    literal: bool = False,
) -> QcTransfer:
    """The full QC carry-over chain for one metabolite."""
    exp_before = np.asarray(exp_before, dtype=np.float64)
    exp_after = np.asarray(exp_after, dtype=np.float64)
    mean_before = float(exp_before.mean())
    sd_before = float(exp_before.std(ddof=1))
    qc_rescaled, a, b = rescale_qc(qc_values, mean_before)
    restored = restore_scale(exp_after, mean_before, sd_before, literal=literal)
    ratio, valid = correction_ratio(restored, exp_before)
    flags = []
    if not valid.all():
        flags.append("near_zero_wells_excluded")
    corrected = apply_qc_correction(qc_run_orders, qc_rescaled, exp_run_orders, ratio, valid)
    return QcTransfer(a, b, restored, ratio, valid, corrected, flags)


@dataclass
class CvRecord:
    metabolite: str
    cv_before: float
    cv_after: float
    n_qc: int
    flags: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return math.isfinite(self.cv_before) and math.isfinite(self.cv_after)


def cv_report(
    before: StudyMatrix,
    after: StudyMatrix,
    literal: bool = False,
) -> list[CvRecord]:
    """QC coefficient of variation per metabolite, before and after correction.

    ``before`` is the uncorrected study the correction ran on, ``after``
    the corrected one; both must share wells and columns.  Metabolites
    whose transfer cannot be computed come back with NaN entries and an
    explanatory flag rather than being dropped.
    """
    if [w.run_order for w in before.wells] != [w.run_order for w in after.wells]:
        raise ParameterError("before and after studies disagree on wells")
    if before.metabolite_names != after.metabolite_names:
        raise ParameterError("before and after studies disagree on metabolites")
    qc_mask = np.array([w.sample_type is SampleType.QC for w in before.wells], dtype=bool)
    exp_mask = ~qc_mask
    records = []
    for j, name in enumerate(before.metabolite_names):
        qc_raw = before.intensities[qc_mask, j]
        qc_orders = before.run_orders[qc_mask]
        keep_qc = np.isfinite(qc_raw)
        qc_raw = qc_raw[keep_qc]
        qc_orders = qc_orders[keep_qc]
        flags = []
        if not keep_qc.all():
            flags.append("missing_qc_dropped")
        exp_b = before.intensities[exp_mask, j]
        exp_a = after.intensities[exp_mask, j]
        exp_orders = before.run_orders[exp_mask]
        keep_exp = np.isfinite(exp_b) & np.isfinite(exp_a)
        if not keep_exp.all():
            flags.append("missing_experimental_dropped")
        exp_b = exp_b[keep_exp]
        exp_a = exp_a[keep_exp]
        exp_orders = exp_orders[keep_exp]
        record = CvRecord(name, math.nan, math.nan, int(qc_raw.size), flags)
        records.append(record)
        if qc_raw.size < 2:
            flags.append("too_few_qc_wells")
            continue
        if exp_b.size < 2:
            flags.append("too_few_experimental_wells")
            continue
        try:
            record.cv_before = cv(qc_raw)
            transfer = qc_transfer(
                qc_raw, qc_orders, exp_b, exp_a, exp_orders, literal=literal
            )
            record.cv_after = cv(transfer.qc_corrected)
        except (DomainError, DegenerateSeriesError, ParameterError) as exc:
            record.cv_before = math.nan
            record.cv_after = math.nan
            flags.append(f"failed:{exc}")
            continue
        flags.extend(transfer.flags)
    return records


def cumulative_cv_table(records: list[CvRecord]) -> list[tuple[float, float, float]]:
    """Fraction of metabolites at or under each CV threshold, step 0.01.

    Thresholds run 0.00 to 1.00 inclusive; fractions are over the records
    with finite CV pairs.
    """
    usable = [r for r in records if r.valid]
    if not usable:
        raise ParameterError("no metabolite has a finite CV pair")
    before = np.array([r.cv_before for r in usable])
    after = np.array([r.cv_after for r in usable])
    rows = []
    for i in range(101):
        thr = i / 100.0
        rows.append(
            (
                thr,
                float((before <= thr).mean()),
                float((after <= thr).mean()),
            )
        )
    return rows


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Rank correlation: Pearson correlation of midranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError("spearman needs two equally long vectors")
    if x.size < 2:
        raise ParameterError("spearman needs at least 2 points")
    rx = midranks(x)
    ry = midranks(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0.0:
        raise DegenerateSeriesError("a constant vector has no rank correlation")
    return float(rx @ ry) / denom
