"""Plate-level spread and location correction.

Two gated steps, each applied only when its test rejects at level alpha:
divide each plate by its own standard deviation when plate spreads differ,
then subtract each plate's mean when plate means differ.  The same pair of
gates runs again after detrending, so both steps are importable on their
own as well as through :func:`equalize_plates`.
"""

from dataclasses import dataclass, field

import numpy as np

from .data_model import MetaboliteSeries
from .errors import (
    DegeneratePlateError,
    DegenerateSeriesError,
    GroupSizeError,
    ParameterError,
)
from .stats_tests import (
    GroupedSample,
    TestResult,
    anova_oneway,
    variance_homogeneity,
)

__all__ = [
    "BatchState",
    "variance_normalize",
    "residualize_by_plate",
    "equalize_plates",
]


@dataclass
class BatchState:
    """What the plate gates saw and did for one metabolite."""

    variance_test: TestResult | None = None
    mean_test: TestResult | None = None
    variance_normalized: bool = False
    residualized: bool = False
    plate_sds: dict[str, float] = field(default_factory=dict)
    plate_means: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def variance_normalize(
    series: MetaboliteSeries,
    alpha: float = 0.05,
    variance_test: str = "fligner",
) -> tuple[MetaboliteSeries, BatchState]:
    """Divide each plate by its SD when the spread homogeneity test rejects.

    Raises ``DegeneratePlateError`` if the gate fires while some plate has
    zero spread; singleton plates or a single-plate study leave the series
    unchanged with an explanatory flag.
    """
    alpha = _check_alpha(alpha)
    state = BatchState()
    sample = GroupedSample.from_series(series)
    try:
        sample.require_groups(2)
    except GroupSizeError as exc:
        state.flags.append(f"variance_gate_skipped:{exc}")
        return series, state
    # a plate with fewer than two wells is malformed input, so the
    # GroupSizeError raised inside the test itself propagates
    try:
        state.variance_test = variance_homogeneity(sample, variance_test)
    except DegenerateSeriesError as exc:
        state.flags.append(f"variance_gate_skipped:{exc}")
        return series, state
    if state.variance_test.p_value >= alpha:
        return series, state
    sds = {lab: float(g.std(ddof=1)) for lab, g in zip(sample.labels, sample.groups)}
    dead = [lab for lab, sd in sds.items() if sd == 0.0]
    if dead:
        raise DegeneratePlateError(
            f"{series.name!r}: plates {dead} have zero spread, cannot divide by it"
        )
    values = series.values.copy()
    for lab in sample.labels:
        values[series.plate_mask(lab)] /= sds[lab]
    state.variance_normalized = True
    state.plate_sds = sds
    return series.replace_values(values), state


def residualize_by_plate(
    series: MetaboliteSeries,
    alpha: float = 0.05,
) -> tuple[MetaboliteSeries, BatchState]:
    """Subtract each plate's mean when the one-way mean test rejects."""
    alpha = _check_alpha(alpha)
    state = BatchState()
    sample = GroupedSample.from_series(series)
    try:
        sample.require_groups(2)
    except GroupSizeError as exc:
        state.flags.append(f"mean_gate_skipped:{exc}")
        return series, state
    try:
        state.mean_test = anova_oneway(sample)
    except DegenerateSeriesError as exc:
        state.flags.append(f"mean_gate_skipped:{exc}")
        return series, state
    if state.mean_test.degenerate:
        state.flags.append("mean_test_degenerate")
    if state.mean_test.p_value >= alpha:
        return series, state
    means = {lab: float(g.mean()) for lab, g in zip(sample.labels, sample.groups)}
    values = series.values.copy()
    for lab in sample.labels:
        values[series.plate_mask(lab)] -= means[lab]
    state.residualized = True
    state.plate_means = means
    return series.replace_values(values), state


def equalize_plates(
    series: MetaboliteSeries,
    alpha: float = 0.05,
    variance_test: str = "fligner",
) -> tuple[MetaboliteSeries, BatchState]:
    """Run the spread gate, then the mean gate, merging their records.

    A degenerate plate aborts the spread step for this metabolite with a
    flag instead of propagating; the mean step still runs.
    """
    try:
        out, var_state = variance_normalize(series, alpha, variance_test)
    except DegeneratePlateError as exc:
        out = series
        var_state = BatchState()
        var_state.flags.append(f"variance_normalization_aborted:{exc}")
    out, mean_state = residualize_by_plate(out, alpha)
    merged = BatchState(
        variance_test=var_state.variance_test,
        mean_test=mean_state.mean_test,
        variance_normalized=var_state.variance_normalized,
        residualized=mean_state.residualized,
        plate_sds=var_state.plate_sds,
        plate_means=mean_state.plate_means,
        flags=var_state.flags + mean_state.flags,
    )
    return out, merged
