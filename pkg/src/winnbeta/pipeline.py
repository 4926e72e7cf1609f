"""Full correction pipeline and study-level orchestration.

Per metabolite: equalize plate spreads and means, detrend plates behind
the white noise gate, then run the two plate gates once more on the
detrended series.  Study-level runs fan metabolites out over a thread
pool; each column's computation is pure, and results are joined in column
order, so output is identical for any worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .batch_correction import BatchState, equalize_plates
from .config import RunConfig
from .data_model import MetaboliteSeries, StudyMatrix, SampleType, extract_series
from .detrending import Phase2Result, detrend_plates
from .errors import WinnbetaError

__all__ = [
    "CorrectionLog",
    "StudySummary",
    "winnbeta_correct",
    "correct_study",
    "correction_log_rows",
    "write_correction_log_csv",
    "correction_log_records",
]

LOG_COLUMNS = [
    "metabolite",
    "var_norm",
    "var_p",
    "resid",
    "resid_p",
    "plates_detrended",
    "chosen_dfs",
    "wn_p_before",
    "wn_p_after",
    "phase3_var_norm",
    "phase3_resid",
    "flags",
]


@dataclass
class CorrectionLog:
    metabolite: str
    phase1: BatchState | None = None
    phase2: Phase2Result | None = None
    phase3: BatchState | None = None
    error: str | None = None

    @property
    def altered(self) -> bool:
        if self.phase1 and (self.phase1.variance_normalized or self.phase1.residualized):
            return True
        if self.phase2 and self.phase2.plates_detrended:
            return True
        if self.phase3 and (self.phase3.variance_normalized or self.phase3.residualized):
            return True
        return False

    @property
    def entered_detrending(self) -> bool:
        return bool(self.phase2 and self.phase2.decisions)

    def all_flags(self) -> list[str]:
        flags: list[str] = []
        if self.phase1:
            flags += [f"p1:{f}" for f in self.phase1.flags]
        if self.phase2:
            flags += [f"p2:{f}" for f in self.phase2.flags]
            for d in self.phase2.decisions:
                flags += [f"p2[{d.plate}]:{f}" for f in d.flags]
        if self.phase3:
            flags += [f"p3:{f}" for f in self.phase3.flags]
        if self.error:
            flags.append(f"error:{self.error}")
        return flags


@dataclass
class StudySummary:
    n_metabolites: int
    n_failed: int
    pct_variance_normalized: float
    pct_residualized: float
    pct_entered_detrending: float
    pct_white_after_detrending: float | None

    def to_dict(self) -> dict:
        return {
            "n_metabolites": self.n_metabolites,
            "n_failed": self.n_failed,
            "pct_variance_normalized": self.pct_variance_normalized,
            "pct_residualized": self.pct_residualized,
            "pct_entered_detrending": self.pct_entered_detrending,
            "pct_white_after_detrending": self.pct_white_after_detrending,
        }


def winnbeta_correct(
    series: MetaboliteSeries, config: RunConfig
) -> tuple[MetaboliteSeries, CorrectionLog]:
    """Correct one metabolite: plate gates, gated detrending, plate gates again."""
    log = CorrectionLog(metabolite=series.name)
    out, log.phase1 = equalize_plates(series, config.alpha, config.variance_test)
    log.phase2 = detrend_plates(out, config)
    out = log.phase2.series
    out, log.phase3 = equalize_plates(out, config.alpha, config.variance_test)
    return out, log


def _worker_count(config: RunConfig) -> int:
    if config.workers is not None:
        return config.workers
    return os.cpu_count() or 1


def correct_study(
    study: StudyMatrix,
    config: RunConfig,
    skip: dict[str, str] | None = None,
) -> tuple[StudyMatrix, list[CorrectionLog], StudySummary]:
    """Correct every experimental series of the study, one log per column.

    ``skip`` maps metabolite names to reasons (say, preprocessing
    failures); those columns pass through untouched with the reason logged
    as their error.  Errors inside a column's correction are contained the
    same way.  QC wells are never modified.
    """
    config.validate()
    skip = skip or {}
    block = study.intensities.copy()
    exp_mask = np.array(
        [w.sample_type is SampleType.EXPERIMENTAL for w in study.wells], dtype=bool
    )

    def one(j: int) -> tuple[np.ndarray | None, CorrectionLog]:
        name = study.metabolite_names[j]
        if name in skip:
            return None, CorrectionLog(metabolite=name, error=skip[name])
        series = extract_series(study, name, SampleType.EXPERIMENTAL)
        try:
            corrected, log = winnbeta_correct(series, config)
        except WinnbetaError as exc:
            return None, CorrectionLog(metabolite=name, error=str(exc))
        return corrected.values, log

    with ThreadPoolExecutor(max_workers=_worker_count(config)) as pool:
        results = list(pool.map(one, range(len(study.metabolite_names))))

    logs = []
    for j, (values, log) in enumerate(results):
        if values is not None:
            block[exp_mask, j] = values
        logs.append(log)

    done = [lg for lg in logs if lg.error is None]
    n_failed = len(logs) - len(done)

    def pct(hits: int) -> float:
        return 100.0 * hits / len(done) if done else 0.0

    entered = [lg for lg in done if lg.entered_detrending]
    white_after = None
    if entered:
        passed = sum(
            1
            for lg in entered
            if lg.phase2.study_after is not None
            and lg.phase2.study_after.p_value >= config.alpha
        )
        white_after = 100.0 * passed / len(entered)
    summary = StudySummary(
        n_metabolites=len(logs),
        n_failed=n_failed,
        pct_variance_normalized=pct(
            sum(1 for lg in done if lg.phase1 and lg.phase1.variance_normalized)
        ),
        pct_residualized=pct(
            sum(1 for lg in done if lg.phase1 and lg.phase1.residualized)
        ),
        pct_entered_detrending=pct(len(entered)),
        pct_white_after_detrending=white_after,
    )
    return study.with_intensities(block), logs, summary


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def correction_log_rows(logs: list[CorrectionLog]) -> list[list[str]]:
    """Log lines in the flat CSV layout, one row per metabolite."""
    rows = []
    for lg in logs:
        p1 = lg.phase1
        p2 = lg.phase2
        p3 = lg.phase3
        detrended = p2.plates_detrended if p2 else []
        dfs = [str(d.df) for d in p2.decisions if d.detrended] if p2 else []
        rows.append(
            [
                lg.metabolite,
                "1" if p1 and p1.variance_normalized else "0",
                _fmt(p1.variance_test.p_value if p1 and p1.variance_test else None),
                "1" if p1 and p1.residualized else "0",
                _fmt(p1.mean_test.p_value if p1 and p1.mean_test else None),
                ";".join(detrended),
                ";".join(dfs),
                _fmt(p2.study_gate.p_value if p2 and p2.study_gate else None),
                _fmt(p2.study_after.p_value if p2 and p2.study_after else None),
                "1" if p3 and p3.variance_normalized else "0",
                "1" if p3 and p3.residualized else "0",
                ";".join(lg.all_flags()),
            ]
        )
    return rows


def write_correction_log_csv(logs: list[CorrectionLog], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        writer.writerows(correction_log_rows(logs))


def _result_record(result) -> dict | None:
    if result is None:
        return None
    return {
        "kind": result.kind.value,
        "statistic": None if not np.isfinite(result.statistic) else result.statistic,
        "dof": list(result.dof),
        "p_value": result.p_value,
        "degenerate": result.degenerate,
    }


def correction_log_records(logs: list[CorrectionLog]) -> list[dict]:
    """Structured log records, JSON-ready (finite floats and None only)."""
    records = []
    for lg in logs:
        p1 = lg.phase1
        p2 = lg.phase2
        p3 = lg.phase3
        records.append(
            {
                "metabolite": lg.metabolite,
                "error": lg.error,
                "altered": lg.altered,
                "phase1": None
                if p1 is None
                else {
                    "variance_test": _result_record(p1.variance_test),
                    "mean_test": _result_record(p1.mean_test),
                    "variance_normalized": p1.variance_normalized,
                    "residualized": p1.residualized,
                    "plate_sds": p1.plate_sds,
                    "plate_means": p1.plate_means,
                    "flags": p1.flags,
                },
                "phase2": None
                if p2 is None
                else {
                    "study_gate": _result_record(p2.study_gate),
                    "study_after": _result_record(p2.study_after),
                    "flags": p2.flags,
                    "plates": [
                        {
                            "plate": d.plate,
                            "n": d.n,
                            "tested": d.tested,
                            "wn_before": _result_record(d.wn_before),
                            "detrended": d.detrended,
                            "df": d.df,
                            "wn_after": _result_record(d.wn_after),
                            "flags": d.flags,
                        }
                        for d in p2.decisions
                    ],
                },
                "phase3": None
                if p3 is None
                else {
                    "variance_test": _result_record(p3.variance_test),
                    "mean_test": _result_record(p3.mean_test),
                    "variance_normalized": p3.variance_normalized,
                    "residualized": p3.residualized,
                    "flags": p3.flags,
                },
            }
        )
    return records
