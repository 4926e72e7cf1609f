"""Batch and drift correction for run-order-indexed intensity data.

The pipeline equalizes plate spreads and means behind variance- and
mean-homogeneity gates, removes within-plate trends behind white noise
gates with a tuned regression spline, then repeats the plate gates on the
detrended signal.  QC wells are held out of the correction and scored
separately through a coefficient-of-variation report.
"""

from .batch_correction import (
    BatchState,
    equalize_plates,
    residualize_by_plate,
    variance_normalize,
)
from .config import RunConfig
from .data_model import (
    MetaboliteSeries,
    MissingPolicy,
    PreprocessReport,
    SampleType,
    StudyMatrix,
    Well,
    emit_intensities,
    emit_samples,
    extract_series,
    load_study,
    preprocess,
    preprocess_study,
)
from .detrending import (
    DetrendDecision,
    Phase2Result,
    SplineFit,
    TuneResult,
    detrend_plates,
    fit_spline,
    tune_df,
)
from .errors import (
    DegeneratePlateError,
    DegenerateSeriesError,
    DomainError,
    FitError,
    GroupSizeError,
    IngestionError,
    MissingDataError,
    ParameterError,
    UnknownMetaboliteError,
    WinnbetaError,
)
from .pipeline import CorrectionLog, StudySummary, correct_study, winnbeta_correct
from .qc_evaluation import (
    CvRecord,
    QcTransfer,
    apply_qc_correction,
    correction_ratio,
    cumulative_cv_table,
    cv,
    cv_report,
    qc_transfer,
    rescale_qc,
    restore_scale,
    spearman,
)
from .simulation import (
    SCENARIO_NAMES,
    BenchmarkReport,
    Drift,
    DriftShape,
    DriftSpec,
    ScenarioResult,
    SimulatedSeries,
    benchmark_suite,
    build_scenario,
    drift_curve,
    error_stats,
    generate,
    generate_qc_study,
    run_scenario,
)
from .stats_tests import (
    GroupedSample,
    TestKind,
    TestResult,
    anova_oneway,
    default_lags,
    fligner_killeen,
    levene,
    ljung_box,
    midranks,
    variance_homogeneity,
)
from .tails import chi_square_sf, f_sf, normal_quantile

__version__ = "0.1.0"
