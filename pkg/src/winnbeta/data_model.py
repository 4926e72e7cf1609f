"""Run-order study data: ingestion, per-metabolite extraction, preprocessing.

A study is a pair of CSV tables.  The sample table has columns
``run_order,sample_id,plate,sample_type`` with run orders forming the
contiguous range 1..N; the intensity table has a ``run_order`` column plus
one column per metabolite, empty cells marking missing values.  Floats are
written back with ``repr`` so a load/emit cycle is byte exact.
"""

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    DegenerateSeriesError,
    IngestionError,
    MissingDataError,
    ParameterError,
    UnknownMetaboliteError,
)

__all__ = [
    "SampleType",
    "Well",
    "StudyMatrix",
    "MetaboliteSeries",
    "MissingPolicy",
    "PreprocessReport",
    "load_study",
    "emit_intensities",
    "emit_samples",
    "extract_series",
    "preprocess",
    "preprocess_study",
]


class SampleType(Enum):
    EXPERIMENTAL = "experimental"
    QC = "qc"

    @classmethod
    def parse(cls, token: str) -> "SampleType":
        t = token.strip().lower()
        for member in cls:
            if member.value == t:
                return member
        raise IngestionError(
            f"unknown sample_type {token!r}; expected one of "
            + ", ".join(m.value for m in cls)
        )


class MissingPolicy(Enum):
    FAIL = "fail"
    DROP = "drop"
    PLATE_MEAN_IMPUTE = "impute"

    @classmethod
    def parse(cls, token: str) -> "MissingPolicy":
        t = token.strip().lower()
        for member in cls:
            if member.value == t:
                return member
        raise ParameterError(
            f"unknown missing policy {token!r}; expected one of "
            + ", ".join(m.value for m in cls)
        )


@dataclass(frozen=True)
class Well:
    run_order: int
    sample_id: str
    plate: str
    sample_type: SampleType


@dataclass
class StudyMatrix:
    """Wells sorted by run order plus an (n_wells, n_metabolites) intensity block."""

    wells: list[Well]
    metabolite_names: list[str]
    intensities: np.ndarray  # float64, NaN = missing

    def __post_init__(self) -> None:
        self.intensities = np.asarray(self.intensities, dtype=np.float64)
        if self.intensities.shape != (len(self.wells), len(self.metabolite_names)):
            raise IngestionError(
                f"intensity block shape {self.intensities.shape} does not match "
                f"{len(self.wells)} wells x {len(self.metabolite_names)} metabolites"
            )

    @property
    def run_orders(self) -> np.ndarray:
        return np.array([w.run_order for w in self.wells], dtype=np.int64)

    @property
    def plate_of(self) -> np.ndarray:
        return np.array([w.plate for w in self.wells], dtype=object)

    @property
    def sample_types(self) -> np.ndarray:
        return np.array([w.sample_type for w in self.wells], dtype=object)

    def column_index(self, name: str) -> int:
        try:
            return self.metabolite_names.index(name)
        except ValueError:
            raise UnknownMetaboliteError(f"no metabolite named {name!r}") from None

    def with_intensities(self, intensities: np.ndarray) -> "StudyMatrix":
        return StudyMatrix(self.wells, list(self.metabolite_names), intensities)


@dataclass
class MetaboliteSeries:
    """One metabolite's intensities in run order, with plate labels alongside."""

    name: str
    values: np.ndarray
    plate_of: np.ndarray
    run_orders: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.plate_of = np.asarray(self.plate_of, dtype=object)
        self.run_orders = np.asarray(self.run_orders, dtype=np.int64)
        if not (self.values.size == self.plate_of.size == self.run_orders.size):
            raise IngestionError(
                f"series {self.name!r}: values, plates and run orders differ in length"
            )
        if self.values.size == 0:
            raise IngestionError(f"series {self.name!r} is empty")

    @property
    def n(self) -> int:
        return self.values.size

    def plate_labels(self) -> list[str]:
        """Plate labels in order of first appearance along the run."""
        seen: dict[str, None] = {}
        for label in self.plate_of:
            if label not in seen:
                seen[label] = None
        return list(seen)

    def plate_mask(self, label: str) -> np.ndarray:
        return np.array([p == label for p in self.plate_of], dtype=bool)

    def replace_values(self, values: np.ndarray) -> "MetaboliteSeries":
        return MetaboliteSeries(self.name, values, self.plate_of, self.run_orders)


@dataclass
class PreprocessReport:
    n_missing: int = 0
    n_dropped: int = 0
    n_imputed: int = 0
    n_winsorized: int = 0
    flags: list[str] = field(default_factory=list)


def _parse_run_order(token: str, where: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise IngestionError(f"{where}: run_order {token!r} is not an integer") from None


def _read_sample_table(path) -> list[Well]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = ["run_order", "sample_id", "plate", "sample_type"]
        names = reader.fieldnames or []
        missing_cols = [c for c in required if c not in names]
        if missing_cols:
            raise IngestionError(
                f"{path}: sample table is missing columns {missing_cols}"
            )
        wells = []
        for lineno, row in enumerate(reader, start=2):
            order = _parse_run_order(row["run_order"], f"{path} line {lineno}")
            plate = row["plate"].strip()
            if not plate:
                raise IngestionError(f"{path} line {lineno}: empty plate label")
            wells.append(
                Well(
                    run_order=order,
                    sample_id=row["sample_id"].strip(),
                    plate=plate,
                    sample_type=SampleType.parse(row["sample_type"]),
                )
            )
    if not wells:
        raise IngestionError(f"{path}: sample table has no rows")
    orders = [w.run_order for w in wells]
    seen: set[int] = set()
    dup = sorted({o for o in orders if o in seen or seen.add(o)})
    if dup:
        raise IngestionError(f"{path}: duplicate run orders {dup}")
    expected = set(range(1, len(wells) + 1))
    gaps = sorted(expected - set(orders))
    extra = sorted(set(orders) - expected)
    if gaps or extra:
        raise IngestionError(
            f"{path}: run orders must be the contiguous range 1..{len(wells)}; "
            f"missing {gaps}, unexpected {extra}"
        )
    wells.sort(key=lambda w: w.run_order)
    return wells


def _parse_cell(token: str, where: str) -> float:
    if token.strip() == "":
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise IngestionError(f"{where}: intensity {token!r} is not a number") from None
    if math.isinf(value):
        raise IngestionError(f"{where}: infinite intensity {token!r}")
    return value


def _read_intensity_table(path) -> tuple[list[str], dict[int, list[float]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: intensity table is empty") from None
        if not header or header[0] != "run_order":
            raise IngestionError(
                f"{path}: first intensity column must be run_order, got "
                f"{header[0] if header else 'nothing'!r}"
            )
        names = [h.strip() for h in header[1:]]
        if not names:
            raise IngestionError(f"{path}: intensity table has no metabolite columns")
        if any(not n for n in names):
            raise IngestionError(f"{path}: blank metabolite column name")
        seen: set[str] = set()
        dup = sorted({n for n in names if n in seen or seen.add(n)})
        if dup:
            raise IngestionError(f"{path}: duplicate metabolite columns {dup}")
        rows: dict[int, list[float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise IngestionError(
                    f"{path} line {lineno}: expected {len(header)} cells, got {len(row)}"
                )
            order = _parse_run_order(row[0], f"{path} line {lineno}")
            if order in rows:
                raise IngestionError(f"{path}: duplicate run order {order}")
            rows[order] = [
                _parse_cell(tok, f"{path} line {lineno} column {names[j]!r}")
                for j, tok in enumerate(row[1:])
            ]
    return names, rows


def load_study(samples_path, intensities_path) -> StudyMatrix:
    """Read and join the sample and intensity tables, validating both."""
    wells = _read_sample_table(samples_path)
    names, rows = _read_intensity_table(intensities_path)
    sample_orders = {w.run_order for w in wells}
    missing = sorted(sample_orders - rows.keys())
    extra = sorted(rows.keys() - sample_orders)
    if missing or extra:
        raise IngestionError(
            f"{intensities_path}: run orders disagree with the sample table; "
            f"missing {missing}, unexpected {extra}"
        )
    block = np.array([rows[w.run_order] for w in wells], dtype=np.float64)
    return StudyMatrix(wells, names, block)


def _format_cell(value: float) -> str:
    if math.isnan(value):
        return ""
    return repr(float(value))


def emit_intensities(study: StudyMatrix, path) -> None:
    """Write the intensity block back out; floats round-trip bit exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_order"] + study.metabolite_names)
        for i, well in enumerate(study.wells):
            writer.writerow(
                [str(well.run_order)]
                + [_format_cell(v) for v in study.intensities[i]]
            )


def emit_samples(study: StudyMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_order", "sample_id", "plate", "sample_type"])
        for w in study.wells:
            writer.writerow([str(w.run_order), w.sample_id, w.plate, w.sample_type.value])


def extract_series(study: StudyMatrix, name: str, which="all") -> MetaboliteSeries:
    """Pull one metabolite as a series, optionally restricted by sample type.

    ``which`` is "experimental", "qc", "all", or a SampleType.
    """
    col = study.column_index(name)
    if isinstance(which, SampleType):
        keep = np.array([w.sample_type is which for w in study.wells], dtype=bool)
    elif isinstance(which, str) and which.strip().lower() == "all":
        keep = np.ones(len(study.wells), dtype=bool)
    else:
        wanted = SampleType.parse(which)
        keep = np.array([w.sample_type is wanted for w in study.wells], dtype=bool)
    if not keep.any():
        raise IngestionError(f"no wells of the requested sample type for {name!r}")
    return MetaboliteSeries(
        name=name,
        values=study.intensities[keep, col],
        plate_of=study.plate_of[keep],
        run_orders=study.run_orders[keep],
    )


def preprocess(
    series: MetaboliteSeries,
    missing_policy: MissingPolicy = MissingPolicy.FAIL,
    outlier_sigma: float = 3.0,
) -> tuple[MetaboliteSeries, PreprocessReport]:
    """Resolve missing values, then winsorize outliers symmetrically.

    Winsorization moves any point with ``|x - mean| >= outlier_sigma * SD``
    to the corresponding boundary, with mean and SD taken once from the
    series as it stands after missing-value handling.  ``outlier_sigma``
    of infinity turns the step off, so the whole call is the identity on a
    complete series.
    """
    if not isinstance(missing_policy, MissingPolicy):
        missing_policy = MissingPolicy.parse(str(missing_policy))
    outlier_sigma = float(outlier_sigma)
    if math.isnan(outlier_sigma) or outlier_sigma <= 0.0:
        raise ParameterError(f"outlier_sigma must be positive, got {outlier_sigma}")
    report = PreprocessReport()
    values = series.values.copy()
    plate_of = series.plate_of
    run_orders = series.run_orders
    missing = np.isnan(values)
    report.n_missing = int(missing.sum())
    if report.n_missing:
        if missing_policy is MissingPolicy.FAIL:
            where = run_orders[missing].tolist()
            raise MissingDataError(
                f"{series.name!r}: {report.n_missing} missing values at run orders {where}"
            )
        if missing_policy is MissingPolicy.DROP:
            keep = ~missing
            values = values[keep]
            plate_of = plate_of[keep]
            run_orders = run_orders[keep]
            report.n_dropped = report.n_missing
            report.flags.append("dropped_missing")
        else:
            for label in series.plate_labels():
                mask = series.plate_mask(label)
                hole = mask & missing
                if not hole.any():
                    continue
                present = mask & ~missing
                if not present.any():
                    raise MissingDataError(
                        f"{series.name!r}: plate {label!r} is entirely missing, "
                        "cannot impute a plate mean"
                    )
                values[hole] = values[present].mean()
            report.n_imputed = report.n_missing
            report.flags.append("imputed_missing")
    if values.size == 0:
        raise MissingDataError(f"{series.name!r}: no values left after dropping missing")
    if math.isinf(outlier_sigma):
        out = MetaboliteSeries(series.name, values, plate_of, run_orders)
        return out, report
    if values.size < 2:
        report.flags.append("too_short_to_winsorize")
        out = MetaboliteSeries(series.name, values, plate_of, run_orders)
        return out, report
    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSeriesError(
            f"{series.name!r}: zero spread, winsorization with a finite "
            f"outlier_sigma is undefined"
        )
    bound = outlier_sigma * sd
    hit = np.abs(values - mean) >= bound
    report.n_winsorized = int(hit.sum())
    if report.n_winsorized:
        values = np.clip(values, mean - bound, mean + bound)
        report.flags.append("winsorized")
    out = MetaboliteSeries(series.name, values, plate_of, run_orders)
    return out, report


def preprocess_study(
    study: StudyMatrix,
    missing_policy: MissingPolicy = MissingPolicy.FAIL,
    outlier_sigma: float = 3.0,
) -> tuple[StudyMatrix, dict[str, PreprocessReport]]:
    """Preprocess the experimental wells of every metabolite column.

    QC wells pass through untouched.  A column whose preprocessing raises
    keeps its raw values and gets a ``failed:`` flag in its report; the
    caller decides whether to skip it downstream.  The DROP policy cannot
    shrink a shared matrix, so dropped cells stay NaN.
    """
    block = study.intensities.copy()
    exp_mask = np.array(
        [w.sample_type is SampleType.EXPERIMENTAL for w in study.wells], dtype=bool
    )
    reports: dict[str, PreprocessReport] = {}
    for j, name in enumerate(study.metabolite_names):
        series = MetaboliteSeries(
            name,
            study.intensities[exp_mask, j],
            study.plate_of[exp_mask],
            study.run_orders[exp_mask],
        )
        try:
            cleaned, report = preprocess(series, missing_policy, outlier_sigma)
        except (MissingDataError, DegenerateSeriesError) as exc:
            report = PreprocessReport()
            report.n_missing = int(np.isnan(series.values).sum())
            report.flags.append(f"failed:{exc}")
            reports[name] = report
            continue
        if missing_policy is MissingPolicy.DROP and report.n_dropped:
            kept = np.isin(study.run_orders[exp_mask], cleaned.run_orders)
            col = block[:, j]
            col[np.flatnonzero(exp_mask)[kept]] = cleaned.values
            reports[name] = report
            continue
        block[exp_mask, j] = cleaned.values
        reports[name] = report
    return study.with_intensities(block), reports
