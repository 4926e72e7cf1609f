"""Synthetic run-order studies with known distortion, and the benchmark.

Truth is iid Gaussian noise around a baseline; distortion is a per-plate
offset plus optional drift curves (linear, piecewise linear, sinusoidal)
added on top.  Generation is fully determined by the seed, and the stored
distortion array is exactly the configured curves, so tests can separate
what the generator injected from what the correction removed.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import RunConfig
from .data_model import MetaboliteSeries, SampleType, StudyMatrix, Well
from .errors import ParameterError
from .pipeline import winnbeta_correct
from .qc_evaluation import spearman

__all__ = [
    "DriftShape",
    "Drift",
    "DriftSpec",
    "SimulatedSeries",
    "drift_curve",
    "generate",
    "error_stats",
    "SCENARIO_NAMES",
    "build_scenario",
    "ScenarioResult",
    "run_scenario",
    "BenchmarkReport",
    "benchmark_suite",
    "generate_qc_study",
]


class DriftShape(Enum):
    LINEAR = "linear"
    PIECEWISE_LINEAR = "piecewise_linear"
    SINUSOIDAL = "sinusoidal"


@dataclass
class Drift:
    plate: str
    shape: DriftShape
    params: dict

    def validate(self, wells_per_plate: int) -> None:
        p = self.params
        if self.shape is DriftShape.LINEAR:
            if "slope" not in p:
                raise ParameterError("linear drift needs a slope")
        elif self.shape is DriftShape.PIECEWISE_LINEAR:
            breaks = p.get("breakpoints", ())
            slopes = p.get("slopes", ())
            if len(slopes) != len(breaks) + 1:
                raise ParameterError(
                    f"piecewise drift needs len(slopes) == len(breakpoints) + 1, "
                    f"got {len(slopes)} and {len(breaks)}"
                )
            if list(breaks) != sorted(breaks):
                raise ParameterError("breakpoints must be increasing")
            if breaks and (breaks[0] <= 0 or breaks[-1] >= wells_per_plate):
                raise ParameterError(
                    f"breakpoints must lie strictly inside (0, {wells_per_plate})"
                )
        elif self.shape is DriftShape.SINUSOIDAL:
            if p.get("period", 0.0) <= 0.0:
                raise ParameterError("sinusoidal drift needs a positive period")
            if "amplitude" not in p:
                raise ParameterError("sinusoidal drift needs an amplitude")


@dataclass
class DriftSpec:
    n_plates: int = 10
    wells_per_plate: int = 96
    baseline: float = 0.0
    noise_sd: float = 1.0
    offsets: dict[str, float] = field(default_factory=dict)
    drifts: list[Drift] = field(default_factory=list)
    seed: int = 0

    def plate_labels(self) -> list[str]:
        return [f"P{i + 1:02d}" for i in range(self.n_plates)]

    def validate(self) -> "DriftSpec":
        if self.n_plates < 1 or self.wells_per_plate < 1:
            raise ParameterError("need at least one plate and one well per plate")
        if self.noise_sd < 0.0:
            raise ParameterError(f"noise SD must be nonnegative, got {self.noise_sd}")
        if self.seed < 0:
            raise ParameterError(f"seed must be a nonnegative integer, got {self.seed}")
        labels = set(self.plate_labels())
        for lab in self.offsets:
            if lab not in labels:
                raise ParameterError(f"offset for unknown plate {lab!r}")
        for drift in self.drifts:
            if drift.plate not in labels:
                raise ParameterError(f"drift for unknown plate {drift.plate!r}")
            drift.validate(self.wells_per_plate)
        return self

    def drifting_plates(self) -> list[str]:
        seen: dict[str, None] = {}
        for d in self.drifts:
            seen.setdefault(d.plate, None)
        return list(seen)


def drift_curve(shape: DriftShape, params: dict, n: int) -> np.ndarray:
    """Distortion values over well positions 0..n-1."""
    t = np.arange(n, dtype=np.float64)
    if shape is DriftShape.LINEAR:
        return params["slope"] * t + params.get("intercept", 0.0)
    if shape is DriftShape.PIECEWISE_LINEAR:
        breaks = list(params.get("breakpoints", ()))
        slopes = list(params["slopes"])
        curve = np.empty(n)
        level = params.get("intercept", 0.0)
        for i, (start, stop) in enumerate(zip([0.0] + breaks, breaks + [float(n)])):
            seg = (t >= start) & (t < stop)
            curve[seg] = level + slopes[i] * (t[seg] - start)
            level += slopes[i] * (stop - start)
        return curve
    if shape is DriftShape.SINUSOIDAL:
        return params["amplitude"] * np.sin(
            2.0 * math.pi * t / params["period"] + params.get("phase", 0.0)
        )
    raise ParameterError(f"unknown drift shape {shape!r}")


@dataclass
class SimulatedSeries:
    spec: DriftSpec
    truth: np.ndarray
    distortion: np.ndarray
    distorted: np.ndarray
    plate_of: np.ndarray
    run_orders: np.ndarray

    def to_series(self, name: str = "sim") -> MetaboliteSeries:
        return MetaboliteSeries(name, self.distorted, self.plate_of, self.run_orders)


def generate(spec: DriftSpec) -> SimulatedSeries:
    """Draw truth, add the configured distortion, keep all three arrays."""
    spec.validate()
    n = spec.n_plates * spec.wells_per_plate
    rng = np.random.default_rng(spec.seed)
    truth = spec.baseline + rng.normal(0.0, spec.noise_sd, n)
    distortion = np.zeros(n)
    labels = spec.plate_labels()
    plate_of = np.empty(n, dtype=object)
    for i, lab in enumerate(labels):
        sl = slice(i * spec.wells_per_plate, (i + 1) * spec.wells_per_plate)
        plate_of[sl] = lab
        distortion[sl] += spec.offsets.get(lab, 0.0)
    for drift in spec.drifts:
        i = labels.index(drift.plate)
        sl = slice(i * spec.wells_per_plate, (i + 1) * spec.wells_per_plate)
        distortion[sl] += drift_curve(drift.shape, drift.params, spec.wells_per_plate)
    return SimulatedSeries(
        spec=spec,
        truth=truth,
        distortion=distortion,
        distorted=truth + distortion,
        plate_of=plate_of,
        run_orders=np.arange(1, n + 1, dtype=np.int64),
    )


STAT_KEYS = ("median", "q1", "q3", "iqr", "rmse", "rmse_centered")


def plate_centered(err: np.ndarray, plate_of: np.ndarray) -> np.ndarray:
    """Error with each plate's mean error removed."""
    centered = np.asarray(err, dtype=np.float64).copy()
    for lab in dict.fromkeys(plate_of):
        mask = np.array([p == lab for p in plate_of], dtype=bool)
        centered[mask] -= centered[mask].mean()
    return centered


def error_stats(
    values: np.ndarray, truth: np.ndarray, plate_of: np.ndarray | None = None
) -> dict[str, float]:
    """Distribution summary of values - truth.

    ``rmse_centered`` removes each plate's mean error first, so constant
    per-plate shifts (which plate-mean subtraction absorbs by design) do
    not drown out the drift the caller wants to see; it needs plate
    labels and is NaN without them.
    """
    err = np.asarray(values, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
    q1, med, q3 = (float(v) for v in np.percentile(err, [25.0, 50.0, 75.0]))
    stats = {
        "median": med,
        "q1": q1,
        "q3": q3,
        "iqr": q3 - q1,
        "rmse": float(np.sqrt(np.mean(err * err))),
        "rmse_centered": math.nan,
    }
    if plate_of is not None:
        centered = plate_centered(err, plate_of)
        stats["rmse_centered"] = float(np.sqrt(np.mean(centered * centered)))
    return stats


SCENARIO_NAMES = (
    "no_distortion",
    "offsets_only",
    "linear_drifts",
    "piecewise_drifts",
    "sinusoid_one_plate",
    "sinusoid_all_plates",
    "mixed",
)


def _tent(amplitude: float, wells: int) -> Drift:
    half = wells // 2
    up = amplitude / half
    down = -amplitude / (wells - half)
    return Drift(
        plate="",
        shape=DriftShape.PIECEWISE_LINEAR,
        params={"breakpoints": [half], "slopes": [up, down]},
    )


def build_scenario(
    name: str,
    master_seed: int = 0,
    replicate: int = 0,
    n_plates: int = 10,
    wells_per_plate: int = 96,
) -> DriftSpec:
    """One deterministic battery instance of the named scenario.

    Random pieces (offsets, phases) come from a stream derived from the
    scenario name's position, the master seed, and the replicate index, so
    replicates differ but the whole battery is reproducible.
    """
    if name not in SCENARIO_NAMES:
        raise ParameterError(
            f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}"
        )
    idx = SCENARIO_NAMES.index(name)
    root = np.random.SeedSequence([master_seed, idx, replicate])
    param_seq, data_seq = root.spawn(2)
    rng = np.random.default_rng(param_seq)
    spec = DriftSpec(
        n_plates=n_plates,
        wells_per_plate=wells_per_plate,
        seed=int(data_seq.generate_state(1)[0]),
    )
    labels = spec.plate_labels()

    def add_drift(plate: str, drift: Drift) -> None:
        drift.plate = plate
        spec.drifts.append(drift)

    if name == "offsets_only":
        spec.offsets = {lab: float(rng.normal(0.0, 2.0)) for lab in labels}
    elif name == "linear_drifts":
        sign = 1.0
        for i in (1, 4, 7):
            add_drift(
                labels[i],
                Drift(plate="", shape=DriftShape.LINEAR, params={"slope": sign * 0.02}),
            )
            sign = -sign
    elif name == "piecewise_drifts":
        for i in (0, 3, 6):
            add_drift(labels[i], _tent(3.0, wells_per_plate))
    elif name == "sinusoid_one_plate":
        add_drift(
            labels[min(2, n_plates - 1)],
            Drift(
                plate="",
                shape=DriftShape.SINUSOIDAL,
                params={"amplitude": 2.0, "period": float(wells_per_plate), "phase": 0.0},
            ),
        )
    elif name == "sinusoid_all_plates":
        for lab in labels:
            add_drift(
                lab,
                Drift(
                    plate="",
                    shape=DriftShape.SINUSOIDAL,
                    params={
                        "amplitude": 2.0,
                        "period": wells_per_plate / 2.0,
                        "phase": float(rng.uniform(0.0, 2.0 * math.pi)),
                    },
                ),
            )
    elif name == "mixed":
        spec.offsets = {lab: float(rng.normal(0.0, 2.0)) for lab in labels}
        for i in (1, 5):
            add_drift(labels[i], _tent(3.0, wells_per_plate))
        for i in (3, 7):
            add_drift(
                labels[i],
                Drift(
                    plate="",
                    shape=DriftShape.SINUSOIDAL,
                    params={
                        "amplitude": 2.0,
                        "period": float(wells_per_plate),
                        "phase": float(rng.uniform(0.0, 2.0 * math.pi)),
                    },
                ),
            )
    return spec.validate()


@dataclass
class ScenarioResult:
    name: str
    n_seeds: int
    stats_before: dict[str, float]
    stats_after: dict[str, float]
    drifting_plates: int
    drifting_detrended: int
    n_altered: int
    per_seed: dict[str, list[float]]


def run_scenario(
    name: str,
    config: RunConfig | None = None,
    master_seed: int = 0,
    n_seeds: int = 50,
    n_plates: int = 10,
    wells_per_plate: int = 96,
) -> ScenarioResult:
    """Correct ``n_seeds`` replicates and pool the error statistics."""
    config = (config or RunConfig()).validate()
    err_before: list[np.ndarray] = []
    err_after: list[np.ndarray] = []
    cent_before: list[np.ndarray] = []
    cent_after: list[np.ndarray] = []
    drifting = 0
    detrended_hits = 0
    altered = 0
    per_seed: dict[str, list[float]] = {
        "rmse_before": [],
        "rmse_after": [],
        "rmse_centered_before": [],
        "rmse_centered_after": [],
        "spearman_before": [],
        "spearman_after": [],
    }
    for rep in range(n_seeds):
        spec = build_scenario(name, master_seed, rep, n_plates, wells_per_plate)
        sim = generate(spec)
        corrected, log = winnbeta_correct(sim.to_series(), config)
        err_before.append(sim.distorted - sim.truth)
        err_after.append(corrected.values - sim.truth)
        cent_before.append(plate_centered(err_before[-1], sim.plate_of))
        cent_after.append(plate_centered(err_after[-1], sim.plate_of))
        before = error_stats(sim.distorted, sim.truth, sim.plate_of)
        after = error_stats(corrected.values, sim.truth, sim.plate_of)
        per_seed["rmse_before"].append(before["rmse"])
        per_seed["rmse_after"].append(after["rmse"])
        per_seed["rmse_centered_before"].append(before["rmse_centered"])
        per_seed["rmse_centered_after"].append(after["rmse_centered"])
        per_seed["spearman_before"].append(spearman(sim.truth, sim.distorted))
        per_seed["spearman_after"].append(spearman(sim.truth, corrected.values))
        wants = set(spec.drifting_plates())
        drifting += len(wants)
        if log.phase2:
            detrended_hits += len(wants & set(log.phase2.plates_detrended))
        altered += int(log.altered)
    pooled_before = np.concatenate(err_before)
    pooled_after = np.concatenate(err_after)
    zeros = np.zeros_like(pooled_before)

    def pooled_stats(errs: np.ndarray, centered: list[np.ndarray]) -> dict[str, float]:
        stats = error_stats(errs, zeros)
        cat = np.concatenate(centered)
        stats["rmse_centered"] = float(np.sqrt(np.mean(cat * cat)))
        return stats

    return ScenarioResult(
        name=name,
        n_seeds=n_seeds,
        stats_before=pooled_stats(pooled_before, cent_before),
        stats_after=pooled_stats(pooled_after, cent_after),
        drifting_plates=drifting,
        drifting_detrended=detrended_hits,
        n_altered=altered,
        per_seed=per_seed,
    )


@dataclass
class BenchmarkReport:
    results: list[ScenarioResult]

    def rows(self) -> list[tuple[str, str, float, float]]:
        out = []
        for res in self.results:
            for key in STAT_KEYS:
                out.append((res.name, key, res.stats_before[key], res.stats_after[key]))
        return out

    def records(self) -> dict:
        return {
            res.name: {
                "n_seeds": res.n_seeds,
                "stats_before": res.stats_before,
                "stats_after": res.stats_after,
                "drifting_plates": res.drifting_plates,
                "drifting_detrended": res.drifting_detrended,
                "n_altered": res.n_altered,
                "per_seed": res.per_seed,
            }
            for res in self.results
        }


def benchmark_suite(
    config: RunConfig | None = None,
    master_seed: int = 0,
    n_seeds: int = 50,
    scenarios: tuple[str, ...] = SCENARIO_NAMES,
    n_plates: int = 10,
    wells_per_plate: int = 96,
) -> BenchmarkReport:
    """All scenarios at the battery size, pooled before/after statistics."""
    return BenchmarkReport(
        [
            run_scenario(name, config, master_seed, n_seeds, n_plates, wells_per_plate)
            for name in scenarios
        ]
    )


def generate_qc_study(
    n_metabolites: int = 40,
    n_plates: int = 6,
    wells_per_plate: int = 48,
    qc_every: int = 8,
    seed: int = 0,
    baseline: float = 1000.0,
    bio_log_sd: float = 0.15,
    qc_log_sd: float = 0.03,
    distortion_scale: float = 1.0,
) -> StudyMatrix:
    """A multi-metabolite study with interleaved QC wells and known distortion.

    Intensities are positive by construction: each value is the metabolite's
    baseline times the exponential of a log-scale sum of plate offset, drift,
    and noise, the way instrument sensitivity loss scales a signal rather
    than shifting it.  QC wells sit at every ``qc_every``-th position within
    each plate and share their neighbors' offset and drift but carry only
    QC-level noise.  ``distortion_scale`` multiplies every offset and drift
    amplitude; at 1.0 the QC coefficients of variation straddle the 0.2
    quality threshold.
    """
    if qc_every < 2:
        raise ParameterError(f"qc_every must be at least 2, got {qc_every}")
    rng = np.random.default_rng(seed)
    n = n_plates * wells_per_plate
    labels = [f"P{i + 1:02d}" for i in range(n_plates)]
    wells = []
    qc_count = 0
    sample_count = 0
    for i in range(n):
        plate = labels[i // wells_per_plate]
        if (i % wells_per_plate) % qc_every == 0:
            qc_count += 1
            wells.append(Well(i + 1, f"QC_{qc_count:03d}", plate, SampleType.QC))
        else:
            sample_count += 1
            wells.append(Well(i + 1, f"S_{sample_count:04d}", plate, SampleType.EXPERIMENTAL))
    qc_mask = np.array([w.sample_type is SampleType.QC for w in wells], dtype=bool)
    t_within = np.array([i % wells_per_plate for i in range(n)], dtype=np.float64)
    names = [f"M{j + 1:03d}" for j in range(n_metabolites)]
    block = np.empty((n, n_metabolites))
    for j in range(n_metabolites):
        base = baseline * math.exp(rng.normal(0.0, 0.2))
        scale = distortion_scale * rng.uniform(0.5, 1.5)
        log_distortion = np.zeros(n)
        for i, lab in enumerate(labels):
            sl = slice(i * wells_per_plate, (i + 1) * wells_per_plate)
            log_distortion[sl] += rng.normal(0.0, 0.15 * scale)
            kind = (i + j) % 3
            if kind == 1:
                log_distortion[sl] += scale * 0.2 * np.sin(
                    2.0 * math.pi * t_within[sl] / wells_per_plate
                    + rng.uniform(0.0, 2.0 * math.pi)
                )
            elif kind == 2:
                slope = scale * 0.4 / wells_per_plate * (1 if rng.uniform() < 0.5 else -1)
                log_distortion[sl] += slope * (t_within[sl] - wells_per_plate / 2.0)
        log_noise = np.where(
            qc_mask,
            rng.normal(0.0, qc_log_sd, n),
            rng.normal(0.0, bio_log_sd, n),
        )
        block[:, j] = base * np.exp(log_distortion + log_noise)
    return StudyMatrix(wells, names, block)
