"""Command-line entry points.

Four subcommands: ``correct`` runs the full pipeline on a study and
leaves a self-contained run directory; ``evaluate-cv`` scores a run's QC
wells; ``simulate`` runs the synthetic benchmark battery; ``report``
renders static SVG plots from either kind of artifact directory.  Every
command is deterministic given its inputs, config, and seed; diagnostics
go to standard error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data_model import (
    MissingPolicy,
    SampleType,
    emit_intensities,
    emit_samples,
    load_study,
    preprocess_study,
)
from .errors import ParameterError, WinnbetaError
from .pipeline import (
    correct_study,
    correction_log_records,
    write_correction_log_csv,
)
from .qc_evaluation import cumulative_cv_table, cv_report
from .simulation import SCENARIO_NAMES, benchmark_suite

__all__ = ["main"]

RAW_NAME = "intensities_raw.csv"
PREPROCESSED_NAME = "intensities_preprocessed.csv"
CORRECTED_NAME = "intensities_corrected.csv"
SAMPLES_NAME = "samples.csv"
LOG_CSV_NAME = "correction_log.csv"
LOG_JSON_NAME = "correction_log.json"
SUMMARY_NAME = "summary.json"
CONFIG_NAME = "config.txt"
CV_REPORT_NAME = "cv_report.csv"
CV_CUMULATIVE_NAME = "cv_cumulative.csv"
BENCHMARK_CSV_NAME = "benchmark_report.csv"
BENCHMARK_JSON_NAME = "benchmark_details.json"


_UNSET = object()


def _auto_or_int(token: str) -> int | None:
    if token.strip().lower() == "auto":
        return None
    return int(token)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="winnbeta",
        description="Batch and drift correction for run-order-indexed intensity data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cor = sub.add_parser("correct", help="correct a study and write a run directory")
    cor.add_argument("--samples", required=True, help="sample table CSV")
    cor.add_argument("--intensities", required=True, help="intensity matrix CSV")
    cor.add_argument("--out", required=True, help="run directory to create")
    cor.add_argument("--config", help="flat key=value config file")
    cor.add_argument("--alpha", type=float)
    cor.add_argument("--max-df", type=int, dest="max_df")
    cor.add_argument("--lags", type=_auto_or_int, default=_UNSET)
    cor.add_argument("--min-batch", type=int, dest="min_batch_size")
    cor.add_argument("--variance-test", choices=["fligner", "levene-median", "levene-mean"])
    cor.add_argument("--missing", choices=["fail", "drop", "impute"])
    cor.add_argument("--outlier-sigma", type=float, dest="outlier_sigma")
    cor.add_argument("--workers", type=_auto_or_int, default=_UNSET)

    ev = sub.add_parser("evaluate-cv", help="QC coefficient-of-variation report for a run")
    ev.add_argument("--run", required=True, help="directory written by correct")
    ev.add_argument("--out", required=True)

    sim = sub.add_parser("simulate", help="run the synthetic benchmark battery")
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--scenario", help="run a single named scenario")

    rep = sub.add_parser("report", help="render SVG plots from run or benchmark artifacts")
    rep.add_argument("--run", required=True)
    rep.add_argument("--out", required=True)
    return parser


def _effective_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.alpha is not None:
        config.alpha = args.alpha
    if args.variance_test is not None:
        config.variance_test = args.variance_test
    if args.lags is not _UNSET:
        config.lags = args.lags
    if args.max_df is not None:
        config.max_df = args.max_df
    if args.min_batch_size is not None:
        config.min_batch_size = args.min_batch_size
    if args.missing is not None:
        config.missing_policy = MissingPolicy.parse(args.missing)
    if args.outlier_sigma is not None:
        config.outlier_sigma = args.outlier_sigma
    if args.workers is not _UNSET:
        config.workers = args.workers
    return config.validate()


def _banner(config: RunConfig) -> None:
    for key, value in config.to_mapping().items():
        print(f"config {key} = {value}", file=sys.stderr)


def _write_json(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def cmd_correct(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    _banner(config)
    study = load_study(args.samples, args.intensities)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pre_study, pre_reports = preprocess_study(
        study, config.missing_policy, config.outlier_sigma
    )
    skip = {}
    for name, report in pre_reports.items():
        for flag in report.flags:
            if flag.startswith("failed:"):
                skip[name] = flag[len("failed:") :]
                print(f"warning: skipping {name}: {skip[name]}", file=sys.stderr)
    corrected, logs, summary = correct_study(pre_study, config, skip)
    for lg in logs:
        if lg.error is not None and lg.metabolite not in skip:
            print(f"warning: skipping {lg.metabolite}: {lg.error}", file=sys.stderr)
    emit_samples(study, out / SAMPLES_NAME)
    emit_intensities(study, out / RAW_NAME)
    emit_intensities(pre_study, out / PREPROCESSED_NAME)
    emit_intensities(corrected, out / CORRECTED_NAME)
    write_correction_log_csv(logs, out / LOG_CSV_NAME)
    _write_json(correction_log_records(logs), out / LOG_JSON_NAME)
    preprocess_summary = {
        name: {
            "n_missing": r.n_missing,
            "n_dropped": r.n_dropped,
            "n_imputed": r.n_imputed,
            "n_winsorized": r.n_winsorized,
            "flags": r.flags,
        }
        for name, r in pre_reports.items()
    }
    _write_json(
        {"correction": summary.to_dict(), "preprocess": preprocess_summary},
        out / SUMMARY_NAME,
    )
    config.to_file(out / CONFIG_NAME)
    print(f"corrected {summary.n_metabolites - summary.n_failed} of "
          f"{summary.n_metabolites} metabolites", file=sys.stderr)
    return 0


def cmd_evaluate_cv(args: argparse.Namespace) -> int:
    run = Path(args.run)
    before = load_study(run / SAMPLES_NAME, run / PREPROCESSED_NAME)
    after = load_study(run / SAMPLES_NAME, run / CORRECTED_NAME)
    if not any(w.sample_type is SampleType.QC for w in before.wells):
        print("error: the study has no QC wells to evaluate", file=sys.stderr)
        return 1
    literal = False
    config_path = run / CONFIG_NAME
    if config_path.exists():
        literal = RunConfig.from_file(config_path).compat_literal_rescale
    records = cv_report(before, after, literal=literal)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / CV_REPORT_NAME, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metabolite", "cv_before", "cv_after", "n_qc", "flags"])
        for r in records:
            writer.writerow(
                [
                    r.metabolite,
                    "" if not np.isfinite(r.cv_before) else repr(float(r.cv_before)),
                    "" if not np.isfinite(r.cv_after) else repr(float(r.cv_after)),
                    str(r.n_qc),
                    ";".join(r.flags),
                ]
            )
    try:
        table = cumulative_cv_table(records)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(out / CV_CUMULATIVE_NAME, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cv_threshold", "frac_before", "frac_after"])
        for thr, fb, fa in table:
            writer.writerow([f"{thr:.2f}", repr(float(fb)), repr(float(fa))])
    n_valid = sum(1 for r in records if r.valid)
    print(f"evaluated {n_valid} of {len(records)} metabolites", file=sys.stderr)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.scenario is not None and args.scenario not in SCENARIO_NAMES:
        print(
            f"error: unknown scenario {args.scenario!r}; valid names: "
            + ", ".join(SCENARIO_NAMES),
            file=sys.stderr,
        )
        return 1
    scenarios = (args.scenario,) if args.scenario else SCENARIO_NAMES
    report = benchmark_suite(master_seed=args.seed, scenarios=scenarios)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / BENCHMARK_CSV_NAME, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "metric", "before", "after"])
        for scenario, metric, b, a in report.rows():
            writer.writerow([scenario, metric, repr(float(b)), repr(float(a))])
    _write_json(report.records(), out / BENCHMARK_JSON_NAME)
    print(f"simulated {len(report.results)} scenarios", file=sys.stderr)
    return 0


def _load_benchmark_rows(path: Path) -> dict[str, dict[str, tuple[float, float]]]:
    rows: dict[str, dict[str, tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["scenario"], {})[row["metric"]] = (
                float(row["before"]),
                float(row["after"]),
            )
    return rows


def cmd_report(args: argparse.Namespace) -> int:
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "winnbeta"
    run = Path(args.run)
    out = Path(args.out)
    rendered = 0
    cumulative = run / CV_CUMULATIVE_NAME
    if cumulative.exists():
        thr, before, after = [], [], []
        with open(cumulative, newline="") as fh:
            for row in csv.DictReader(fh):
                thr.append(float(row["cv_threshold"]))
                before.append(float(row["frac_before"]))
                after.append(float(row["frac_after"]))
        if not thr:
            print(f"error: {cumulative} has no rows", file=sys.stderr)
            return 1
        out.mkdir(parents=True, exist_ok=True)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(thr, before, label="before", color="#888888")
        ax.plot(thr, after, label="after", color="#1f6fb2")
        ax.set_xlabel("CV threshold")
        ax.set_ylabel("fraction of metabolites at or under")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "cv_curves.svg", metadata={"Date": None})
        plt.close(fig)
        rendered += 1
    details = run / BENCHMARK_JSON_NAME
    if details.exists():
        payload = json.loads(details.read_text())
        out.mkdir(parents=True, exist_ok=True)
        for scenario in sorted(payload):
            per_seed = payload[scenario]["per_seed"]
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.boxplot([per_seed["rmse_before"], per_seed["rmse_after"]])
            ax.set_xticks([1, 2])
            ax.set_xticklabels(["before", "after"])
            ax.set_ylabel("RMSE against truth")
            ax.set_title(scenario)
            fig.tight_layout()
            fig.savefig(out / f"boxplot_{scenario}.svg", metadata={"Date": None})
            plt.close(fig)
            rendered += 1
    if rendered == 0:
        print(
            f"error: nothing to render in {run}; expected {CV_CUMULATIVE_NAME} "
            f"or {BENCHMARK_JSON_NAME}",
            file=sys.stderr,
        )
        return 1
    print(f"rendered {rendered} figures", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "correct": cmd_correct,
        "evaluate-cv": cmd_evaluate_cv,
        "simulate": cmd_simulate,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except WinnbetaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
