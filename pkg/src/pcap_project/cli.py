"""Command-line entry point: analyze, fit, sigma and summary subcommands.

Exit codes: 0 success, 2 some dimension ended in error, 64 usage or
configuration error, 65 malformed input data, 74 I/O error.
"""

import argparse
import dataclasses
import re
import sys
from pathlib import Path
from typing import Sequence

import pandas as pd
from dotenv import load_dotenv

from pcap_project.components.data_ingestion import DataIngestion
from pcap_project.components.distribution_fitting import DistributionFitting
from pcap_project.components.plotting import emit_ratio_histogram_svg
from pcap_project.components.report_writer import ReportWriter, emit_reports_json
from pcap_project.config.configuration import ConfigurationManager
from pcap_project.constants import MAX_WINDOW, MIN_WINDOW
from pcap_project.entity.artifact_entity import Criterion, OutlierMethod
from pcap_project.entity.config_entity import (
    AnalysisMode,
    OutlierAction,
    SigmaConfig,
    WorkflowConfig,
)
from pcap_project.entity.domain_entity import Dataset, SigmaMethod
from pcap_project.exception import (
    CapabilityError,
    CustomException,
    InvalidConfiguration,
    NoFamilyFits,
)
from pcap_project.logger import logger
from pcap_project.orchestrator.analysis_flow import analyze_dataset
from pcap_project.orchestrator.summary_flow import (
    capability_ratio_values,
    case_study_summary,
    sigma_table,
)
from pcap_project.utils import format_fixed, save_bytes

EXIT_OK = 0
EXIT_DIMENSION_ERROR = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_IO = 74

_WINDOWS = re.compile(r"^(\d+)(?:\.\.(\d+))?$")
RATIO_PLOT_FILE = "ratio_cpk_ppk.svg"

# --out/--csv/--plots given without a value
CONFIGURED = object()


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with the usage exit code set to 64."""

    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", type=Path, help="case-study CSV (NO./T/Tol+/Tol-)")
    common.add_argument(
        "--config",
        type=Path,
        default=None,
        help="directory holding config.yaml, params.yaml and schema.yaml",
    )
    common.add_argument(
        "--subgroup-size",
        type=int,
        default=1,
        help="observations per rational subgroup; 1 means individuals (default 1)",
    )
    return common


def _workflow_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument(
        "--mode", choices=["full", "simplified"], help="workflow variant"
    )
    options.add_argument("--alpha", type=float, help="normality significance level")
    options.add_argument(
        "--sigma",
        choices=[m.value.lower() for m in SigmaMethod],
        help="within-sigma estimator (default: AMR for individuals, Pooled for subgroups)",
    )
    options.add_argument(
        "--mr-window",
        type=int,
        help=f"moving-range window for AMR/MMR, {MIN_WINDOW}..{MAX_WINDOW}",
    )
    options.add_argument(
        "--outliers", choices=["tukey", "grubbs", "off"], help="outlier screening"
    )
    options.add_argument(
        "--outlier-action",
        choices=["flag", "exclude"],
        help="flag outliers only, or drop them before analysis",
    )
    return options


def _criterion_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--criterion",
        choices=["aic", "bic", "aicc"],
        help="information criterion ranking the fitted families",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="pcap", description="Process capability analysis for measured dimensions"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common_options()

    analyze = commands.add_parser(
        "analyze",
        parents=[common, _workflow_options()],
        help="run the capability workflow on every dimension",
    )
    _criterion_option(analyze)
    analyze.add_argument(
        "--out",
        type=Path,
        nargs="?",
        const=CONFIGURED,
        help="JSON report path; bare flag uses config.yaml (default stdout)",
    )
    analyze.add_argument(
        "--csv",
        type=Path,
        nargs="?",
        const=CONFIGURED,
        help="also write a CSV table; bare flag uses config.yaml",
    )
    analyze.add_argument(
        "--plots",
        type=Path,
        nargs="?",
        const=CONFIGURED,
        help="write one SVG histogram per dimension; bare flag uses config.yaml",
    )
    analyze.set_defaults(handler=cmd_analyze)

    fit = commands.add_parser(
        "fit", parents=[common], help="rank candidate distributions per dimension"
    )
    _criterion_option(fit)
    fit.add_argument("--out", type=Path, help="CSV output path (default stdout)")
    fit.set_defaults(handler=cmd_fit)

    sigma = commands.add_parser(
        "sigma", parents=[common], help="sigma estimates per moving-range window"
    )
    sigma.add_argument(
        "--methods",
        nargs="+",
        choices=["overall", "amr", "mmr"],
        default=["overall", "amr", "mmr"],
        help="estimator columns to print (default all)",
    )
    sigma.add_argument(
        "--windows",
        default=f"{MIN_WINDOW}..{MAX_WINDOW}",
        help=f"a window like 2 or a range like {MIN_WINDOW}..{MAX_WINDOW}",
    )
    sigma.add_argument("--out", type=Path, help="CSV output path (default stdout)")
    sigma.set_defaults(handler=cmd_sigma)

    summary = commands.add_parser(
        "summary",
        parents=[common],
        help="relative-error binning and capability ratio spreads",
    )
    summary.add_argument("--out", type=Path, help="CSV output path (default stdout)")
    summary.add_argument("--plots", type=Path, help="write the Cpk/Ppk ratio histogram")
    summary.set_defaults(handler=cmd_summary)

    return parser


def parse_windows(text: str) -> list[int]:
    match = _WINDOWS.match(text.strip())
    if not match:
        raise InvalidConfiguration(f"--windows expects N or N..M, got {text!r}")
    lo = int(match.group(1))
    hi = int(match.group(2) or lo)
    if not MIN_WINDOW <= lo <= hi <= MAX_WINDOW:
        raise InvalidConfiguration(
            f"--windows {text} is outside {MIN_WINDOW}..{MAX_WINDOW}"
        )
    return list(range(lo, hi + 1))


def _configuration(args: argparse.Namespace) -> ConfigurationManager:
    if args.config is not None:
        return ConfigurationManager.from_directory(args.config)
    return ConfigurationManager()


def workflow_config_from_args(
    args: argparse.Namespace, manager: ConfigurationManager
) -> WorkflowConfig:
    """YAML defaults with every given flag applied on top."""
    config = manager.get_workflow_config()
    changes: dict = {}
    if getattr(args, "mode", None):
        changes["mode"] = AnalysisMode.parse(args.mode)
    if getattr(args, "alpha", None) is not None:
        changes["alpha"] = args.alpha

    sigma = config.sigma
    if getattr(args, "sigma", None):
        sigma = dataclasses.replace(sigma, method=SigmaMethod.parse(args.sigma))
    if getattr(args, "mr_window", None) is not None:
        sigma = dataclasses.replace(sigma, window=args.mr_window)
    changes["sigma"] = sigma

    outliers = config.outliers
    if getattr(args, "outliers", None):
        method = None if args.outliers == "off" else OutlierMethod.parse(args.outliers)
        outliers = dataclasses.replace(outliers, method=method)
    if getattr(args, "outlier_action", None):
        outliers = dataclasses.replace(
            outliers, action=OutlierAction.parse(args.outlier_action)
        )
    changes["outliers"] = outliers

    if getattr(args, "criterion", None):
        changes["distfit"] = dataclasses.replace(
            config.distfit, criterion=Criterion.parse(args.criterion)
        )
    return dataclasses.replace(config, **changes)


def _load(args: argparse.Namespace) -> Dataset:
    if args.subgroup_size < 1:
        raise InvalidConfiguration(
            f"--subgroup-size must be >= 1, got {args.subgroup_size}"
        )
    return DataIngestion(args.subgroup_size).initiate_data_ingestion(args.input)


def _emit(data: bytes, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        save_bytes(out, data)


def _frame_csv(frame: pd.DataFrame, **kwargs) -> bytes:
    return frame.to_csv(lineterminator="\n", **kwargs).encode("utf-8")


def _artifact_path(value, configured: Path) -> Path | None:
    return configured if value is CONFIGURED else value


def cmd_analyze(args: argparse.Namespace) -> int:
    manager = _configuration(args)
    config = workflow_config_from_args(args, manager)
    dataset = _load(args)

    reports = analyze_dataset(dataset, config)
    artifacts = manager.get_artifact_config()
    writer = ReportWriter(artifacts, manager.get_report_schema_config())
    if args.out is None:
        _emit(emit_reports_json(reports), None)
    writer.initiate_report_writing(
        reports,
        list(dataset),
        report_path=_artifact_path(args.out, artifacts.report_path),
        table_path=_artifact_path(args.csv, artifacts.table_path),
        plots_dir=_artifact_path(args.plots, artifacts.plots_path),
    )

    if any(r.has_error for r in reports):
        return EXIT_DIMENSION_ERROR
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    manager = _configuration(args)
    distfit = manager.get_distribution_fit_config()
    if args.criterion:
        distfit = dataclasses.replace(distfit, criterion=Criterion.parse(args.criterion))
    dataset = _load(args)

    fitting = DistributionFitting(distfit)
    rows = []
    failed = False
    for record in dataset:
        try:
            ranked = fitting.initiate_distribution_fitting(record.series)
        except NoFamilyFits as e:
            failed = True
            rows += [
                {"dimension_id": record.id, "family": family, "note": reason}
                for family, reason in e.reasons.items()
            ]
            continue
        for rank, fit in enumerate(ranked.fits, start=1):
            rows.append(
                {
                    "dimension_id": record.id,
                    "rank": rank,
                    "family": fit.family.value,
                    "params": ";".join(
                        f"{k}={v:.6g}" for k, v in fit.named_params.items()
                    ),
                    "loglik": f"{fit.loglik:.6g}",
                    "aic": f"{fit.aic:.6g}",
                    "bic": f"{fit.bic:.6g}",
                    "aicc": format_fixed(fit.aicc, 4),
                }
            )
        rows += [
            {"dimension_id": record.id, "family": family, "note": reason}
            for family, reason in ranked.excluded.items()
        ]

    columns = [
        "dimension_id",
        "rank",
        "family",
        "params",
        "loglik",
        "aic",
        "bic",
        "aicc",
        "note",
    ]
    frame = pd.DataFrame(rows, columns=columns).astype("object")
    frame["rank"] = frame["rank"].map(lambda r: "" if pd.isna(r) else str(int(r)))
    _emit(_frame_csv(frame.fillna(""), index=False), args.out)
    return EXIT_DIMENSION_ERROR if failed else EXIT_OK


def cmd_sigma(args: argparse.Namespace) -> int:
    windows = parse_windows(args.windows)
    dataset = _load(args)

    table = sigma_table(dataset, windows=windows)
    columns = []
    if "overall" in args.methods:
        columns.append("Overall")
    for prefix, method in (("A", "amr"), ("M", "mmr")):
        if method in args.methods:
            columns += [f"{prefix}{w}" for w in windows]
    _emit(_frame_csv(table[columns], float_format="%.6g"), args.out)
    return EXIT_OK


def cmd_summary(args: argparse.Namespace) -> int:
    manager = _configuration(args)
    summary_config = manager.get_summary_config()
    dataset = _load(args)

    rows = []
    for name, summary in case_study_summary(dataset, summary_config).items():
        stats = summary.ratio_stats
        for batch_bin in summary.bins:
            rows.append(
                {
                    "summary": name,
                    "range": batch_bin.label,
                    "count": batch_bin.count,
                    "pct": f"{batch_bin.pct:.2f}",
                    "pct_cum": f"{batch_bin.pct_cum:.2f}",
                    "ratio_min": format_fixed(stats.min) if stats else "",
                    "ratio_max": format_fixed(stats.max) if stats else "",
                }
            )
    _emit(_frame_csv(pd.DataFrame(rows), index=False), args.out)

    if args.plots is not None:
        svg = emit_ratio_histogram_svg(
            capability_ratio_values(dataset, "Cpk"),
            summary_config.ratio_limits,
            "Cpk/Ppk",
        )
        save_bytes(Path(args.plots) / RATIO_PLOT_FILE, svg)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help exits 0; parse errors exit 64
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        return args.handler(args)
    except InvalidConfiguration as e:
        print(f"pcap: {e.message}", file=sys.stderr)
        return EXIT_USAGE
    except CapabilityError as e:
        print(f"pcap: {e.code}: {e.message}", file=sys.stderr)
        return EXIT_DATA
    except CustomException as e:
        if isinstance(e.original, OSError):
            print(f"pcap: {e.original}", file=sys.stderr)
            return EXIT_IO
        logger.error(e.error_message)
        raise
    except OSError as e:
        print(f"pcap: {e}", file=sys.stderr)
        return EXIT_IO
