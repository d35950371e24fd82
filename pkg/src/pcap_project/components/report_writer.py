import re
import sys
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd

from pcap_project.components.plotting import emit_histogram_svg
from pcap_project.constants import DEFAULT_INDEX_NAMES, DEFAULT_REPORT_COLUMNS
from pcap_project.entity.artifact_entity import CapabilityReport
from pcap_project.entity.config_entity import ArtifactConfig, ReportSchemaConfig
from pcap_project.entity.domain_entity import DimensionRecord
from pcap_project.entity.report_schema import ReportSetModel, to_report_model
from pcap_project.exception import CapabilityError, CustomException
from pcap_project.logger import logger
from pcap_project.utils import finite_or_none, format_fixed, save_bytes

_DEFAULT_SCHEMA = ReportSchemaConfig(
    report_columns=DEFAULT_REPORT_COLUMNS, index_names=DEFAULT_INDEX_NAMES
)
_UNSAFE_FILENAME = re.compile(r"[^A-Za-z0-9._-]+")


class ReportFormat(str, Enum):
    JSON = "json"
    CSV_ROW = "csv-row"


def index_column(name: str) -> str:
    """CSV column for an index name: "Cpk*" -> "cpk_star"."""
    return name.lower().replace("*", "_star")


def csv_columns(schema: ReportSchemaConfig | None = None) -> list[str]:
    schema = schema or _DEFAULT_SCHEMA
    columns = list(schema.report_columns)
    for name in schema.index_names:
        column = index_column(name)
        columns += [column, f"{column}_reason"]
    return columns


def _num(value: float | None) -> str:
    value = finite_or_none(value)
    return "" if value is None else f"{value:.6g}"


def _flag(value: bool | None) -> str:
    if value is None:
        return ""
    return "true" if value else "false"


def _report_fields(report: CapabilityReport) -> dict[str, str]:
    q = report.quantiles
    normality = report.normality
    return {
        "dimension_id": report.dimension_id,
        "n": str(report.n),
        "tolerance_kind": report.tolerance.kind.value if report.tolerance else "",
        "has_target": _flag(report.tolerance.has_target if report.tolerance else None),
        "path": report.path.value,
        "mean": _num(report.mean),
        "sigma_overall": _num(
            report.sigma_overall.value if report.sigma_overall else None
        ),
        "sigma_within_method": (
            report.sigma_within.label if report.sigma_within else ""
        ),
        "sigma_within": _num(report.sigma_within.value if report.sigma_within else None),
        "outlier_count": (
            str(len(report.outliers.flagged)) if report.outliers is not None else ""
        ),
        "a2_star": _num(normality.a2_star if normality else None),
        "p_value": _num(normality.p_value if normality else None),
        "normality_passed": _flag(normality.passed if normality else None),
        "best_family": report.best_fit.family.value if report.best_fit else "",
        "p00135": _num(q.p00135 if q else None),
        "p50": _num(q.p50 if q else None),
        "p99865": _num(q.p99865 if q else None),
        "ppm_nonconforming": _num(report.ppm_nonconforming),
        "rating": report.rating.value,
        "error_code": report.error["code"] if report.error else "",
    }


def report_row(
    report: CapabilityReport, schema: ReportSchemaConfig | None = None
) -> list[str]:
    """Flattened cells in csv_columns order.

    An index outside the report's set, or undefined, leaves its value cell
    empty; the reason cell carries the reason code when there is one.
    """
    schema = schema or _DEFAULT_SCHEMA
    fields = _report_fields(report)
    unknown = [c for c in schema.report_columns if c not in fields]
    if unknown:
        raise ValueError(f"unknown report column(s): {', '.join(unknown)}")

    row = [fields[c] for c in schema.report_columns]
    for name in schema.index_names:
        index = report.indices.get(name)
        if index is None:
            row += ["", ""]
            continue
        row += [
            format_fixed(index.value, 3),
            index.reason.value if index.reason is not None else "",
        ]
    return row


def emit_report(
    report: CapabilityReport,
    fmt: ReportFormat = ReportFormat.JSON,
    schema: ReportSchemaConfig | None = None,
) -> bytes:
    """One report as a JSON object or as a single headerless CSV row."""
    if fmt is ReportFormat.JSON:
        return to_report_model(report).model_dump_json(indent=2).encode("utf-8")
    frame = pd.DataFrame([report_row(report, schema)])
    text = frame.to_csv(header=False, index=False, lineterminator="\n")
    return text.encode("utf-8")


def emit_reports_json(reports: Iterable[CapabilityReport]) -> bytes:
    model = ReportSetModel(reports=[to_report_model(r) for r in reports])
    return model.model_dump_json(indent=2).encode("utf-8")


def emit_table(
    reports: Iterable[CapabilityReport], schema: ReportSchemaConfig | None = None
) -> bytes:
    """Header plus one CSV row per report, in report order."""
    frame = pd.DataFrame(
        [report_row(r, schema) for r in reports], columns=csv_columns(schema)
    )
    text = frame.to_csv(index=False, lineterminator="\n")
    return text.encode("utf-8")


def plot_filename(dimension_id: str) -> str:
    return f"{_UNSAFE_FILENAME.sub('_', dimension_id) or 'dimension'}.svg"


class ReportWriter:
    def __init__(
        self,
        artifact_config: ArtifactConfig | None = None,
        schema_config: ReportSchemaConfig | None = None,
    ):
        self.artifact_config = artifact_config or ArtifactConfig()
        self.schema_config = schema_config or _DEFAULT_SCHEMA

    def write_report(
        self, reports: Sequence[CapabilityReport], path: Path | None = None
    ) -> Path:
        path = Path(path or self.artifact_config.report_path)
        save_bytes(path, emit_reports_json(reports))
        return path

    def write_table(
        self, reports: Sequence[CapabilityReport], path: Path | None = None
    ) -> Path:
        path = Path(path or self.artifact_config.table_path)
        save_bytes(path, emit_table(reports, self.schema_config))
        return path

    def write_plots(
        self,
        records: Sequence[DimensionRecord],
        reports: Sequence[CapabilityReport],
        plots_dir: Path | None = None,
    ) -> list[Path]:
        """One histogram per analyzed dimension; errored or constant ones are skipped."""
        plots_dir = Path(plots_dir or self.artifact_config.plots_path)
        written = []
        for record, report in zip(records, reports):
            if report.has_error:
                continue
            try:
                svg = emit_histogram_svg(record.series, record.spec, report.quantiles)
            except CapabilityError as e:
                logger.warning(f"no plot for {record.id}: {e.message}")
                continue
            path = plots_dir / plot_filename(record.id)
            save_bytes(path, svg)
            written.append(path)
        return written

    def initiate_report_writing(
        self,
        reports: Sequence[CapabilityReport],
        records: Sequence[DimensionRecord] = (),
        report_path: Path | None = None,
        table_path: Path | None = None,
        plots_dir: Path | None = None,
    ) -> list[Path]:
        """Writes each artifact whose path is given; None skips it.

        Plots need the records the reports were computed from.
        """
        try:
            logger.info(f"Writing {len(reports)} report(s)")
            written = []
            if report_path is not None:
                written.append(self.write_report(reports, report_path))
            if table_path is not None:
                written.append(self.write_table(reports, table_path))
            if plots_dir is not None:
                written += self.write_plots(records, reports, plots_dir)
            return written
        except CapabilityError:
            raise
        except Exception as e:
            logger.error(f"Error occurred while writing reports: {e}")
            raise CustomException(e, sys) from e
