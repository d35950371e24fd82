import io
import re
import sys
from decimal import Decimal
from pathlib import Path

import pandas as pd

from pcap_project.constants import (
    HEADER_LABEL,
    TOL_MINUS_ROW,
    TOL_PLUS_ROW,
    TOL_TARGET_ROW,
)
from pcap_project.entity.domain_entity import (
    Dataset,
    DimensionRecord,
    MeasurementSeries,
    ToleranceSpec,
)
from pcap_project.exception import (
    CapabilityError,
    CustomException,
    DuplicateDimensionId,
    EmptyInput,
    InvalidSpecification,
    MalformedHeader,
    MissingToleranceRow,
    NonNumericCell,
)
from pcap_project.logger import logger
from pcap_project.utils import format_decimal

# plain decimal notation: no separators, no nan/inf
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_TOLERANCE_ROWS = (TOL_TARGET_ROW, TOL_PLUS_ROW, TOL_MINUS_ROW)


def _read_cells(data: bytes) -> pd.DataFrame:
    if not data.strip():
        raise EmptyInput("input contains no data")
    try:
        frame = pd.read_csv(
            io.BytesIO(data),
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding="utf-8-sig",
        )
    except pd.errors.EmptyDataError as e:
        raise EmptyInput("input contains no data") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise MalformedHeader(f"input is not a readable CSV table: {e}") from e
    return frame.fillna("").map(lambda cell: str(cell).strip())


def _decimal_cell(text: str, row: str, column: str) -> Decimal:
    if not _NUMBER.match(text):
        raise NonNumericCell(row, column, text)
    return Decimal(text)


def _tolerance_spec(target: Decimal, plus: Decimal, minus: Decimal) -> ToleranceSpec:
    """(T, Tol+, Tol-) to limits; a zero leg drops that limit."""
    if plus < 0 or minus < 0:
        raise InvalidSpecification("tolerance legs must be non-negative magnitudes")
    if plus == 0 and minus == 0:
        raise InvalidSpecification("both tolerance legs are zero")
    usl = float(target + plus) if plus != 0 else None
    lsl = float(target - minus) if minus != 0 else None
    return ToleranceSpec(lsl=lsl, usl=usl, target=float(target))


def parse_dataset(data: bytes, subgroup_size: int = 1) -> Dataset:
    """Parses the NO./T/Tol+/Tol- table layout.

    Samples keep file order. A column may end early (trailing empty cells)
    but may not have gaps.
    """
    frame = _read_cells(data)

    header = list(frame.iloc[0])
    if header[0] != HEADER_LABEL:
        raise MalformedHeader(
            f"first cell must be {HEADER_LABEL!r}, got {header[0]!r}"
        )
    ids = header[1:]
    while ids and ids[-1] == "":
        ids.pop()
    if not ids:
        raise MalformedHeader("header names no dimensions")
    if any(i == "" for i in ids):
        raise MalformedHeader("header has an empty dimension id")
    seen: set[str] = set()
    for dimension_id in ids:
        if dimension_id in seen:
            raise DuplicateDimensionId(f"Dimension id {dimension_id!r} repeated")
        seen.add(dimension_id)

    tolerance_rows: dict[str, list[str]] = {}
    sample_rows: list[tuple[str, list[str]]] = []
    for _, raw in frame.iloc[1:].iterrows():
        cells = list(raw)
        label, row_cells = cells[0], cells[1 : len(ids) + 1]
        if any(c != "" for c in cells[len(ids) + 1 :]):
            raise MalformedHeader(f"row {label!r} has more cells than the header")
        row_cells += [""] * (len(ids) - len(row_cells))
        if label in _TOLERANCE_ROWS:
            if label in tolerance_rows:
                raise MalformedHeader(f"row {label!r} appears twice")
            tolerance_rows[label] = row_cells
        else:
            sample_rows.append((label, row_cells))

    missing = [r for r in _TOLERANCE_ROWS if r not in tolerance_rows]
    if missing:
        raise MissingToleranceRow(f"missing tolerance row(s): {', '.join(missing)}")

    dimensions = []
    for col, dimension_id in enumerate(ids):
        target, plus, minus = (
            _decimal_cell(tolerance_rows[r][col], r, dimension_id)
            for r in _TOLERANCE_ROWS
        )
        spec = _tolerance_spec(target, plus, minus)

        values: list[float] = []
        ended_at: str | None = None
        for label, row in sample_rows:
            cell = row[col]
            if cell == "":
                ended_at = ended_at or label
                continue
            if ended_at is not None:
                raise NonNumericCell(ended_at, dimension_id, "")
            values.append(float(_decimal_cell(cell, label, dimension_id)))

        series = MeasurementSeries(tuple(values), subgroup_size=subgroup_size)
        dimensions.append(DimensionRecord(dimension_id, spec, series))

    return Dataset(tuple(dimensions))


def _leg(outer: float, inner: float) -> str:
    """Exact decimal distance between two limits, so T + leg re-parses to the limit."""
    leg = abs(Decimal(format_decimal(outer)) - Decimal(format_decimal(inner)))
    return format(leg, "f")


def dataset_to_csv(dataset: Dataset) -> bytes:
    """Canonical NO./T/Tol+/Tol- layout with shortest round-trip decimals."""
    if len(dataset) == 0:
        raise EmptyInput("cannot write an empty dataset")

    target_row, plus_row, minus_row = [TOL_TARGET_ROW], [TOL_PLUS_ROW], [TOL_MINUS_ROW]
    for record in dataset:
        spec = record.spec
        if spec.target is None:
            raise InvalidSpecification(
                f"dimension {record.id!r} has no target; the table layout needs one"
            )
        target_row.append(format_decimal(spec.target))
        plus_row.append("0" if spec.usl is None else _leg(spec.usl, spec.target))
        minus_row.append("0" if spec.lsl is None else _leg(spec.target, spec.lsl))

    depth = max(record.series.n for record in dataset)
    sample_rows = []
    for i in range(depth):
        row = [str(i + 1)]
        for record in dataset:
            values = record.series.values
            row.append(format_decimal(values[i]) if i < len(values) else "")
        sample_rows.append(row)

    rows = [[HEADER_LABEL, *dataset.ids], target_row, plus_row, minus_row, *sample_rows]
    text = pd.DataFrame(rows).to_csv(header=False, index=False, lineterminator="\n")
    return text.encode("utf-8")


class DataIngestion:
    def __init__(self, subgroup_size: int = 1):
        self.subgroup_size = subgroup_size

    def initiate_data_ingestion(self, input_path: Path) -> Dataset:
        try:
            logger.info(f"Starting data ingestion from {input_path}")
            data = Path(input_path).read_bytes()
            dataset = parse_dataset(data, subgroup_size=self.subgroup_size)
            logger.info(
                f"Ingested {len(dataset)} dimension(s): {', '.join(dataset.ids)}"
            )
            return dataset
        except CapabilityError:
            raise
        except Exception as e:
            logger.error(f"Error occurred during data ingestion: {e}")
            raise CustomException(e, sys) from e
