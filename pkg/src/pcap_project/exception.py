import sys
from typing import Any


def error_message_detail(error: Exception, error_detail: Any) -> str:
    _, _, exc_tb = error_detail.exc_info()
    if exc_tb is not None:
        file_name = exc_tb.tb_frame.f_code.co_filename
        line_number = exc_tb.tb_lineno
    else:
        file_name = "<unknown>"
        line_number = 0

    error_message = (
        f"Error occurred in python script [{file_name}] "
        f"line number [{line_number}] error message [{error}]"
    )
    return error_message


class CustomException(Exception):
    """Wraps an unexpected failure (I/O, serialization) with its origin."""

    def __init__(self, error_message: Exception, error_detail: Any = sys):
        super().__init__(str(error_message))
        self.original = error_message
        self.error_message = error_message_detail(
            error_message, error_detail=error_detail
        )

    def __str__(self) -> str:
        return self.error_message


class CapabilityError(Exception):
    """Base class of every domain error; `code` is machine-readable."""

    code = "CAPABILITY_ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


# Ingestion


class EmptyInput(CapabilityError):
    code = "EMPTY_INPUT"


class MalformedHeader(CapabilityError):
    code = "MALFORMED_HEADER"


class MissingToleranceRow(CapabilityError):
    code = "MISSING_TOLERANCE_ROW"


class NonNumericCell(CapabilityError):
    code = "NON_NUMERIC_CELL"

    def __init__(self, row: str, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"Cell at row [{row}] column [{column}] is not numeric: {value!r}"
        )


class DuplicateDimensionId(CapabilityError):
    code = "DUPLICATE_DIMENSION_ID"


# Domain types


class InvalidSpecification(CapabilityError):
    code = "INVALID_SPECIFICATION"


class InvalidSeries(CapabilityError):
    code = "INVALID_SERIES"


class InvalidConfiguration(CapabilityError):
    code = "INVALID_CONFIGURATION"


# Screening and estimation


class TooFewSamples(CapabilityError):
    code = "TOO_FEW_SAMPLES"


class ConstantSeries(CapabilityError):
    code = "CONSTANT_SERIES"


class DegenerateRange(CapabilityError):
    code = "DEGENERATE_RANGE"


class OutOfTable(CapabilityError):
    code = "OUT_OF_TABLE"


class WindowOutOfRange(CapabilityError):
    code = "WINDOW_OUT_OF_RANGE"


class SubgroupNotOne(CapabilityError):
    code = "SUBGROUP_NOT_ONE"


class SubgroupTooSmall(CapabilityError):
    code = "SUBGROUP_TOO_SMALL"


class SubgroupOutOfTable(CapabilityError):
    code = "SUBGROUP_OUT_OF_TABLE"


class GroupTooSmall(CapabilityError):
    code = "GROUP_TOO_SMALL"


# Distribution fitting


class SupportViolation(CapabilityError):
    code = "SUPPORT_VIOLATION"


class DegenerateData(CapabilityError):
    code = "DEGENERATE_DATA"


class NonConvergence(CapabilityError):
    code = "NON_CONVERGENCE"


class NoFamilyFits(CapabilityError):
    code = "NO_FAMILY_FITS"

    def __init__(self, reasons: dict[str, str]):
        self.reasons = dict(reasons)
        detail = "; ".join(f"{family}: {reason}" for family, reason in reasons.items())
        super().__init__(f"No candidate family could be fitted ({detail})")


# Summaries


class InvalidBinEdges(CapabilityError):
    code = "INVALID_BIN_EDGES"
