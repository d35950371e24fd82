import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from pcap_project.constants import (
    DEFAULT_BIN_EDGES,
    DEFAULT_RATIO_LIMITS,
    MAX_WINDOW,
    MIN_WINDOW,
)
from pcap_project.entity.artifact_entity import Criterion, OutlierMethod
from pcap_project.entity.domain_entity import DEFAULT_SYMMETRY_TOL, Family, SigmaMethod
from pcap_project.exception import InvalidConfiguration


class AnalysisMode(str, Enum):
    FULL = "Full"
    SIMPLIFIED = "Simplified"

    @classmethod
    def parse(cls, text: str) -> "AnalysisMode":
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise InvalidConfiguration(f"Unknown mode: {text!r}")


class OutlierAction(str, Enum):
    FLAG = "Flag"
    EXCLUDE = "Exclude"

    @classmethod
    def parse(cls, text: str) -> "OutlierAction":
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise InvalidConfiguration(f"Unknown outlier action: {text!r}")


@dataclass(frozen=True)
class OutlierConfig:
    """method=None switches screening off entirely."""

    method: OutlierMethod | None = OutlierMethod.TUKEY_FENCE
    action: OutlierAction = OutlierAction.FLAG
    tukey_k: float = 1.5
    grubbs_alpha: float = 0.05
    grubbs_iterate: bool = False

    def __post_init__(self):
        if not self.tukey_k > 0:
            raise InvalidConfiguration(f"tukey_k must be > 0, got {self.tukey_k}")
        if not 0 < self.grubbs_alpha < 1:
            raise InvalidConfiguration(
                f"grubbs_alpha must lie in (0, 1), got {self.grubbs_alpha}"
            )

    @property
    def params(self) -> dict:
        if self.method is OutlierMethod.GRUBBS:
            return {"alpha": self.grubbs_alpha, "iterate": self.grubbs_iterate}
        return {"k": self.tukey_k}


@dataclass(frozen=True)
class SigmaConfig:
    """Within-sigma selection; method=None defers to the layout default."""

    method: SigmaMethod | None = None
    window: int = 2
    srmssd_unbias: str = "c4"

    def __post_init__(self):
        if not MIN_WINDOW <= self.window <= MAX_WINDOW:
            raise InvalidConfiguration(
                f"moving-range window must lie in [{MIN_WINDOW}, {MAX_WINDOW}], "
                f"got {self.window}"
            )
        if self.srmssd_unbias not in ("c4", "none"):
            raise InvalidConfiguration(
                f"srmssd_unbias must be 'c4' or 'none', got {self.srmssd_unbias!r}"
            )


@dataclass(frozen=True)
class DistributionFitConfig:
    criterion: Criterion = Criterion.AICC
    candidates: tuple[Family, ...] = tuple(Family)
    weibull3p_min_n: int = 20

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise InvalidConfiguration("at least one candidate family is required")
        if len(set(self.candidates)) != len(self.candidates):
            raise InvalidConfiguration("candidate families must not repeat")
        if self.weibull3p_min_n < 4:
            raise InvalidConfiguration("weibull3p_min_n must be >= 4")


@dataclass(frozen=True)
class WorkflowConfig:
    mode: AnalysisMode = AnalysisMode.FULL
    alpha: float = 0.05
    outliers: OutlierConfig = field(default_factory=OutlierConfig)
    sigma: SigmaConfig = field(default_factory=SigmaConfig)
    distfit: DistributionFitConfig = field(default_factory=DistributionFitConfig)
    symmetry_tol: float = DEFAULT_SYMMETRY_TOL
    max_workers: int = 4

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidConfiguration(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (math.isfinite(self.symmetry_tol) and self.symmetry_tol >= 0):
            raise InvalidConfiguration(
                f"symmetry_tol must be finite and >= 0, got {self.symmetry_tol}"
            )
        if self.max_workers < 1:
            raise InvalidConfiguration("max_workers must be >= 1")


@dataclass(frozen=True)
class SummaryConfig:
    bin_edges: tuple[float, ...] = DEFAULT_BIN_EDGES
    ratio_limits: tuple[float, float] = DEFAULT_RATIO_LIMITS

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", tuple(float(e) for e in self.bin_edges))
        object.__setattr__(
            self, "ratio_limits", tuple(float(e) for e in self.ratio_limits)
        )
        if len(self.bin_edges) < 2:
            raise InvalidConfiguration("bin_edges needs at least two edges")
        if any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise InvalidConfiguration("bin_edges must be strictly increasing")
        lo, hi = self.ratio_limits
        if not 0 < lo < hi:
            raise InvalidConfiguration("ratio_limits must satisfy 0 < lo < hi")


@dataclass(frozen=True)
class ArtifactConfig:
    root_dir: Path = Path("artifacts/reports")
    report_file: str = "report.json"
    table_file: str = "report.csv"
    plots_dir: str = "plots"

    @property
    def report_path(self) -> Path:
        return self.root_dir / self.report_file

    @property
    def table_path(self) -> Path:
        return self.root_dir / self.table_file

    @property
    def plots_path(self) -> Path:
        return self.root_dir / self.plots_dir


@dataclass(frozen=True)
class ReportSchemaConfig:
    """Column layout of the CSV-row report."""

    report_columns: tuple[str, ...]
    index_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "report_columns", tuple(self.report_columns))
        object.__setattr__(self, "index_names", tuple(self.index_names))
        if len(set(self.index_names)) != len(self.index_names):
            raise InvalidConfiguration("index_names must not repeat")
