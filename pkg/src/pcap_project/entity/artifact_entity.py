import math
from dataclasses import dataclass, field
from enum import Enum

from pcap_project.entity.domain_entity import (
    DistributionFit,
    QuantileTriple,
    SigmaEstimate,
    ToleranceClass,
    ToleranceSpec,
)


class OutlierMethod(str, Enum):
    TUKEY_FENCE = "TukeyFence"
    GRUBBS = "Grubbs"

    @classmethod
    def parse(cls, text: str) -> "OutlierMethod":
        aliases = {"tukey": cls.TUKEY_FENCE, "tukeyfence": cls.TUKEY_FENCE}
        key = str(text).strip().lower()
        if key in aliases:
            return aliases[key]
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"Unknown outlier method: {text!r}")


@dataclass(frozen=True)
class FlaggedValue:
    index: int
    value: float


@dataclass(frozen=True)
class OutlierReport:
    method: OutlierMethod
    flagged: tuple[FlaggedValue, ...]
    params: dict = field(default_factory=dict)

    @property
    def indices(self) -> list[int]:
        return [f.index for f in self.flagged]

    @property
    def has_outliers(self) -> bool:
        return bool(self.flagged)


@dataclass(frozen=True)
class NormalityResult:
    a2: float
    a2_star: float
    p_value: float
    alpha: float
    passed: bool


class Criterion(str, Enum):
    AIC = "AIC"
    BIC = "BIC"
    AICC = "AICc"

    @classmethod
    def parse(cls, text: str) -> "Criterion":
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise ValueError(f"Unknown information criterion: {text!r}")

    def of(self, fit: DistributionFit) -> float:
        return {
            Criterion.AIC: fit.aic,
            Criterion.BIC: fit.bic,
            Criterion.AICC: fit.aicc,
        }[self]


@dataclass(frozen=True)
class RankedFits:
    fits: tuple[DistributionFit, ...]
    criterion: Criterion
    excluded: dict[str, str] = field(default_factory=dict)

    @property
    def best(self) -> DistributionFit:
        return self.fits[0]


class ReasonCode(str, Enum):
    UNILATERAL_CP_UNDEFINED = "UNILATERAL_CP_UNDEFINED"
    NO_TARGET = "NO_TARGET"
    ZERO_SIGMA = "ZERO_SIGMA"
    DEGENERATE_QUANTILES = "DEGENERATE_QUANTILES"
    ZERO_BEYOND_HALF_TOLERANCE = "ZERO_BEYOND_HALF_TOLERANCE"
    MISSING_LIMIT = "MISSING_LIMIT"


@dataclass(frozen=True)
class IndexValue:
    """A computed index, or the reason it is undefined.

    ZERO_BEYOND_HALF_TOLERANCE is the one reason that accompanies a value (0).
    """

    name: str
    value: float | None = None
    reason: ReasonCode | None = None

    def __post_init__(self):
        if self.reason is ReasonCode.ZERO_BEYOND_HALF_TOLERANCE:
            if self.value != 0.0:
                raise ValueError(f"{self.name}: zero branch must carry value 0")
        elif (self.value is None) == (self.reason is None):
            raise ValueError(f"{self.name}: exactly one of value/reason is required")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError(f"{self.name}: index value must be finite")

    @property
    def is_defined(self) -> bool:
        return self.value is not None

    @classmethod
    def undefined(cls, name: str, reason: ReasonCode) -> "IndexValue":
        return cls(name=name, value=None, reason=reason)


class AnalysisPath(str, Enum):
    NORMAL = "normal"
    NON_NORMAL = "non_normal"
    ERROR = "error"


class CapabilityRating(str, Enum):
    CAPABLE = "CAPABLE"
    MARGINAL = "MARGINAL"
    NOT_CAPABLE = "NOT_CAPABLE"
    UNDEFINED = "UNDEFINED"


@dataclass(frozen=True)
class TraceEntry:
    node: str
    predicate: str
    branch: str


@dataclass(frozen=True)
class CapabilityReport:
    dimension_id: str
    n: int
    tolerance: ToleranceClass | None
    trace: tuple[TraceEntry, ...]
    spec: ToleranceSpec | None = None
    mean: float | None = None
    sigma_overall: SigmaEstimate | None = None
    sigma_within: SigmaEstimate | None = None
    outliers: OutlierReport | None = None
    normality: NormalityResult | None = None
    best_fit: DistributionFit | None = None
    quantiles: QuantileTriple | None = None
    quantile_source: str | None = None
    indices: dict[str, IndexValue] = field(default_factory=dict)
    ppm_nonconforming: float | None = None
    rating: CapabilityRating = CapabilityRating.UNDEFINED
    path: AnalysisPath = AnalysisPath.ERROR
    error: dict | None = None

    def __post_init__(self):
        if not self.trace:
            raise ValueError("a report needs a non-empty decision trace")

    @property
    def has_error(self) -> bool:
        return self.error is not None

    def index(self, name: str) -> IndexValue:
        return self.indices[name]

    def value(self, name: str) -> float | None:
        return self.indices[name].value


@dataclass(frozen=True)
class BatchBin:
    lower: float
    upper: float
    count: int
    pct: float
    pct_cum: float

    @property
    def label(self) -> str:
        return f"[{self.lower:g}, {self.upper:g})"


@dataclass(frozen=True)
class RatioStats:
    label: str
    min: float
    max: float


@dataclass(frozen=True)
class BatchSummary:
    bins: tuple[BatchBin, ...]
    total: int
    ratio_stats: RatioStats | None = None
