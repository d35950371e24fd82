"""Shared domain vocabulary: tolerances, series, estimates, fits, quantiles."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from pcap_project.exception import (
    DuplicateDimensionId,
    InvalidSeries,
    InvalidSpecification,
    TooFewSamples,
)

DEFAULT_SYMMETRY_TOL = 1e-9


class ToleranceKind(str, Enum):
    BILATERAL_SYMMETRIC = "BilateralSymmetric"
    BILATERAL_ASYMMETRIC = "BilateralAsymmetric"
    UNILATERAL_UPPER = "UnilateralUpper"
    UNILATERAL_LOWER = "UnilateralLower"

    @property
    def is_bilateral(self) -> bool:
        return self in (
            ToleranceKind.BILATERAL_SYMMETRIC,
            ToleranceKind.BILATERAL_ASYMMETRIC,
        )


@dataclass(frozen=True)
class ToleranceClass:
    kind: ToleranceKind
    has_target: bool


@dataclass(frozen=True)
class ToleranceSpec:
    """Specification limits in measurement units; target doubles as nominal."""

    lsl: float | None = None
    usl: float | None = None
    target: float | None = None
    units: str | None = None

    def __post_init__(self):
        for name in ("lsl", "usl", "target"):
            value = getattr(self, name)
            if value is not None:
                if not math.isfinite(value):
                    raise InvalidSpecification(f"{name} must be finite, got {value}")
                object.__setattr__(self, name, float(value))
        if self.lsl is None and self.usl is None:
            raise InvalidSpecification("At least one of lsl, usl is required")
        if self.lsl is not None and self.usl is not None:
            if not self.lsl < self.usl:
                raise InvalidSpecification(
                    f"lsl ({self.lsl}) must be below usl ({self.usl})"
                )
            if self.target is not None and not (
                self.lsl <= self.target <= self.usl
            ):
                raise InvalidSpecification(
                    f"target ({self.target}) outside [{self.lsl}, {self.usl}]"
                )

    @property
    def is_bilateral(self) -> bool:
        return self.lsl is not None and self.usl is not None

    @property
    def midpoint(self) -> float | None:
        if not self.is_bilateral:
            return None
        return (self.usl + self.lsl) / 2  # type: ignore[operator]

    @property
    def width(self) -> float | None:
        if not self.is_bilateral:
            return None
        return self.usl - self.lsl  # type: ignore[operator]

    def affine(self, a: float, b: float) -> "ToleranceSpec":
        """Re-express the spec under x -> a*x + b with a > 0."""
        if a <= 0:
            raise InvalidSpecification("affine scale must be positive")

        def _map(v: float | None) -> float | None:
            return None if v is None else a * v + b

        return ToleranceSpec(
            lsl=_map(self.lsl),
            usl=_map(self.usl),
            target=_map(self.target),
            units=self.units,
        )


def classify_tolerance(
    spec: ToleranceSpec, symmetry_tol: float = DEFAULT_SYMMETRY_TOL
) -> ToleranceClass:
    """Unique classification of a (valid) specification.

    symmetry_tol is relative to the tolerance width.
    """
    has_target = spec.target is not None
    if spec.is_bilateral:
        offset = abs(spec.target - spec.midpoint) if has_target else 0.0  # type: ignore[operator]
        if offset > symmetry_tol * spec.width:  # type: ignore[operator]
            return ToleranceClass(ToleranceKind.BILATERAL_ASYMMETRIC, has_target)
        return ToleranceClass(ToleranceKind.BILATERAL_SYMMETRIC, has_target)
    if spec.usl is not None:
        return ToleranceClass(ToleranceKind.UNILATERAL_UPPER, has_target)
    return ToleranceClass(ToleranceKind.UNILATERAL_LOWER, has_target)


@dataclass(frozen=True)
class MeasurementSeries:
    """Observations in collection order; subgroup_size 1 means individuals."""

    values: tuple[float, ...]
    subgroup_size: int = 1

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 2:
            raise TooFewSamples(f"A series needs at least 2 values, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise InvalidSeries("Series values must be finite")
        if not isinstance(self.subgroup_size, int) or self.subgroup_size < 1:
            raise InvalidSeries(f"subgroup_size must be >= 1, got {self.subgroup_size}")
        if self.subgroup_size > 1 and len(values) % self.subgroup_size != 0:
            raise InvalidSeries(
                f"{len(values)} values do not form whole subgroups "
                f"of size {self.subgroup_size}"
            )

    @classmethod
    def from_values(
        cls, values: Sequence[float] | np.ndarray, subgroup_size: int = 1
    ) -> "MeasurementSeries":
        return cls(
            values=tuple(np.asarray(values, dtype=float).tolist()),
            subgroup_size=subgroup_size,
        )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        arr = np.array(self.values, dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def n_subgroups(self) -> int:
        return self.n // self.subgroup_size

    def subgroups(self) -> np.ndarray:
        """Values reshaped to (k, m), one row per subgroup, order preserved."""
        return self.array.reshape(-1, self.subgroup_size)

    def is_constant(self) -> bool:
        return max(self.values) == min(self.values)

    def without(self, indices: Sequence[int]) -> "MeasurementSeries":
        drop = set(indices)
        kept = [v for i, v in enumerate(self.values) if i not in drop]
        return MeasurementSeries(values=tuple(kept), subgroup_size=self.subgroup_size)

    def affine(self, a: float, b: float) -> "MeasurementSeries":
        return MeasurementSeries.from_values(
            a * self.array + b, subgroup_size=self.subgroup_size
        )


class SigmaMethod(str, Enum):
    OVERALL = "Overall"
    AMR = "AMR"
    MMR = "MMR"
    SRMSSD = "SRMSSD"
    RBAR = "Rbar"
    SBAR = "Sbar"
    POOLED = "Pooled"

    @property
    def uses_window(self) -> bool:
        return self in (SigmaMethod.AMR, SigmaMethod.MMR)

    @classmethod
    def parse(cls, text: str) -> "SigmaMethod":
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise ValueError(f"Unknown sigma method: {text!r}")


@dataclass(frozen=True)
class SigmaEstimate:
    method: SigmaMethod
    value: float
    window: int | None = None

    def __post_init__(self):
        if not self.value >= 0:
            raise InvalidSeries(f"sigma must be >= 0, got {self.value}")
        if self.method.uses_window != (self.window is not None):
            raise InvalidSeries(
                f"window must be given exactly for AMR/MMR ({self.method.value})"
            )

    @property
    def label(self) -> str:
        if self.window is None:
            return self.method.value
        return f"{self.method.value}{self.window}"


class Family(str, Enum):
    NORMAL = "Normal"
    LOGNORMAL = "LogNormal"
    EXPONENTIAL = "Exponential"
    GAMMA = "Gamma"
    WEIBULL2P = "Weibull2p"
    WEIBULL3P = "Weibull3p"

    @property
    def k(self) -> int:
        return len(_FAMILY_PARAMS[self])

    @property
    def param_names(self) -> tuple[str, ...]:
        return _FAMILY_PARAMS[self]

    @property
    def order(self) -> int:
        return list(Family).index(self)

    @classmethod
    def parse(cls, text: str) -> "Family":
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise ValueError(f"Unknown distribution family: {text!r}")


_FAMILY_PARAMS: dict[Family, tuple[str, ...]] = {
    Family.NORMAL: ("mu", "sigma"),
    Family.LOGNORMAL: ("mu_log", "sigma_log"),
    Family.EXPONENTIAL: ("rate",),
    Family.GAMMA: ("shape", "scale"),
    Family.WEIBULL2P: ("shape", "scale"),
    Family.WEIBULL3P: ("shape", "scale", "location"),
}


@dataclass(frozen=True)
class DistributionFit:
    family: Family
    params: tuple[float, ...]
    n: int
    loglik: float
    aic: float
    bic: float
    aicc: float

    def __post_init__(self):
        if len(self.params) != self.family.k:
            raise ValueError(
                f"{self.family.value} takes {self.family.k} parameters, "
                f"got {len(self.params)}"
            )

    @property
    def k(self) -> int:
        return self.family.k

    @property
    def named_params(self) -> dict[str, float]:
        return dict(zip(self.family.param_names, self.params))


@dataclass(frozen=True)
class QuantileTriple:
    p00135: float
    p50: float
    p99865: float

    def __post_init__(self):
        if not (self.p00135 <= self.p50 <= self.p99865):
            raise ValueError(
                f"quantiles out of order: {self.p00135}, {self.p50}, {self.p99865}"
            )

    @property
    def is_strict(self) -> bool:
        return self.p00135 < self.p50 < self.p99865

    @property
    def span(self) -> float:
        return self.p99865 - self.p00135


@dataclass(frozen=True)
class DimensionRecord:
    id: str
    spec: ToleranceSpec
    series: MeasurementSeries


@dataclass(frozen=True)
class Dataset:
    dimensions: tuple[DimensionRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        seen: set[str] = set()
        for record in self.dimensions:
            if record.id in seen:
                raise DuplicateDimensionId(f"Dimension id {record.id!r} repeated")
            seen.add(record.id)

    def __len__(self) -> int:
        return len(self.dimensions)

    def __iter__(self):
        return iter(self.dimensions)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.dimensions]

    def get(self, dimension_id: str) -> DimensionRecord:
        for record in self.dimensions:
            if record.id == dimension_id:
                return record
        raise KeyError(dimension_id)
