"""Normal and percentile-based capability indices.

Undefined cases come back as IndexValue reasons, never as exceptions.
"""

import math
import sys

from pcap_project.constants import (
    CAPABLE_THRESHOLD,
    MARGINAL_THRESHOLD,
    NONNORMAL_INDEX_NAMES,
    NORMAL_INDEX_NAMES,
    SIMPLIFIED_NONNORMAL_INDEX_NAMES,
    SIMPLIFIED_NORMAL_INDEX_NAMES,
)
from pcap_project.components.distribution_fitting import frozen_distribution
from pcap_project.entity.artifact_entity import (
    CapabilityRating,
    IndexValue,
    ReasonCode,
)
from pcap_project.entity.config_entity import AnalysisMode
from pcap_project.entity.domain_entity import (
    DEFAULT_SYMMETRY_TOL,
    DistributionFit,
    QuantileTriple,
    ToleranceKind,
    ToleranceSpec,
    classify_tolerance,
)
from pcap_project.exception import CapabilityError, CustomException
from pcap_project.logger import logger


def _is_asymmetric(spec: ToleranceSpec, symmetry_tol: float) -> bool:
    kind = classify_tolerance(spec, symmetry_tol).kind
    return kind is ToleranceKind.BILATERAL_ASYMMETRIC


def _starred_components(
    spec: ToleranceSpec, mu: float, sigma: float
) -> tuple[float, bool]:
    """min(C*pl, C*pu) and whether a zero branch produced it."""
    t = spec.target
    lower_leg = t - spec.lsl  # type: ignore[operator]
    upper_leg = spec.usl - t  # type: ignore[operator]
    offset = abs(t - mu)  # type: ignore[operator]

    if offset > lower_leg:
        cpl, lower_zero = 0.0, True
    else:
        cpl, lower_zero = (lower_leg - offset) / (3 * sigma), False
    if offset > upper_leg:
        cpu, upper_zero = 0.0, True
    else:
        cpu, upper_zero = (upper_leg - offset) / (3 * sigma), False

    value = min(cpl, cpu)
    return value, (lower_zero and cpl == value) or (upper_zero and cpu == value)


def _starred_value(name: str, value: float, zero_branch: bool) -> IndexValue:
    if zero_branch:
        return IndexValue(name, 0.0, ReasonCode.ZERO_BEYOND_HALF_TOLERANCE)
    return IndexValue(name, value)


def potential_index(
    spec: ToleranceSpec,
    sigma: float,
    respect_target: bool = True,
    *,
    symmetry_tol: float = DEFAULT_SYMMETRY_TOL,
    name: str = "Cp",
) -> IndexValue:
    """Tolerance width over process spread.

    With respect_target an asymmetric spec uses the nearer leg around the
    target. Pass sigma_overall for Pp.
    """
    if not spec.is_bilateral:
        return IndexValue.undefined(name, ReasonCode.UNILATERAL_CP_UNDEFINED)
    if not sigma > 0:
        return IndexValue.undefined(name, ReasonCode.ZERO_SIGMA)

    if respect_target and _is_asymmetric(spec, symmetry_tol):
        t = spec.target
        leg = min(spec.usl - t, t - spec.lsl)  # type: ignore[operator]
        return IndexValue(name, leg / (3 * sigma))
    return IndexValue(name, spec.width / (6 * sigma))  # type: ignore[operator]


def centering_index(
    spec: ToleranceSpec,
    mu: float,
    sigma: float,
    respect_target: bool = False,
    *,
    symmetry_tol: float = DEFAULT_SYMMETRY_TOL,
    name: str = "Cpk",
) -> IndexValue:
    """Distance from the mean to the nearer limit in units of 3 sigma.

    Negative values (mean outside the limits) are reported as computed.
    The target-aware form floors at 0 past either half tolerance.
    """
    if not sigma > 0:
        return IndexValue.undefined(name, ReasonCode.ZERO_SIGMA)

    if spec.is_bilateral:
        if respect_target and _is_asymmetric(spec, symmetry_tol):
            value, zero_branch = _starred_components(spec, mu, sigma)
            return _starred_value(name, value, zero_branch)
        upper = (spec.usl - mu) / (3 * sigma)  # type: ignore[operator]
        lower = (mu - spec.lsl) / (3 * sigma)  # type: ignore[operator]
        return IndexValue(name, min(upper, lower))
    if spec.usl is not None:
        return IndexValue(name, (spec.usl - mu) / (3 * sigma))
    return IndexValue(name, (mu - spec.lsl) / (3 * sigma))  # type: ignore[operator]


def upper_index(
    spec: ToleranceSpec, mu: float, sigma: float, *, name: str = "Cpu"
) -> IndexValue:
    if spec.usl is None:
        return IndexValue.undefined(name, ReasonCode.MISSING_LIMIT)
    if not sigma > 0:
        return IndexValue.undefined(name, ReasonCode.ZERO_SIGMA)
    return IndexValue(name, (spec.usl - mu) / (3 * sigma))


def lower_index(
    spec: ToleranceSpec, mu: float, sigma: float, *, name: str = "Cpl"
) -> IndexValue:
    if spec.lsl is None:
        return IndexValue.undefined(name, ReasonCode.MISSING_LIMIT)
    if not sigma > 0:
        return IndexValue.undefined(name, ReasonCode.ZERO_SIGMA)
    return IndexValue(name, (mu - spec.lsl) / (3 * sigma))


def taguchi_index(
    spec: ToleranceSpec,
    mu: float,
    sigma: float,
    respect_target: bool = True,
    *,
    symmetry_tol: float = DEFAULT_SYMMETRY_TOL,
    name: str = "Cpm",
) -> IndexValue:
    """Potential index penalised by the mean's distance from target."""
    if spec.target is None:
        return IndexValue.undefined(name, ReasonCode.NO_TARGET)
    if not sigma > 0:
        return IndexValue.undefined(name, ReasonCode.ZERO_SIGMA)

    t = spec.target
    d = 3 * math.sqrt(sigma**2 + (mu - t) ** 2)
    if spec.is_bilateral:
        if respect_target and _is_asymmetric(spec, symmetry_tol):
            leg = min(spec.usl - t, t - spec.lsl)  # type: ignore[operator]
            return IndexValue(name, leg / d)
        return IndexValue(name, spec.width / (2 * d))  # type: ignore[operator]
    if spec.usl is not None:
        return IndexValue(name, (spec.usl - t) / d)
    return IndexValue(name, (t - spec.lsl) / d)  # type: ignore[operator]


def taguchi_centering_index(
    spec: ToleranceSpec,
    mu: float,
    sigma: float,
    respect_target: bool = True,
    *,
    symmetry_tol: float = DEFAULT_SYMMETRY_TOL,
    name: str = "Cpmk",
) -> IndexValue:
    """Centering index penalised by the mean's distance from target.

    The bilateral numerator is min(USL - mu, mu - LSL).
    """
    if spec.target is None:
        return IndexValue.undefined(name, ReasonCode.NO_TARGET)
    if not sigma > 0:
        return IndexValue.undefined(name, ReasonCode.ZERO_SIGMA)

    t = spec.target
    d = 3 * math.sqrt(sigma**2 + (mu - t) ** 2)
    if spec.is_bilateral:
        if respect_target and _is_asymmetric(spec, symmetry_tol):
            value, zero_branch = _starred_components(spec, mu, sigma)
            penalty = math.sqrt(1 + ((mu - t) / sigma) ** 2)
            return _starred_value(name, value / penalty, zero_branch)
        nearer = min(spec.usl - mu, mu - spec.lsl)  # type: ignore[operator]
        return IndexValue(name, nearer / d)
    if spec.usl is not None:
        return IndexValue(name, (spec.usl - mu) / d)
    return IndexValue(name, (mu - spec.lsl) / d)  # type: ignore[operator]


def nonnormal_indices(spec: ToleranceSpec, q: QuantileTriple) -> list[IndexValue]:
    """CNp, CNpk, CNpu, CNpl, CNpm and CNpmk from percentiles.

    Asymmetric bilateral specs keep the bilateral forms: CNpm is the full
    width over 2d and CNpmk takes the nearer limit from the median, with d
    measuring spread and offset of the median from T.
    """
    if not q.is_strict:
        return [
            IndexValue.undefined(name, ReasonCode.DEGENERATE_QUANTILES)
            for name in NONNORMAL_INDEX_NAMES
        ]

    lo, med, hi = q.p00135, q.p50, q.p99865
    span = q.span

    if spec.is_bilateral:
        cnp = IndexValue("CNp", spec.width / span)  # type: ignore[operator]
    else:
        cnp = IndexValue.undefined("CNp", ReasonCode.UNILATERAL_CP_UNDEFINED)

    if spec.usl is not None:
        cnpu = IndexValue("CNpu", (spec.usl - med) / (hi - med))
    else:
        cnpu = IndexValue.undefined("CNpu", ReasonCode.MISSING_LIMIT)
    if spec.lsl is not None:
        cnpl = IndexValue("CNpl", (med - spec.lsl) / (med - lo))
    else:
        cnpl = IndexValue.undefined("CNpl", ReasonCode.MISSING_LIMIT)
    defined = [v.value for v in (cnpu, cnpl) if v.value is not None]
    cnpk = IndexValue("CNpk", min(defined))

    if spec.target is None:
        cnpm = IndexValue.undefined("CNpm", ReasonCode.NO_TARGET)
        cnpmk = IndexValue.undefined("CNpmk", ReasonCode.NO_TARGET)
    else:
        t = spec.target
        d = 3 * math.sqrt((span / 6) ** 2 + (med - t) ** 2)
        if spec.is_bilateral:
            cnpm = IndexValue("CNpm", spec.width / (2 * d))  # type: ignore[operator]
            nearer = min(spec.usl - med, med - spec.lsl)  # type: ignore[operator]
            cnpmk = IndexValue("CNpmk", nearer / d)
        elif spec.usl is not None:
            cnpm = IndexValue("CNpm", (spec.usl - t) / d)
            cnpmk = IndexValue("CNpmk", (spec.usl - med) / d)
        else:
            cnpm = IndexValue("CNpm", (t - spec.lsl) / d)  # type: ignore[operator]
            cnpmk = IndexValue("CNpmk", (med - spec.lsl) / d)  # type: ignore[operator]

    return [cnp, cnpk, cnpu, cnpl, cnpm, cnpmk]


def ppm_nonconforming(fit: DistributionFit, spec: ToleranceSpec) -> float:
    """Expected parts per million outside the limits under the fitted model."""
    dist = frozen_distribution(fit)
    below = float(dist.cdf(spec.lsl)) if spec.lsl is not None else 0.0
    above = float(dist.sf(spec.usl)) if spec.usl is not None else 0.0
    return 1e6 * (below + above)


def capability_rating(index: IndexValue | None) -> CapabilityRating:
    if index is None or index.value is None:
        return CapabilityRating.UNDEFINED
    if index.value >= CAPABLE_THRESHOLD:
        return CapabilityRating.CAPABLE
    if index.value >= MARGINAL_THRESHOLD:
        return CapabilityRating.MARGINAL
    return CapabilityRating.NOT_CAPABLE


def normal_indices(
    spec: ToleranceSpec,
    mu: float,
    sigma_within: float,
    sigma_overall: float,
    *,
    mode: AnalysisMode = AnalysisMode.FULL,
    symmetry_tol: float = DEFAULT_SYMMETRY_TOL,
) -> dict[str, IndexValue]:
    """Short-term (within) and long-term (overall) index families.

    Unstarred keys use the midpoint-centred formulas, starred keys the
    target-aware ones. Simplified mode keeps Cp, Cpk, Pp and Ppk.
    """
    tol = {"symmetry_tol": symmetry_tol}
    values: list[IndexValue] = []
    for sigma, prefix in ((sigma_within, "C"), (sigma_overall, "P")):
        values += [
            potential_index(spec, sigma, False, name=f"{prefix}p", **tol),
            potential_index(spec, sigma, True, name=f"{prefix}p*", **tol),
            centering_index(spec, mu, sigma, False, name=f"{prefix}pk", **tol),
            centering_index(spec, mu, sigma, True, name=f"{prefix}pk*", **tol),
            upper_index(spec, mu, sigma, name=f"{prefix}pu"),
            lower_index(spec, mu, sigma, name=f"{prefix}pl"),
            taguchi_index(spec, mu, sigma, False, name=f"{prefix}pm", **tol),
            taguchi_index(spec, mu, sigma, True, name=f"{prefix}pm*", **tol),
            taguchi_centering_index(
                spec, mu, sigma, False, name=f"{prefix}pmk", **tol
            ),
            taguchi_centering_index(
                spec, mu, sigma, True, name=f"{prefix}pmk*", **tol
            ),
        ]
    by_name = {v.name: v for v in values}

    names = (
        NORMAL_INDEX_NAMES
        if mode is AnalysisMode.FULL
        else SIMPLIFIED_NORMAL_INDEX_NAMES
    )
    return {name: by_name[name] for name in names}


def percentile_indices(
    spec: ToleranceSpec, q: QuantileTriple, *, mode: AnalysisMode = AnalysisMode.FULL
) -> dict[str, IndexValue]:
    by_name = {v.name: v for v in nonnormal_indices(spec, q)}
    names = (
        NONNORMAL_INDEX_NAMES
        if mode is AnalysisMode.FULL
        else SIMPLIFIED_NONNORMAL_INDEX_NAMES
    )
    return {name: by_name[name] for name in names}


class CapabilityEvaluation:
    def __init__(
        self,
        mode: AnalysisMode = AnalysisMode.FULL,
        symmetry_tol: float = DEFAULT_SYMMETRY_TOL,
    ):
        self.mode = mode
        self.symmetry_tol = symmetry_tol

    def initiate_capability_evaluation(
        self,
        spec: ToleranceSpec,
        mu: float | None = None,
        sigma_within: float | None = None,
        sigma_overall: float | None = None,
        quantiles: QuantileTriple | None = None,
    ) -> dict[str, IndexValue]:
        """Normal-path indices from (mu, sigmas) or percentile indices from quantiles."""
        try:
            if quantiles is not None:
                logger.info("Computing percentile-based indices")
                return percentile_indices(spec, quantiles, mode=self.mode)
            if mu is None or sigma_within is None or sigma_overall is None:
                raise ValueError("mu and both sigmas are required without quantiles")
            logger.info(f"Computing normal indices ({self.mode.value} mode)")
            return normal_indices(
                spec,
                mu,
                sigma_within,
                sigma_overall,
                mode=self.mode,
                symmetry_tol=self.symmetry_tol,
            )
        except CapabilityError:
            raise
        except Exception as e:
            logger.error(f"Error occurred during capability evaluation: {e}")
            raise CustomException(e, sys) from e
