import math
import sys
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import gammaln

from pcap_project.constants import CONTROL_CHART_CONSTANTS, MAX_WINDOW, MIN_WINDOW
from pcap_project.entity.config_entity import SigmaConfig
from pcap_project.entity.domain_entity import (
    MeasurementSeries,
    SigmaEstimate,
    SigmaMethod,
)
from pcap_project.exception import (
    CapabilityError,
    CustomException,
    GroupTooSmall,
    OutOfTable,
    SubgroupNotOne,
    SubgroupOutOfTable,
    SubgroupTooSmall,
    TooFewSamples,
    WindowOutOfRange,
)
from pcap_project.logger import logger


def control_chart_constant(name: str, w: int) -> float:
    """Looks up d2, c4, d3 or d4 for a sample size between 2 and 10."""
    if name not in CONTROL_CHART_CONSTANTS:
        raise OutOfTable(f"Unknown control chart constant: {name!r}")
    table = CONTROL_CHART_CONSTANTS[name]
    if w not in table:
        raise OutOfTable(
            f"{name}({w}) is outside the tabulated range "
            f"[{MIN_WINDOW}, {MAX_WINDOW}]"
        )
    return table[w]


def c4_star(n: int) -> float:
    """Analytic c4 for any sample count n >= 2."""
    if n < 2:
        raise TooFewSamples(f"c4 needs n >= 2, got {n}")
    return math.sqrt(2.0 / (n - 1)) * math.exp(gammaln(n / 2) - gammaln((n - 1) / 2))


def moving_ranges(values: Sequence[float] | np.ndarray, w: int) -> np.ndarray:
    """max - min over every window of w consecutive values, in series order."""
    arr = np.asarray(values, dtype=float)
    windows = sliding_window_view(arr, w)
    return np.ptp(windows, axis=1)


def _check_individuals(series: MeasurementSeries, w: int) -> None:
    if series.subgroup_size != 1:
        raise SubgroupNotOne(
            f"moving ranges need individuals data, got subgroup size "
            f"{series.subgroup_size}"
        )
    if not MIN_WINDOW <= w <= MAX_WINDOW:
        raise WindowOutOfRange(
            f"window {w} is outside [{MIN_WINDOW}, {MAX_WINDOW}]"
        )
    if series.n < w:
        raise TooFewSamples(f"window {w} needs at least {w} values, got {series.n}")


def _check_subgroups(series: MeasurementSeries) -> int:
    m = series.subgroup_size
    if m < 2:
        raise SubgroupTooSmall(f"subgroup size must be >= 2, got {m}")
    if m > MAX_WINDOW:
        raise SubgroupOutOfTable(
            f"subgroup size {m} exceeds the tabulated maximum {MAX_WINDOW}"
        )
    return m


def overall_sigma(series: MeasurementSeries) -> SigmaEstimate:
    if series.n < 2:
        raise TooFewSamples(f"overall sigma needs n >= 2, got {series.n}")
    value = float(np.std(series.array, ddof=1))
    return SigmaEstimate(SigmaMethod.OVERALL, value)


def within_sigma_amr(series: MeasurementSeries, w: int = 2) -> SigmaEstimate:
    _check_individuals(series, w)
    mr = moving_ranges(series.array, w)
    value = float(np.mean(mr)) / control_chart_constant("d2", w)
    return SigmaEstimate(SigmaMethod.AMR, value, window=w)


def within_sigma_mmr(series: MeasurementSeries, w: int = 2) -> SigmaEstimate:
    _check_individuals(series, w)
    mr = moving_ranges(series.array, w)
    # numpy averages the central pair for even counts
    value = float(np.median(mr)) / control_chart_constant("d4", w)
    return SigmaEstimate(SigmaMethod.MMR, value, window=w)


def within_sigma_srmssd(
    series: MeasurementSeries, unbias: str = "c4"
) -> SigmaEstimate:
    if series.subgroup_size != 1:
        raise SubgroupNotOne("SRMSSD needs individuals data")
    n = series.n
    if n < 2:
        raise TooFewSamples(f"SRMSSD needs n >= 2, got {n}")
    diffs = np.diff(series.array)
    raw = math.sqrt(float(np.sum(diffs**2)) / (2 * (n - 1)))
    value = raw / c4_star(n) if unbias == "c4" else raw
    return SigmaEstimate(SigmaMethod.SRMSSD, value)


def within_sigma_rbar(series: MeasurementSeries) -> SigmaEstimate:
    m = _check_subgroups(series)
    ranges = np.ptp(series.subgroups(), axis=1)
    value = float(np.mean(ranges)) / control_chart_constant("d2", m)
    return SigmaEstimate(SigmaMethod.RBAR, value)


def within_sigma_sbar(series: MeasurementSeries) -> SigmaEstimate:
    m = _check_subgroups(series)
    sds = np.std(series.subgroups(), axis=1, ddof=1)
    value = float(np.mean(sds)) / control_chart_constant("c4", m)
    return SigmaEstimate(SigmaMethod.SBAR, value)


def pooled_sigma_from_summaries(
    sizes: Sequence[int], sds: Sequence[float]
) -> float:
    """sqrt(sum((n_i - 1) s_i^2) / (sum(n_i) - k)) from per-group sizes and SDs."""
    n_i = np.asarray(sizes, dtype=float)
    s_i = np.asarray(sds, dtype=float)
    if n_i.size == 0:
        raise GroupTooSmall("pooling needs at least one group")
    if n_i.shape != s_i.shape:
        raise GroupTooSmall("sizes and standard deviations differ in length")
    if np.any(n_i < 2):
        raise GroupTooSmall("every pooled group needs at least 2 values")
    dof = float(np.sum(n_i) - n_i.size)
    return math.sqrt(float(np.sum((n_i - 1) * s_i**2)) / dof)


def within_sigma_pooled(
    data: MeasurementSeries | Sequence[Sequence[float]],
) -> SigmaEstimate:
    """Pooled SD over the subgroups of a series, or over explicit groups.

    Groups may differ in size; no c4 correction is applied.
    """
    if isinstance(data, MeasurementSeries):
        if data.subgroup_size < 2:
            raise GroupTooSmall("pooling needs subgroups of at least 2 values")
        groups: list[np.ndarray] = list(data.subgroups())
    else:
        groups = [np.asarray(g, dtype=float) for g in data]

    sizes = [g.size for g in groups]
    sds = [float(np.std(g, ddof=1)) if g.size >= 2 else 0.0 for g in groups]
    value = pooled_sigma_from_summaries(sizes, sds)
    return SigmaEstimate(SigmaMethod.POOLED, value)


def select_sigma_method(
    subgroup_size: int, n: int, config: SigmaConfig | None = None
) -> tuple[SigmaMethod, int | None]:
    """Within-sigma method for a data layout.

    Individuals default to AMR with a window of 2, subgroups to Pooled.
    A configured method overrides the default.
    """
    config = config or SigmaConfig()
    if config.method is not None:
        method = config.method
    elif subgroup_size == 1:
        method = SigmaMethod.AMR
    else:
        method = SigmaMethod.POOLED
    window = config.window if method.uses_window else None
    return method, window


def estimate_within_sigma(
    series: MeasurementSeries,
    method: SigmaMethod,
    window: int | None = None,
    srmssd_unbias: str = "c4",
) -> SigmaEstimate:
    if method is SigmaMethod.AMR:
        return within_sigma_amr(series, window or 2)
    if method is SigmaMethod.MMR:
        return within_sigma_mmr(series, window or 2)
    if method is SigmaMethod.SRMSSD:
        return within_sigma_srmssd(series, unbias=srmssd_unbias)
    if method is SigmaMethod.RBAR:
        return within_sigma_rbar(series)
    if method is SigmaMethod.SBAR:
        return within_sigma_sbar(series)
    if method is SigmaMethod.POOLED:
        return within_sigma_pooled(series)
    return overall_sigma(series)


def moving_range_profile(
    series: MeasurementSeries, windows: Sequence[int] | None = None
) -> dict[str, SigmaEstimate]:
    """Overall sigma plus AMR and MMR per window, all tabulated windows by default.

    Keys are "Overall", "A2".."A10" and "M2".."M10".
    """
    if windows is None:
        windows = range(MIN_WINDOW, MAX_WINDOW + 1)
    profile = {"Overall": overall_sigma(series)}
    for w in windows:
        profile[f"A{w}"] = within_sigma_amr(series, w)
    for w in windows:
        profile[f"M{w}"] = within_sigma_mmr(series, w)
    return profile


class SigmaEstimation:
    def __init__(self, config: SigmaConfig):
        self.config = config

    def initiate_sigma_estimation(
        self, series: MeasurementSeries
    ) -> tuple[SigmaEstimate, SigmaEstimate]:
        """Returns (overall, within) for the series layout."""
        try:
            logger.info("Starting sigma estimation")
            overall = overall_sigma(series)
            method, window = select_sigma_method(
                series.subgroup_size, series.n, self.config
            )
            within = estimate_within_sigma(
                series, method, window, self.config.srmssd_unbias
            )
            logger.info(
                f"sigma_overall={overall.value:.6g}, "
                f"sigma_within[{within.label}]={within.value:.6g}"
            )
            return overall, within
        except CapabilityError:
            raise
        except Exception as e:
            logger.error(f"Error occurred during sigma estimation: {e}")
            raise CustomException(e, sys) from e
