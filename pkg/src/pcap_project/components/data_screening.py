import math
import sys

import numpy as np
from scipy import stats

from pcap_project.entity.artifact_entity import (
    FlaggedValue,
    NormalityResult,
    OutlierMethod,
    OutlierReport,
)
from pcap_project.entity.config_entity import OutlierConfig
from pcap_project.entity.domain_entity import MeasurementSeries
from pcap_project.exception import (
    CapabilityError,
    ConstantSeries,
    CustomException,
    TooFewSamples,
)
from pcap_project.logger import logger

MIN_TUKEY_N = 4
MIN_GRUBBS_N = 3
MIN_AD_N = 8

# The case-3 p-value curve turns back up past its minimum near A2* = 153
_AD_PVALUE_FLOOR_AT = 153.0


def tukey_fences(values: np.ndarray, k: float = 1.5) -> tuple[float, float]:
    """Lower and upper fence from linearly interpolated quartiles."""
    q1, q3 = np.quantile(values, [0.25, 0.75], method="linear")
    iqr = q3 - q1
    return float(q1 - k * iqr), float(q3 + k * iqr)


def grubbs_critical_value(n: int, alpha: float) -> float:
    """Two-sided Grubbs critical G for n values at significance alpha."""
    t = stats.t.ppf(1 - alpha / (2 * n), n - 2)
    return float((n - 1) / math.sqrt(n) * math.sqrt(t**2 / (n - 2 + t**2)))


def _grubbs_once(values: np.ndarray, alpha: float) -> int | None:
    """Position of the single most extreme value when it is an outlier."""
    n = values.size
    sd = float(np.std(values, ddof=1))
    if n < MIN_GRUBBS_N or sd == 0.0:
        return None
    deviations = np.abs(values - np.mean(values))
    position = int(np.argmax(deviations))
    g = float(deviations[position]) / sd
    if g > grubbs_critical_value(n, alpha):
        return position
    return None


def detect_outliers(
    series: MeasurementSeries,
    method: OutlierMethod = OutlierMethod.TUKEY_FENCE,
    params: dict | None = None,
) -> OutlierReport:
    """Flags outlying values; the series itself is never modified.

    TukeyFence takes params {"k": 1.5}; Grubbs takes {"alpha": 0.05,
    "iterate": False}. With iterate the test is repeated on the remaining
    values until nothing more is flagged.
    """
    params = dict(params or {})
    values = series.array

    if method is OutlierMethod.TUKEY_FENCE:
        if series.n < MIN_TUKEY_N:
            raise TooFewSamples(
                f"Tukey fences need at least {MIN_TUKEY_N} values, got {series.n}"
            )
        k = float(params.get("k", 1.5))
        lower, upper = tukey_fences(values, k)
        flagged = [
            FlaggedValue(i, float(v))
            for i, v in enumerate(values)
            if v < lower or v > upper
        ]
        used = {"k": k, "lower_fence": lower, "upper_fence": upper}
        return OutlierReport(method, tuple(flagged), used)

    if series.n < MIN_GRUBBS_N:
        raise TooFewSamples(
            f"Grubbs test needs at least {MIN_GRUBBS_N} values, got {series.n}"
        )
    alpha = float(params.get("alpha", 0.05))
    iterate = bool(params.get("iterate", False))

    remaining = np.arange(series.n)
    flagged_positions: list[int] = []
    while remaining.size >= MIN_GRUBBS_N:
        position = _grubbs_once(values[remaining], alpha)
        if position is None:
            break
        flagged_positions.append(int(remaining[position]))
        remaining = np.delete(remaining, position)
        if not iterate:
            break

    flagged = [FlaggedValue(i, float(values[i])) for i in sorted(flagged_positions)]
    return OutlierReport(method, tuple(flagged), {"alpha": alpha, "iterate": iterate})


def anderson_darling_statistic(values: np.ndarray) -> float:
    """A^2 against a normal with mean and (n-1) standard deviation from the data."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    z = (x - np.mean(x)) / np.std(x, ddof=1)
    i = np.arange(1, n + 1)
    # log-space tails keep extreme z finite
    log_cdf = stats.norm.logcdf(z)
    log_sf = stats.norm.logsf(z[::-1])
    return float(-n - np.sum((2 * i - 1) * (log_cdf + log_sf)) / n)


def anderson_darling_pvalue(a2_star: float) -> float:
    """Piecewise p-value for the adjusted statistic, both parameters estimated."""
    a = a2_star
    if a >= _AD_PVALUE_FLOOR_AT:
        p = 0.0
    elif a >= 0.6:
        p = math.exp(1.2937 - 5.709 * a + 0.0186 * a**2)
    elif a >= 0.34:
        p = math.exp(0.9177 - 4.279 * a - 1.38 * a**2)
    elif a >= 0.2:
        p = 1 - math.exp(-8.318 + 42.796 * a - 59.938 * a**2)
    else:
        p = 1 - math.exp(-13.436 + 101.14 * a - 223.73 * a**2)
    return min(max(p, 0.0), 1.0)


def anderson_darling_normality(
    series: MeasurementSeries, alpha: float = 0.05
) -> NormalityResult:
    n = series.n
    if n < MIN_AD_N:
        raise TooFewSamples(
            f"Anderson-Darling needs at least {MIN_AD_N} values, got {n}"
        )
    if series.is_constant():
        raise ConstantSeries("Anderson-Darling is undefined for a constant series")

    a2 = anderson_darling_statistic(series.array)
    a2_star = a2 * (1 + 0.75 / n + 2.25 / n**2)
    p_value = anderson_darling_pvalue(a2_star)
    return NormalityResult(
        a2=a2,
        a2_star=a2_star,
        p_value=p_value,
        alpha=alpha,
        passed=p_value > alpha,
    )


class DataScreening:
    def __init__(self, config: OutlierConfig, alpha: float = 0.05):
        self.config = config
        self.alpha = alpha

    def screen_outliers(self, series: MeasurementSeries) -> OutlierReport | None:
        if self.config.method is None:
            logger.info("Outlier screening switched off")
            return None
        report = detect_outliers(series, self.config.method, self.config.params)
        if report.has_outliers:
            logger.warning(
                f"{len(report.flagged)} outlier(s) flagged by "
                f"{report.method.value}: {report.indices}"
            )
        return report

    def initiate_data_screening(
        self, series: MeasurementSeries
    ) -> tuple[OutlierReport | None, NormalityResult]:
        try:
            logger.info("Starting data screening")
            outliers = self.screen_outliers(series)
            normality = anderson_darling_normality(series, self.alpha)
            logger.info(
                f"Anderson-Darling A2*={normality.a2_star:.4f}, "
                f"p={normality.p_value:.4f}, passed={normality.passed}"
            )
            return outliers, normality
        except CapabilityError:
            raise
        except Exception as e:
            logger.error(f"Error occurred during data screening: {e}")
            raise CustomException(e, sys) from e
