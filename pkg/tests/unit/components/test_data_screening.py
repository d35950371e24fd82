import numpy as np
import pytest
from scipy import stats

from pcap_project.components.data_screening import (
    DataScreening,
    anderson_darling_normality,
    anderson_darling_pvalue,
    anderson_darling_statistic,
    detect_outliers,
    grubbs_critical_value,
    tukey_fences,
)
from pcap_project.entity.artifact_entity import OutlierMethod
from pcap_project.entity.config_entity import OutlierConfig
from pcap_project.entity.domain_entity import MeasurementSeries
from pcap_project.exception import ConstantSeries, TooFewSamples


def _plotting_positions(n):
    return (np.arange(1, n + 1) - 0.5) / n


@pytest.fixture
def normal_quantiles():
    return MeasurementSeries.from_values(stats.norm.ppf(_plotting_positions(50)))


@pytest.fixture
def exponential_quantiles():
    return MeasurementSeries.from_values(stats.expon.ppf(_plotting_positions(50)))


def test_tukey_fences_use_linear_quartiles():
    lower, upper = tukey_fences(np.arange(1.0, 9.0))
    assert lower == pytest.approx(-2.5)
    assert upper == pytest.approx(11.5)


def test_tukey_flags_far_value_without_touching_series():
    values = [10.0, 10.2, 9.9, 10.1, 9.8, 10.0, 10.3, 25.0]
    series = MeasurementSeries.from_values(values)

    report = detect_outliers(series, OutlierMethod.TUKEY_FENCE)

    assert report.indices == [7]
    assert report.flagged[0].value == 25.0
    assert report.params["k"] == 1.5
    assert series.values[-1] == 25.0


def test_tukey_needs_four_values():
    with pytest.raises(TooFewSamples):
        detect_outliers(MeasurementSeries.from_values([1.0, 2.0, 3.0]))


@pytest.mark.parametrize("n, expected", [(10, 2.290), (20, 2.709)])
def test_grubbs_critical_value_matches_published_table(n, expected):
    assert grubbs_critical_value(n, 0.05) == pytest.approx(expected, abs=1e-3)


def test_grubbs_single_pass_flags_one_value(rng):
    values = np.append(rng.normal(0.0, 1.0, size=30), [9.0, -8.0])
    series = MeasurementSeries.from_values(values)

    once = detect_outliers(series, OutlierMethod.GRUBBS, {"alpha": 0.05})
    repeated = detect_outliers(
        series, OutlierMethod.GRUBBS, {"alpha": 0.05, "iterate": True}
    )

    assert once.indices == [30]
    assert {30, 31} <= set(repeated.indices)


def test_grubbs_on_clean_data_flags_nothing(normal_quantiles):
    report = detect_outliers(normal_quantiles, OutlierMethod.GRUBBS)
    assert not report.has_outliers


def test_statistic_is_finite_for_extreme_values():
    values = np.append(np.zeros(20), 1e6)
    assert np.isfinite(anderson_darling_statistic(values + np.arange(21) * 1e-3))


def test_normal_quantiles_pass(normal_quantiles):
    result = anderson_darling_normality(normal_quantiles)
    assert result.passed
    assert result.p_value > 0.5
    assert result.a2_star == pytest.approx(result.a2 * (1 + 0.75 / 50 + 2.25 / 2500))


def test_exponential_quantiles_fail(exponential_quantiles):
    result = anderson_darling_normality(exponential_quantiles)
    assert not result.passed
    assert result.p_value < 0.05


def test_agrees_with_statsmodels(rng):
    diagnostic = pytest.importorskip("statsmodels.stats.diagnostic")
    for scale in (1.0, 3.0):
        values = rng.gamma(2.0, scale, size=40)
        result = anderson_darling_normality(MeasurementSeries.from_values(values))
        if result.a2_star >= 13:
            continue
        a2, p_value = diagnostic.normal_ad(values)
        assert result.a2 == pytest.approx(a2, rel=1e-9)
        assert result.p_value == pytest.approx(p_value, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("a", [0.0, 0.1, 0.2, 0.3, 0.34, 0.5, 0.6, 2.0, 13.0, 200.0])
def test_pvalue_stays_in_unit_interval(a):
    assert 0.0 <= anderson_darling_pvalue(a) <= 1.0


def test_pvalue_floor():
    assert anderson_darling_pvalue(153.0) == 0.0
    assert anderson_darling_pvalue(1e6) == 0.0


def test_rejection_rate_under_normality(rng):
    n, reps = 50, 2000
    rejected = sum(
        not anderson_darling_normality(
            MeasurementSeries.from_values(rng.normal(size=n))
        ).passed
        for _ in range(reps)
    )
    assert 0.03 <= rejected / reps <= 0.07


def test_normality_needs_eight_values():
    with pytest.raises(TooFewSamples):
        anderson_darling_normality(MeasurementSeries.from_values(np.arange(7.0)))


def test_normality_rejects_constant_series():
    with pytest.raises(ConstantSeries):
        anderson_darling_normality(MeasurementSeries.from_values([2.0] * 10))


def test_screening_can_be_switched_off(normal_quantiles):
    screening = DataScreening(OutlierConfig(method=None))
    assert screening.screen_outliers(normal_quantiles) is None


def test_initiate_data_screening(dataset):
    screening = DataScreening(OutlierConfig(), alpha=0.05)
    outliers, normality = screening.initiate_data_screening(
        dataset.get("101").series
    )
    assert outliers is not None
    assert outliers.method is OutlierMethod.TUKEY_FENCE
    assert normality.passed


@pytest.mark.parametrize("scale, shift", [(2.5, -7.0), (-0.5, 3.0)])
def test_anderson_darling_ignores_units_and_orientation(rng, scale, shift):
    values = rng.gamma(2.0, 1.0, size=40)
    base = anderson_darling_statistic(values)
    assert anderson_darling_statistic(scale * values + shift) == pytest.approx(
        base, rel=1e-9
    )


def test_repeated_tukey_screening_is_stable():
    bulk = stats.norm.ppf(_plotting_positions(30), loc=10.0, scale=0.1)
    values = np.append(bulk, [11.5, 8.2])
    series = MeasurementSeries.from_values(values)
    first = detect_outliers(series, OutlierMethod.TUKEY_FENCE)
    second = detect_outliers(series, OutlierMethod.TUKEY_FENCE)
    assert first == second
    assert first.indices == [30, 31]
    assert series.values == tuple(values)


def test_two_clusters_fail_normality(rng):
    values = np.repeat([0.0, 10.0], 16) + rng.normal(0.0, 1e-3, size=32)
    result = anderson_darling_normality(MeasurementSeries.from_values(values))
    assert not result.passed
    assert result.p_value < 0.005
