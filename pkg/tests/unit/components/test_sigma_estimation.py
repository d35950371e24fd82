import math

import numpy as np
import pytest

from pcap_project.components.sigma_estimation import (
    SigmaEstimation,
    c4_star,
    control_chart_constant,
    estimate_within_sigma,
    moving_range_profile,
    moving_ranges,
    overall_sigma,
    pooled_sigma_from_summaries,
    select_sigma_method,
    within_sigma_amr,
    within_sigma_mmr,
    within_sigma_pooled,
    within_sigma_rbar,
    within_sigma_sbar,
    within_sigma_srmssd,
)
from pcap_project.entity.config_entity import SigmaConfig
from pcap_project.entity.domain_entity import MeasurementSeries, SigmaMethod
from pcap_project.exception import (
    GroupTooSmall,
    OutOfTable,
    SubgroupNotOne,
    SubgroupOutOfTable,
    SubgroupTooSmall,
    TooFewSamples,
    WindowOutOfRange,
)

SMALL = MeasurementSeries.from_values([1.0, 3.0, 2.0, 5.0])


def test_moving_ranges_keep_series_order():
    assert moving_ranges(SMALL.values, 2).tolist() == [2.0, 1.0, 3.0]
    assert moving_ranges(SMALL.values, 3).tolist() == [2.0, 3.0]


def test_amr_divides_mean_range_by_d2():
    estimate = within_sigma_amr(SMALL, 2)
    assert estimate.value == pytest.approx(2.0 / 1.1284)
    assert estimate.label == "AMR2"
    assert within_sigma_amr(SMALL, 3).value == pytest.approx(2.5 / 1.6926)


def test_mmr_uses_median_over_d4():
    assert within_sigma_mmr(SMALL, 2).value == pytest.approx(2.0 / 0.9539)
    # even count of ranges: central pair averaged
    assert within_sigma_mmr(SMALL, 3).value == pytest.approx(2.5 / 1.5878)


def test_window_bounds():
    with pytest.raises(WindowOutOfRange):
        within_sigma_amr(SMALL, 1)
    with pytest.raises(WindowOutOfRange):
        within_sigma_mmr(SMALL, 11)
    with pytest.raises(TooFewSamples):
        within_sigma_amr(SMALL, 5)


def test_moving_ranges_need_individuals():
    series = MeasurementSeries.from_values(np.arange(8.0), subgroup_size=2)
    with pytest.raises(SubgroupNotOne):
        within_sigma_amr(series, 2)
    with pytest.raises(SubgroupNotOne):
        within_sigma_srmssd(series)


def test_control_chart_constant_lookup():
    assert control_chart_constant("c4", 5) == 0.9400
    with pytest.raises(OutOfTable):
        control_chart_constant("d2", 11)
    with pytest.raises(OutOfTable):
        control_chart_constant("A2", 5)


@pytest.mark.parametrize("n", range(2, 11))
def test_analytic_c4_matches_table(n):
    assert c4_star(n) == pytest.approx(control_chart_constant("c4", n), abs=1e-4)


def test_overall_sigma_is_sample_sd():
    assert overall_sigma(SMALL).value == pytest.approx(np.std(SMALL.values, ddof=1))


def test_srmssd():
    diffs = np.diff(SMALL.values)
    raw = math.sqrt(np.sum(diffs**2) / 6)
    assert within_sigma_srmssd(SMALL, unbias="none").value == pytest.approx(raw)
    assert within_sigma_srmssd(SMALL).value == pytest.approx(raw / c4_star(4))


def test_subgroup_estimators():
    series = MeasurementSeries.from_values(
        [1.0, 2.0, 4.0, 2.0, 2.0, 5.0], subgroup_size=3
    )
    assert within_sigma_rbar(series).value == pytest.approx(3.0 / 1.6926)
    sds = [np.std([1, 2, 4], ddof=1), np.std([2, 2, 5], ddof=1)]
    assert within_sigma_sbar(series).value == pytest.approx(np.mean(sds) / 0.8862)
    pooled = math.sqrt((sds[0] ** 2 + sds[1] ** 2) / 2)
    assert within_sigma_pooled(series).value == pytest.approx(pooled)


def test_subgroup_estimators_reject_bad_layouts():
    with pytest.raises(SubgroupTooSmall):
        within_sigma_rbar(SMALL)
    wide = MeasurementSeries.from_values(np.arange(22.0), subgroup_size=11)
    with pytest.raises(SubgroupOutOfTable):
        within_sigma_sbar(wide)
    with pytest.raises(GroupTooSmall):
        within_sigma_pooled(SMALL)


def test_pooled_over_unequal_groups():
    groups = [[1.0, 2.0, 3.0], [4.0, 6.0]]
    expected = math.sqrt((2 * 1.0 + 1 * 2.0) / 3)
    assert within_sigma_pooled(groups).value == pytest.approx(expected)
    assert pooled_sigma_from_summaries([3, 2], [1.0, math.sqrt(2.0)]) == pytest.approx(
        expected
    )
    with pytest.raises(GroupTooSmall):
        pooled_sigma_from_summaries([3, 1], [1.0, 0.0])


def test_method_selection_defaults():
    assert select_sigma_method(1, 32) == (SigmaMethod.AMR, 2)
    assert select_sigma_method(5, 50) == (SigmaMethod.POOLED, None)
    config = SigmaConfig(method=SigmaMethod.MMR, window=4)
    assert select_sigma_method(1, 32, config) == (SigmaMethod.MMR, 4)
    config = SigmaConfig(method=SigmaMethod.SRMSSD, window=4)
    assert select_sigma_method(1, 32, config) == (SigmaMethod.SRMSSD, None)


def test_estimate_within_sigma_dispatch():
    assert estimate_within_sigma(SMALL, SigmaMethod.MMR, 3).label == "MMR3"
    assert estimate_within_sigma(SMALL, SigmaMethod.OVERALL).label == "Overall"


def test_profile_keys_and_case_study_value(dataset, sigma_reference):
    profile = moving_range_profile(dataset.get("101").series)
    assert list(profile)[:3] == ["Overall", "A2", "A3"]
    assert len(profile) == 19
    for key in ("Overall", "A2", "M2"):
        assert profile[key].value == pytest.approx(
            sigma_reference.loc["101", key], abs=5e-4
        )


ESTIMATORS = {
    "Overall": (overall_sigma, 1),
    "AMR2": (lambda s: within_sigma_amr(s, 2), 1),
    "AMR5": (lambda s: within_sigma_amr(s, 5), 1),
    "AMR10": (lambda s: within_sigma_amr(s, 10), 1),
    "MMR2": (lambda s: within_sigma_mmr(s, 2), 1),
    "MMR5": (lambda s: within_sigma_mmr(s, 5), 1),
    "MMR10": (lambda s: within_sigma_mmr(s, 10), 1),
    "SRMSSD": (within_sigma_srmssd, 1),
    "Rbar": (within_sigma_rbar, 4),
    "Sbar": (within_sigma_sbar, 4),
    "Pooled": (within_sigma_pooled, 4),
}


def _estimate(name, values):
    estimator, subgroup_size = ESTIMATORS[name]
    return estimator(MeasurementSeries.from_values(values, subgroup_size)).value


@pytest.mark.parametrize("name", list(ESTIMATORS))
def test_shift_invariance_and_scale_equivariance(rng, name):
    values = rng.normal(5.0, 0.5, size=32)
    base = _estimate(name, values)
    assert _estimate(name, values + 10.0) == pytest.approx(base, abs=1e-12)
    assert _estimate(name, values * 3.7) == pytest.approx(3.7 * base, rel=1e-12)


def test_moving_ranges_depend_on_collection_order():
    ordered = np.arange(1.0, 11.0)
    interleaved = np.array([1.0, 6.0, 2.0, 7.0, 3.0, 8.0, 4.0, 9.0, 5.0, 10.0])
    assert _estimate("Overall", ordered) == pytest.approx(
        _estimate("Overall", interleaved)
    )
    for name in ("AMR2", "MMR2", "AMR5"):
        assert _estimate(name, ordered) < _estimate(name, interleaved)


def test_range_and_sd_agree_for_pairs(rng):
    pairs = MeasurementSeries.from_values([1.0, 3.0, 2.0, 6.0], subgroup_size=2)
    assert within_sigma_rbar(pairs).value == pytest.approx(2.6586, abs=1e-4)
    assert within_sigma_sbar(pairs).value == pytest.approx(2.6587, abs=1e-4)

    series = MeasurementSeries.from_values(rng.normal(0.0, 1.0, 40), subgroup_size=2)
    assert within_sigma_rbar(series).value == pytest.approx(
        within_sigma_sbar(series).value, rel=1e-3
    )


# median-based estimators carry a small finite-sample bias
@pytest.mark.parametrize(
    "name, rel",
    [
        ("AMR2", 0.02),
        ("AMR5", 0.02),
        ("AMR10", 0.02),
        ("MMR2", 0.03),
        ("MMR5", 0.03),
        ("MMR10", 0.03),
        ("SRMSSD", 0.02),
        ("Rbar", 0.02),
        ("Sbar", 0.02),
        ("Pooled", 0.02),
    ],
)
def test_estimators_are_close_to_unbiased(rng, name, rel):
    draws = rng.normal(0.0, 1.0, size=(10_000, 32))
    estimates = [_estimate(name, row) for row in draws]
    assert np.mean(estimates) == pytest.approx(1.0, rel=rel)


def test_initiate_sigma_estimation(dataset):
    overall, within = SigmaEstimation(SigmaConfig()).initiate_sigma_estimation(
        dataset.get("101").series
    )
    assert overall.method is SigmaMethod.OVERALL
    assert within.label == "AMR2"
    assert within.value < overall.value
