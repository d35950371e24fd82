import dataclasses

import numpy as np
import pytest
from scipy import stats

from pcap_project.components.report_writer import emit_reports_json
from pcap_project.constants import DEFAULT_BIN_EDGES
from pcap_project.entity.artifact_entity import (
    AnalysisPath,
    CapabilityRating,
    Criterion,
    ReasonCode,
)
from pcap_project.entity.config_entity import (
    AnalysisMode,
    DistributionFitConfig,
    OutlierAction,
    OutlierConfig,
    WorkflowConfig,
)
from pcap_project.entity.domain_entity import (
    Dataset,
    DimensionRecord,
    Family,
    MeasurementSeries,
    SigmaMethod,
    ToleranceSpec,
)
from pcap_project.exception import (
    ConstantSeries,
    EmptyInput,
    InvalidBinEdges,
    InvalidSeries,
    SubgroupNotOne,
    TooFewSamples,
)
from pcap_project.orchestrator.analysis_flow import (
    analyze_dataset,
    analyze_dimension,
    batch_summary,
    sigma_relative_error,
)

TERMINAL_NODES = {"normal_path", "non_normal_path", "error"}


def _analyze(record, config=None):
    return analyze_dimension(record.id, record.spec, record.series, config)


def _with_outlier(series):
    values = list(series.values)
    values.append(values[-1] + 100 * (max(values) - min(values)))
    return MeasurementSeries.from_values(values)


@pytest.fixture(scope="module")
def exponential_record():
    p = (np.arange(1, 61) - 0.5) / 60
    series = MeasurementSeries.from_values(stats.expon.ppf(p, scale=2.0))
    return DimensionRecord("EXP", ToleranceSpec(usl=20.0), series)


@pytest.fixture(scope="module")
def constant_record():
    return DimensionRecord(
        "FLAT", ToleranceSpec(4.0, 6.0, 5.0), MeasurementSeries.from_values([5.0] * 12)
    )


def test_case_study_dimension(dataset, sigma_reference):
    report = _analyze(dataset.get("101"))
    published = sigma_reference.loc["101"]

    assert report.path is AnalysisPath.NORMAL
    assert report.n == 32
    assert report.best_fit is None
    assert report.sigma_within.label == "AMR2"
    overall = report.sigma_overall.value
    within = report.sigma_within.value
    assert overall == pytest.approx(published["Overall"], abs=1e-4)
    assert within == pytest.approx(published["A2"], abs=1e-4)
    assert report.value("Pp") == pytest.approx(1.689, abs=5e-3)
    assert report.value("Ppk") == pytest.approx(1.329, abs=5e-3)
    # short-term indices follow the long-term ones by sigma_overall / sigma_within
    ratio = overall / within
    assert report.value("Cp") == pytest.approx(report.value("Pp") * ratio)
    assert report.value("Cpk") == pytest.approx(report.value("Ppk") * ratio)
    assert report.rating is CapabilityRating.CAPABLE
    assert report.ppm_nonconforming is not None
    assert [t.node for t in report.trace] == [
        "classify_tolerance",
        "outlier_detection",
        "normality_test",
        "sigma_selection",
        "normal_path",
    ]


def test_dataset_reports_keep_order(dataset):
    reports = analyze_dataset(dataset)
    assert [r.dimension_id for r in reports] == dataset.ids
    assert all(r.normality.passed for r in reports)
    assert all(r.path is AnalysisPath.NORMAL for r in reports)


def test_empty_dataset():
    assert analyze_dataset(Dataset(())) == []


def test_one_bad_dimension_does_not_stop_the_batch(dataset, constant_record):
    extended = Dataset((*dataset.dimensions, constant_record))
    reports = analyze_dataset(extended)

    assert len(reports) == 10
    failed = [r for r in reports if r.has_error]
    assert [r.dimension_id for r in failed] == ["FLAT"]
    flat = failed[0]
    assert flat.error["code"] == ConstantSeries.code
    assert flat.trace[-1].node == "error"
    assert flat.outliers is not None
    assert flat.normality is None
    assert flat.rating is CapabilityRating.UNDEFINED


def test_each_trace_ends_in_exactly_one_terminal_branch(
    dataset, exponential_record, constant_record
):
    records = [*dataset, exponential_record, constant_record]
    for report in (_analyze(r) for r in records):
        terminal = [t for t in report.trace if t.branch == "terminal"]
        assert len(terminal) == 1
        assert terminal[0] == report.trace[-1]
        assert terminal[0].node in TERMINAL_NODES


def test_reports_are_deterministic(dataset):
    config = WorkflowConfig(max_workers=3)
    first = emit_reports_json(analyze_dataset(dataset, config))
    second = emit_reports_json(analyze_dataset(dataset, config))
    assert first == second


def test_simplified_mode_is_a_subset_of_full_mode(dataset):
    simplified = WorkflowConfig(mode=AnalysisMode.SIMPLIFIED)
    for record in dataset:
        full = _analyze(record)
        reduced = _analyze(record, simplified)
        assert list(reduced.indices) == ["Cp", "Cpk", "Pp", "Ppk"]
        for name, value in reduced.indices.items():
            assert value == full.indices[name]


def test_simplified_mode_routes_asymmetric_specs(dataset):
    series = dataset.get("101").series
    spec = ToleranceSpec(4.52, 4.72, 4.60)
    full = analyze_dimension("A", spec, series)
    reduced = analyze_dimension(
        "A", spec, series, WorkflowConfig(mode=AnalysisMode.SIMPLIFIED)
    )

    assert "simplified_routing" in [t.node for t in reduced.trace]
    assert "simplified_routing" not in [t.node for t in full.trace]
    assert reduced.value("Cp") == pytest.approx(0.2 / (6 * reduced.sigma_within.value))
    assert reduced.value("Cp") == full.value("Cp")
    assert full.value("Cp*") < full.value("Cp")


def test_flag_only_matches_screening_off(dataset):
    record = dataset.get("103")
    series = _with_outlier(record.series)
    flagged = analyze_dimension("X", record.spec, series)
    off = analyze_dimension(
        "X", record.spec, series, WorkflowConfig(outliers=OutlierConfig(method=None))
    )

    assert flagged.outliers.has_outliers
    assert off.outliers is None
    assert off.trace[1].branch == "skipped"
    assert flagged.indices == off.indices
    assert flagged.n == off.n == series.n


def test_exclude_removes_flagged_values(dataset):
    record = dataset.get("103")
    series = _with_outlier(record.series)
    config = WorkflowConfig(outliers=OutlierConfig(action=OutlierAction.EXCLUDE))
    report = analyze_dimension("X", record.spec, series, config)

    assert report.n == series.n - len(report.outliers.flagged)
    assert series.n - 1 in report.outliers.indices
    action = [t for t in report.trace if t.node == "outlier_action"]
    assert action[0].branch == "excluded"


def test_exclude_keeps_subgroups_whole(dataset):
    values = list(dataset.get("101").series.values)
    values[5] = 10.0
    series = MeasurementSeries.from_values(values, subgroup_size=2)
    config = WorkflowConfig(outliers=OutlierConfig(action=OutlierAction.EXCLUDE))
    report = analyze_dimension("S", dataset.get("101").spec, series, config)

    assert report.n == 32
    action = [t for t in report.trace if t.node == "outlier_action"]
    assert action[0].branch == "flag_only"
    assert report.sigma_within.method is SigmaMethod.POOLED


def test_non_normal_unilateral_path(exponential_record):
    report = _analyze(exponential_record)

    assert report.path is AnalysisPath.NON_NORMAL
    assert report.normality.passed is False
    fit_entry = next(t for t in report.trace if t.node == "distribution_fit")
    assert fit_entry.branch == report.best_fit.family.value == Family.EXPONENTIAL.value
    q = report.quantiles
    assert report.quantile_source == "Exponential"
    assert report.value("CNpk") == pytest.approx((20.0 - q.p50) / (q.p99865 - q.p50))
    assert report.index("CNp").reason is ReasonCode.UNILATERAL_CP_UNDEFINED
    assert report.ppm_nonconforming == pytest.approx(
        1e6 * np.exp(-20.0 * report.best_fit.params[0])
    )
    assert report.sigma_within is not None


def test_empirical_quantiles_when_no_family_fits():
    values = np.r_[-1 + 0.01 * np.arange(16), 1 + 0.01 * np.arange(16)]
    config = WorkflowConfig(distfit=DistributionFitConfig(candidates=(Family.GAMMA,)))
    report = analyze_dimension(
        "BI", ToleranceSpec(-3.0, 3.0, 0.0), MeasurementSeries.from_values(values), config
    )

    assert report.path is AnalysisPath.NON_NORMAL
    assert report.best_fit is None
    assert report.quantile_source == "empirical"
    assert report.ppm_nonconforming is None
    assert report.trace[-2].branch == "empirical_quantiles"
    assert report.value("CNp") > 0


def test_criterion_choice_reaches_the_trace(exponential_record):
    config = WorkflowConfig(
        distfit=dataclasses.replace(DistributionFitConfig(), criterion=Criterion.BIC)
    )
    report = _analyze(exponential_record, config)
    fit_entry = next(t for t in report.trace if t.node == "distribution_fit")
    assert fit_entry.predicate.startswith("criterion=BIC")


class TestBatchSummary:
    def test_hand_binned_example(self):
        summary = batch_summary([3.0, 6.0, 12.0])
        assert [b.count for b in summary.bins] == [1, 1, 0, 1, 0, 0, 0, 0]
        assert summary.bins[-1].pct_cum == 100.0
        assert summary.bins[0].pct == 33.33
        assert summary.ratio_stats is None

    def test_zeros_land_in_first_bin(self):
        summary = batch_summary([0.0] * 7)
        assert summary.bins[0].count == 7
        assert summary.bins[0].label == "[0, 5)"

    def test_ratio_mode(self):
        summary = batch_summary([0.85, 1.0, 1.2, 0.9], ratio_mode="Cp/Pp")
        assert [b.count for b in summary.bins] == [1, 2, 1]
        assert summary.ratio_stats.label == "Cp/Pp"
        assert (summary.ratio_stats.min, summary.ratio_stats.max) == (0.85, 1.2)

    def test_matches_brute_force_binning(self, rng):
        edges = DEFAULT_BIN_EDGES
        for _ in range(1000):
            size = int(rng.integers(1, 40))
            values = rng.uniform(0.0, 80.0, size=size)
            values[rng.random(size) < 0.2] = rng.choice(edges[:-1])
            summary = batch_summary(values)

            expected = [0] * (len(edges) - 1)
            for v in values:
                for i in range(len(edges) - 1):
                    if edges[i] <= v < edges[i + 1]:
                        expected[i] += 1
            assert [b.count for b in summary.bins] == expected
            assert summary.bins[-1].pct_cum == 100.0
            cumulative = [b.pct_cum for b in summary.bins]
            assert cumulative == sorted(cumulative)

    def test_errors(self):
        with pytest.raises(EmptyInput):
            batch_summary([])
        with pytest.raises(InvalidSeries):
            batch_summary([1.0, float("nan")])
        with pytest.raises(InvalidBinEdges):
            batch_summary([1.0], bin_edges=[0.0, 5.0, 5.0])
        with pytest.raises(InvalidBinEdges):
            batch_summary([-1.0])


class TestSigmaRelativeError:
    def test_matches_reference_row(self, dataset, sigma_reference):
        row = sigma_reference.loc["101"]
        windows = [f"A{w}" for w in range(2, 11)]
        expected = abs(row[windows].mean() - row["Overall"]) / row["Overall"]
        value = sigma_relative_error(dataset.get("101").series)
        assert value == pytest.approx(expected, abs=5e-3)
        assert value == pytest.approx(0.068, abs=5e-3)

    def test_mmr_family(self, dataset, sigma_reference):
        row = sigma_reference.loc["102"]
        windows = [f"M{w}" for w in range(2, 11)]
        expected = abs(row[windows].mean() - row["Overall"]) / row["Overall"]
        value = sigma_relative_error(dataset.get("102").series, "MMR")
        assert value == pytest.approx(expected, abs=5e-3)

    def test_preconditions(self):
        with pytest.raises(TooFewSamples):
            sigma_relative_error(MeasurementSeries.from_values(np.arange(9.0)))
        with pytest.raises(SubgroupNotOne):
            sigma_relative_error(MeasurementSeries.from_values(np.arange(12.0), 2))
        with pytest.raises(ConstantSeries):
            sigma_relative_error(MeasurementSeries.from_values([1.0] * 12))
        with pytest.raises(ValueError):
            sigma_relative_error(
                MeasurementSeries.from_values(np.arange(12.0)), SigmaMethod.OVERALL
            )
