import pytest

from pcap_project.entity.artifact_entity import (
    BatchBin,
    CapabilityReport,
    Criterion,
    IndexValue,
    OutlierMethod,
    ReasonCode,
    TraceEntry,
)
from pcap_project.entity.domain_entity import DistributionFit, Family


def test_index_value_holds_value_or_reason():
    assert IndexValue("Cp", 1.2).is_defined
    undefined = IndexValue.undefined("Cp", ReasonCode.UNILATERAL_CP_UNDEFINED)
    assert not undefined.is_defined
    with pytest.raises(ValueError):
        IndexValue("Cp")
    with pytest.raises(ValueError):
        IndexValue("Cp", 1.0, ReasonCode.NO_TARGET)
    with pytest.raises(ValueError):
        IndexValue("Cp", float("inf"))


def test_zero_branch_reason_carries_zero():
    zero = IndexValue("Cpk*", 0.0, ReasonCode.ZERO_BEYOND_HALF_TOLERANCE)
    assert zero.is_defined
    with pytest.raises(ValueError):
        IndexValue("Cpk*", 0.5, ReasonCode.ZERO_BEYOND_HALF_TOLERANCE)


def test_criterion_reads_the_matching_score():
    fit = DistributionFit(Family.NORMAL, (0.0, 1.0), 20, -10.0, 24.0, 25.99, 24.7)
    assert Criterion.parse("aicc").of(fit) == 24.7
    assert Criterion.BIC.of(fit) == 25.99
    with pytest.raises(ValueError):
        Criterion.parse("HQIC")


def test_outlier_method_aliases():
    assert OutlierMethod.parse("tukey") is OutlierMethod.TUKEY_FENCE
    assert OutlierMethod.parse("GRUBBS") is OutlierMethod.GRUBBS


def test_report_requires_a_trace():
    with pytest.raises(ValueError):
        CapabilityReport(dimension_id="1", n=0, tolerance=None, trace=())
    report = CapabilityReport(
        dimension_id="1",
        n=0,
        tolerance=None,
        trace=(TraceEntry("error", "EMPTY_INPUT", "terminal"),),
        error={"code": "EMPTY_INPUT", "message": "empty"},
    )
    assert report.has_error


def test_batch_bin_label():
    assert BatchBin(50.0, float("inf"), 1, 10.0, 100.0).label == "[50, inf)"
