"""Reproduces the published case-study tables from the raw measurements."""

import numpy as np
import pytest

from pcap_project.components.data_screening import anderson_darling_normality
from pcap_project.orchestrator.summary_flow import (
    capability_ratio_values,
    case_study_summary,
    index_table,
    sigma_ratio_values,
    sigma_table,
)


def _max_abs_difference(computed, reference):
    assert list(computed.index) == list(reference.index)
    return (computed[reference.columns] - reference).abs().to_numpy().max()


def test_sigma_table(dataset, sigma_reference):
    table = sigma_table(dataset)
    assert table.shape == (9, 19)
    assert _max_abs_difference(table, sigma_reference) <= 5e-4


def test_cp_table(dataset, cp_reference):
    assert _max_abs_difference(index_table(dataset, "Cp"), cp_reference) <= 5e-3


def test_cpk_table(dataset, cpk_reference):
    assert _max_abs_difference(index_table(dataset, "Cpk"), cpk_reference) <= 5e-3


def test_index_table_rejects_other_indices(dataset):
    with pytest.raises(ValueError):
        index_table(dataset, "Cpm")


def test_cp_over_pp_spread(dataset):
    ratios = capability_ratio_values(dataset, "Cp")
    assert ratios.size == 9 * 18
    assert ratios.min() == pytest.approx(0.657, abs=0.01)
    assert ratios.max() == pytest.approx(1.585, abs=0.01)


def test_cp_over_pp_spread_for_two_point_ranges(dataset):
    ratios = capability_ratio_values(dataset, "Cp", methods=["A2"])
    assert ratios.size == 9
    assert ratios.min() == pytest.approx(0.841, abs=0.005)
    assert ratios.max() == pytest.approx(1.193, abs=0.005)


def test_cp_over_pp_uses_tabulated_sigma(dataset):
    cp_ratios = capability_ratio_values(dataset, "Cp")
    assert cp_ratios == pytest.approx(1 / sigma_ratio_values(dataset), rel=1e-12)


def test_full_precision_tables(dataset):
    sigmas = sigma_table(dataset)
    exact = sigmas["Overall"] / sigmas["A2"]
    ratios = capability_ratio_values(dataset, "Cp", methods=["A2"], decimals=None)
    assert ratios == pytest.approx(exact.to_numpy(), rel=1e-12)
    rounded = capability_ratio_values(dataset, "Cp", methods=["A2"])
    assert not np.allclose(ratios, rounded, rtol=1e-9, atol=0)


def test_sigma_ratio_spread(dataset):
    ratios = sigma_ratio_values(dataset)
    assert ratios.min() == pytest.approx(0.631, abs=0.01)
    assert ratios.max() == pytest.approx(1.521, abs=0.01)


def test_every_dimension_passes_normality(dataset):
    for record in dataset:
        assert anderson_darling_normality(record.series, alpha=0.05).passed, record.id


def test_case_study_summary(dataset):
    summaries = case_study_summary(dataset)
    assert list(summaries) == [
        "AMR",
        "MMR",
        "sigma_within/sigma_overall",
        "Cp/Pp",
        "Cpk/Ppk",
    ]
    for name in ("AMR", "MMR"):
        assert summaries[name].total == 9
        assert summaries[name].ratio_stats is None
    cp = summaries["Cp/Pp"]
    assert cp.total == 9 * 18
    assert cp.bins[-1].pct_cum == 100.0
    assert cp.ratio_stats.min == pytest.approx(0.657, abs=0.01)
    assert np.isclose(sum(b.count for b in cp.bins), cp.total)
