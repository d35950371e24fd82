"""Case-study tables: sigma profile, Cp/Cpk by estimator and their summaries.

Tables work from sigma rounded to TABLE_SIGMA_DECIMALS, the precision the
case-study sigma profile is tabulated at: a short-term index is its
long-term counterpart scaled by rounded sigma_overall / rounded
sigma_within. decimals=None keeps full precision.
"""

from typing import Sequence

import numpy as np
import pandas as pd

from pcap_project.components.capability_indices import (
    centering_index,
    potential_index,
)
from pcap_project.components.sigma_estimation import moving_range_profile
from pcap_project.constants import TABLE_SIGMA_DECIMALS
from pcap_project.entity.artifact_entity import BatchSummary
from pcap_project.entity.config_entity import SummaryConfig
from pcap_project.entity.domain_entity import Dataset, SigmaMethod, ToleranceSpec
from pcap_project.logger import logger
from pcap_project.orchestrator.analysis_flow import (
    batch_summary,
    sigma_relative_error,
)

OVERALL_COLUMN = "Overall"
_INDEX_PAIRS = {"Cp": "Pp", "Cpk": "Ppk"}


def sigma_table(
    dataset: Dataset,
    decimals: int | None = None,
    windows: Sequence[int] | None = None,
) -> pd.DataFrame:
    """Rows per dimension; columns Overall, A2..A10, M2..M10 (or the given windows)."""
    rows = {
        record.id: {
            key: estimate.value
            for key, estimate in moving_range_profile(record.series, windows).items()
        }
        for record in dataset
    }
    table = pd.DataFrame.from_dict(rows, orient="index")
    table.index.name = "dimension_id"
    if decimals is not None:
        table = table.round(decimals)
    return table


def within_columns(table: pd.DataFrame) -> list[str]:
    return [c for c in table.columns if c != OVERALL_COLUMN]


def _index_value(index: str, spec: ToleranceSpec, mu: float, sigma: float) -> float:
    if index == "Cp":
        value = potential_index(spec, sigma, respect_target=False).value
    else:
        value = centering_index(spec, mu, sigma).value
    return np.nan if value is None else value


def index_table(
    dataset: Dataset,
    index: str = "Cp",
    decimals: int | None = TABLE_SIGMA_DECIMALS,
) -> pd.DataFrame:
    """Long-term index plus the short-term index under every within estimator.

    index="Cp" gives columns Pp, Cp.A2..Cp.M10; index="Cpk" gives Ppk,
    Cpk.A2..Cpk.M10. The midpoint-centred forms are used throughout.
    """
    if index not in _INDEX_PAIRS:
        raise ValueError(f"index must be one of {sorted(_INDEX_PAIRS)}, got {index!r}")
    sigmas = sigma_table(dataset)

    rows = {}
    for record in dataset:
        mu = float(np.mean(record.series.array))
        profile = sigmas.loc[record.id]
        overall = float(profile[OVERALL_COLUMN])
        row = {_INDEX_PAIRS[index]: _index_value(index, record.spec, mu, overall)}
        for column in within_columns(sigmas):
            within = float(profile[column])
            if decimals is not None:
                within = overall * round(within, decimals) / round(overall, decimals)
            row[f"{index}.{column}"] = _index_value(index, record.spec, mu, within)
        rows[record.id] = row

    table = pd.DataFrame.from_dict(rows, orient="index")
    table.index.name = "dimension_id"
    return table


def _select(columns: list[str], methods: Sequence[str] | None) -> list[str]:
    if methods is None:
        return columns
    unknown = [m for m in methods if m not in columns]
    if unknown:
        raise ValueError(f"unknown within-sigma column(s): {unknown}")
    return list(methods)


def sigma_ratio_values(
    dataset: Dataset,
    methods: Sequence[str] | None = None,
    decimals: int | None = TABLE_SIGMA_DECIMALS,
) -> np.ndarray:
    """sigma_within / sigma_overall for every dimension and chosen estimator."""
    table = sigma_table(dataset, decimals)
    columns = _select(within_columns(table), methods)
    ratios = table[columns].div(table[OVERALL_COLUMN], axis=0)
    return ratios.to_numpy().ravel()


def capability_ratio_values(
    dataset: Dataset,
    index: str = "Cp",
    methods: Sequence[str] | None = None,
    decimals: int | None = TABLE_SIGMA_DECIMALS,
) -> np.ndarray:
    """Short-term over long-term index (Cp/Pp or Cpk/Ppk) per estimator."""
    table = index_table(dataset, index, decimals)
    long_term = table[_INDEX_PAIRS[index]]
    available = [c.split(".", 1)[1] for c in table.columns if "." in c]
    columns = [f"{index}.{m}" for m in _select(available, methods)]
    ratios = table[columns].div(long_term, axis=0).to_numpy().ravel()
    return ratios[~np.isnan(ratios)]


def relative_error_summary(
    dataset: Dataset,
    family: SigmaMethod | str = SigmaMethod.AMR,
    bin_edges: Sequence[float] | None = None,
) -> BatchSummary:
    """Binned relative error (in percent) of the window-averaged within sigma."""
    errors = [100 * sigma_relative_error(record.series, family) for record in dataset]
    return batch_summary(errors, bin_edges)


def case_study_summary(
    dataset: Dataset, config: SummaryConfig | None = None
) -> dict[str, BatchSummary]:
    """Relative-error binning for AMR and MMR plus the three ratio spreads."""
    config = config or SummaryConfig()
    logger.info(f"Summarizing {len(dataset)} dimension(s)")
    ratio_edges = (0.0, *config.ratio_limits, float("inf"))
    summaries = {
        "AMR": relative_error_summary(dataset, SigmaMethod.AMR, config.bin_edges),
        "MMR": relative_error_summary(dataset, SigmaMethod.MMR, config.bin_edges),
        "sigma_within/sigma_overall": batch_summary(
            sigma_ratio_values(dataset), ratio_edges, "sigma_within/sigma_overall"
        ),
        "Cp/Pp": batch_summary(
            capability_ratio_values(dataset, "Cp"), ratio_edges, "Cp/Pp"
        ),
        "Cpk/Ppk": batch_summary(
            capability_ratio_values(dataset, "Cpk"), ratio_edges, "Cpk/Ppk"
        ),
    }
    return summaries
