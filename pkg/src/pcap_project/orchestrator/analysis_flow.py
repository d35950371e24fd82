"""Per-dimension capability workflow and dataset fan-out.

Order of decisions: tolerance class, outlier screening, Anderson-Darling
normality, sigma selection, then either the normal-path indices or the
distribution fit and percentile indices. Every decision lands in the trace.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np
import pandas as pd

from pcap_project.components.capability_indices import (
    CapabilityEvaluation,
    capability_rating,
    ppm_nonconforming,
)
from pcap_project.components.data_screening import (
    DataScreening,
    anderson_darling_normality,
)
from pcap_project.components.distribution_fitting import (
    DistributionFitting,
    empirical_quantile_triple,
    fit_distribution,
    quantile_triple,
)
from pcap_project.components.sigma_estimation import (
    SigmaEstimation,
    overall_sigma,
    within_sigma_amr,
    within_sigma_mmr,
)
from pcap_project.constants import (
    DEFAULT_BIN_EDGES,
    DEFAULT_RATIO_EDGES,
    MAX_WINDOW,
    MIN_WINDOW,
)
from pcap_project.entity.artifact_entity import (
    AnalysisPath,
    BatchBin,
    BatchSummary,
    CapabilityRating,
    CapabilityReport,
    RatioStats,
    TraceEntry,
)
from pcap_project.entity.config_entity import (
    AnalysisMode,
    OutlierAction,
    WorkflowConfig,
)
from pcap_project.entity.domain_entity import (
    Dataset,
    Family,
    MeasurementSeries,
    SigmaMethod,
    ToleranceKind,
    ToleranceSpec,
    classify_tolerance,
)
from pcap_project.exception import (
    CapabilityError,
    ConstantSeries,
    EmptyInput,
    InvalidBinEdges,
    InvalidSeries,
    NoFamilyFits,
    SubgroupNotOne,
    TooFewSamples,
)
from pcap_project.logger import logger

TERMINAL = "terminal"


def analyze_dimension(
    dimension_id: str,
    spec: ToleranceSpec,
    series: MeasurementSeries,
    config: WorkflowConfig | None = None,
) -> CapabilityReport:
    """Runs the full or simplified workflow for one dimension.

    Domain errors do not escape: they end the trace with an "error" entry
    and the report keeps whatever was computed before the failure.
    """
    config = config or WorkflowConfig()
    trace: list[TraceEntry] = []

    tolerance = classify_tolerance(spec, config.symmetry_tol)
    trace.append(
        TraceEntry(
            "classify_tolerance",
            f"has_target={tolerance.has_target}",
            tolerance.kind.value,
        )
    )
    if (
        config.mode is AnalysisMode.SIMPLIFIED
        and tolerance.kind is ToleranceKind.BILATERAL_ASYMMETRIC
    ):
        logger.warning(
            f"{dimension_id}: asymmetric tolerance analyzed with symmetric formulas"
        )
        trace.append(
            TraceEntry(
                "simplified_routing",
                "mode=Simplified, kind=BilateralAsymmetric",
                "symmetric_formulas",
            )
        )

    analyzed = series
    outliers = normality = None
    sigma_overall = sigma_within = None
    mean = None
    try:
        logger.info(f"Analyzing dimension {dimension_id} (n={series.n})")

        screening = DataScreening(config.outliers, config.alpha)
        outliers = screening.screen_outliers(series)
        if outliers is None:
            trace.append(TraceEntry("outlier_detection", "method=off", "skipped"))
        else:
            trace.append(
                TraceEntry(
                    "outlier_detection",
                    f"method={outliers.method.value}, flagged={len(outliers.flagged)}",
                    "flagged" if outliers.has_outliers else "clean",
                )
            )
            if (
                outliers.has_outliers
                and config.outliers.action is OutlierAction.EXCLUDE
            ):
                if series.subgroup_size == 1:
                    analyzed = series.without(outliers.indices)
                    trace.append(
                        TraceEntry(
                            "outlier_action",
                            f"action=Exclude, removed={len(outliers.flagged)}",
                            "excluded",
                        )
                    )
                else:
                    logger.warning(
                        f"{dimension_id}: outliers kept, exclusion would break "
                        f"subgroups of size {series.subgroup_size}"
                    )
                    trace.append(
                        TraceEntry(
                            "outlier_action",
                            f"action=Exclude, subgroup_size={series.subgroup_size}",
                            "flag_only",
                        )
                    )

        normality = anderson_darling_normality(analyzed, config.alpha)
        trace.append(
            TraceEntry(
                "normality_test",
                f"A2*={normality.a2_star:.6g}, p={normality.p_value:.6g}, "
                f"alpha={config.alpha:g}",
                "pass" if normality.passed else "fail",
            )
        )

        sigma_overall, sigma_within = SigmaEstimation(
            config.sigma
        ).initiate_sigma_estimation(analyzed)
        trace.append(
            TraceEntry(
                "sigma_selection",
                f"subgroup_size={analyzed.subgroup_size}",
                sigma_within.label,
            )
        )
        mean = float(np.mean(analyzed.array))

        evaluation = CapabilityEvaluation(config.mode, config.symmetry_tol)
        if normality.passed:
            indices = evaluation.initiate_capability_evaluation(
                spec, mean, sigma_within.value, sigma_overall.value
            )
            ppm = ppm_nonconforming(fit_distribution(analyzed, Family.NORMAL), spec)
            trace.append(
                TraceEntry("normal_path", f"mode={config.mode.value}", TERMINAL)
            )
            return CapabilityReport(
                dimension_id=dimension_id,
                n=analyzed.n,
                tolerance=tolerance,
                trace=tuple(trace),
                spec=spec,
                mean=mean,
                sigma_overall=sigma_overall,
                sigma_within=sigma_within,
                outliers=outliers,
                normality=normality,
                indices=indices,
                ppm_nonconforming=ppm,
                rating=capability_rating(indices.get("Cpk")),
                path=AnalysisPath.NORMAL,
            )

        best_fit = None
        ppm_value: float | None = None
        try:
            ranked = DistributionFitting(
                config.distfit
            ).initiate_distribution_fitting(analyzed)
            best_fit = ranked.best
            quantiles = quantile_triple(best_fit)
            source = best_fit.family.value
            ppm_value = ppm_nonconforming(best_fit, spec)
            excluded = ",".join(sorted(ranked.excluded)) or "none"
            trace.append(
                TraceEntry(
                    "distribution_fit",
                    f"criterion={ranked.criterion.value}, excluded={excluded}",
                    source,
                )
            )
        except NoFamilyFits as e:
            logger.warning(f"{dimension_id}: {e.message}; using empirical quantiles")
            quantiles = empirical_quantile_triple(analyzed)
            source = "empirical"
            trace.append(
                TraceEntry(
                    "distribution_fit",
                    f"no family fitted ({len(e.reasons)} tried)",
                    "empirical_quantiles",
                )
            )

        indices = evaluation.initiate_capability_evaluation(spec, quantiles=quantiles)
        trace.append(
            TraceEntry("non_normal_path", f"mode={config.mode.value}", TERMINAL)
        )
        return CapabilityReport(
            dimension_id=dimension_id,
            n=analyzed.n,
            tolerance=tolerance,
            trace=tuple(trace),
            spec=spec,
            mean=mean,
            sigma_overall=sigma_overall,
            sigma_within=sigma_within,
            outliers=outliers,
            normality=normality,
            best_fit=best_fit,
            quantiles=quantiles,
            quantile_source=source,
            indices=indices,
            ppm_nonconforming=ppm_value,
            rating=capability_rating(indices.get("CNpk")),
            path=AnalysisPath.NON_NORMAL,
        )

    except CapabilityError as e:
        logger.error(f"{dimension_id}: analysis stopped with {e.code}: {e.message}")
        trace.append(TraceEntry("error", f"code={e.code}", TERMINAL))
        return CapabilityReport(
            dimension_id=dimension_id,
            n=analyzed.n,
            tolerance=tolerance,
            trace=tuple(trace),
            spec=spec,
            mean=mean,
            sigma_overall=sigma_overall,
            sigma_within=sigma_within,
            outliers=outliers,
            normality=normality,
            rating=CapabilityRating.UNDEFINED,
            path=AnalysisPath.ERROR,
            error=e.to_dict(),
        )


def analyze_dataset(
    dataset: Dataset, config: WorkflowConfig | None = None
) -> list[CapabilityReport]:
    """Reports in dataset order; dimensions run concurrently."""
    config = config or WorkflowConfig()
    if len(dataset) == 0:
        return []
    logger.info(
        f"Analyzing {len(dataset)} dimension(s) with {config.max_workers} worker(s)"
    )
    with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
        reports = list(
            pool.map(
                lambda record: analyze_dimension(
                    record.id, record.spec, record.series, config
                ),
                dataset,
            )
        )
    failed = [r.dimension_id for r in reports if r.has_error]
    if failed:
        logger.warning(f"{len(failed)} dimension(s) ended in error: {failed}")
    return reports


def _validated_edges(edges: Sequence[float]) -> np.ndarray:
    arr = np.asarray(edges, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidBinEdges("at least two bin edges are required")
    if np.any(np.isnan(arr)):
        raise InvalidBinEdges("bin edges must not be NaN")
    if np.any(np.diff(arr) <= 0):
        raise InvalidBinEdges("bin edges must be strictly increasing")
    return arr


def batch_summary(
    values: Sequence[float] | np.ndarray,
    bin_edges: Sequence[float] | None = None,
    ratio_mode: str | None = None,
) -> BatchSummary:
    """Half-open [lo, hi) binning with percentages rounded to 2 decimals.

    Values are percentages against the default edges. With ratio_mode (a
    label such as "Cp/Pp") the default edges become [0, 0.9, 1.1, inf) and
    the min/max of the ratios are kept.
    """
    data = np.asarray(values, dtype=float).ravel()
    if data.size == 0:
        raise EmptyInput("batch summary needs at least one value")
    if not np.all(np.isfinite(data)):
        raise InvalidSeries("batch summary values must be finite")

    if bin_edges is None:
        bin_edges = DEFAULT_RATIO_EDGES if ratio_mode else DEFAULT_BIN_EDGES
    edges = _validated_edges(bin_edges)
    outside = data[(data < edges[0]) | (data >= edges[-1])]
    if outside.size:
        raise InvalidBinEdges(
            f"{outside.size} value(s) fall outside [{edges[0]:g}, {edges[-1]:g})"
        )

    codes = pd.cut(data, bins=edges, right=False, labels=False)
    counts = np.bincount(np.asarray(codes, dtype=int), minlength=edges.size - 1)
    cumulative = np.cumsum(counts)
    total = int(data.size)

    bins = tuple(
        BatchBin(
            lower=float(lo),
            upper=float(hi),
            count=int(count),
            pct=round(count / total * 100, 2),
            pct_cum=round(cum / total * 100, 2),
        )
        for lo, hi, count, cum in zip(edges[:-1], edges[1:], counts, cumulative)
    )
    ratio_stats = (
        RatioStats(ratio_mode, float(np.min(data)), float(np.max(data)))
        if ratio_mode
        else None
    )
    return BatchSummary(bins=bins, total=total, ratio_stats=ratio_stats)


def sigma_relative_error(
    series: MeasurementSeries, family: SigmaMethod | str = SigmaMethod.AMR
) -> float:
    """|mean(sigma_w over windows 2..10) - sigma_overall| / sigma_overall.

    family is AMR or MMR; the result is a fraction, not a percentage.
    """
    method = family if isinstance(family, SigmaMethod) else SigmaMethod.parse(family)
    if method not in (SigmaMethod.AMR, SigmaMethod.MMR):
        raise ValueError(f"relative error is defined for AMR or MMR, got {method}")
    if series.subgroup_size != 1:
        raise SubgroupNotOne("relative error needs individuals data")
    if series.n < MAX_WINDOW:
        raise TooFewSamples(
            f"relative error needs at least {MAX_WINDOW} values, got {series.n}"
        )

    overall = overall_sigma(series).value
    if overall == 0:
        raise ConstantSeries("relative error is undefined for a constant series")
    estimator = within_sigma_amr if method is SigmaMethod.AMR else within_sigma_mmr
    within = [estimator(series, w).value for w in range(MIN_WINDOW, MAX_WINDOW + 1)]
    return abs(float(np.mean(within)) - overall) / overall
