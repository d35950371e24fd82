"""Wire models for the JSON report.

Non-finite numbers (the AICc sentinel) are written as null.
"""

from typing import Annotated, Dict, List, Optional

from pydantic import BaseModel, Field

from pcap_project.entity.artifact_entity import CapabilityReport
from pcap_project.utils import finite_or_none


class ToleranceModel(BaseModel):
    kind: Annotated[str, Field(..., description="ToleranceKind classification")]
    has_target: bool
    lsl: Optional[float] = None
    usl: Optional[float] = None
    target: Optional[float] = None
    units: Optional[str] = None


class SigmaEstimateModel(BaseModel):
    method: Annotated[str, Field(..., description="Estimation method")]
    value: Annotated[float, Field(..., ge=0, description="Standard deviation")]
    window: Annotated[
        Optional[int], Field(description="Moving-range window for AMR/MMR")
    ] = None


class FlaggedValueModel(BaseModel):
    index: int
    value: float


class OutlierModel(BaseModel):
    method: str
    flagged: List[FlaggedValueModel]
    params: Dict[str, float | bool]


class NormalityModel(BaseModel):
    a2: Optional[float]
    a2_star: Optional[float]
    p_value: Annotated[float, Field(..., ge=0, le=1)]
    alpha: float
    passed: bool


class DistributionFitModel(BaseModel):
    family: str
    params: Dict[str, float]
    n: int
    loglik: float
    aic: float
    bic: float
    aicc: Annotated[Optional[float], Field(description="null when n <= k + 1")] = None


class QuantileModel(BaseModel):
    p00135: float
    p50: float
    p99865: float
    source: Annotated[str, Field(..., description="fitted family or 'empirical'")]


class IndexModel(BaseModel):
    value: Optional[float] = None
    reason: Optional[str] = None


class TraceEntryModel(BaseModel):
    node: str
    predicate: str
    branch: str


class ErrorModel(BaseModel):
    code: str
    message: str


class CapabilityReportModel(BaseModel):
    dimension_id: str
    n: int
    path: Annotated[str, Field(..., description="normal, non_normal or error")]
    tolerance: Optional[ToleranceModel] = None
    mean: Optional[float] = None
    sigma_overall: Optional[SigmaEstimateModel] = None
    sigma_within: Optional[SigmaEstimateModel] = None
    outliers: Optional[OutlierModel] = None
    normality: Optional[NormalityModel] = None
    best_fit: Optional[DistributionFitModel] = None
    quantiles: Optional[QuantileModel] = None
    indices: Dict[str, IndexModel]
    ppm_nonconforming: Optional[float] = None
    rating: str
    trace: List[TraceEntryModel]
    error: Optional[ErrorModel] = None


class ReportSetModel(BaseModel):
    reports: List[CapabilityReportModel]


def to_report_model(report: CapabilityReport) -> CapabilityReportModel:
    tolerance = None
    if report.tolerance is not None:
        spec = report.spec
        tolerance = ToleranceModel(
            kind=report.tolerance.kind.value,
            has_target=report.tolerance.has_target,
            lsl=spec.lsl if spec else None,
            usl=spec.usl if spec else None,
            target=spec.target if spec else None,
            units=spec.units if spec else None,
        )

    def sigma_model(estimate):
        if estimate is None:
            return None
        return SigmaEstimateModel(
            method=estimate.method.value, value=estimate.value, window=estimate.window
        )

    outliers = None
    if report.outliers is not None:
        outliers = OutlierModel(
            method=report.outliers.method.value,
            flagged=[
                FlaggedValueModel(index=f.index, value=f.value)
                for f in report.outliers.flagged
            ],
            params=dict(report.outliers.params),
        )

    normality = None
    if report.normality is not None:
        nr = report.normality
        normality = NormalityModel(
            a2=finite_or_none(nr.a2),
            a2_star=finite_or_none(nr.a2_star),
            p_value=nr.p_value,
            alpha=nr.alpha,
            passed=nr.passed,
        )

    best_fit = None
    if report.best_fit is not None:
        fit = report.best_fit
        best_fit = DistributionFitModel(
            family=fit.family.value,
            params=fit.named_params,
            n=fit.n,
            loglik=fit.loglik,
            aic=fit.aic,
            bic=fit.bic,
            aicc=finite_or_none(fit.aicc),
        )

    quantiles = None
    if report.quantiles is not None:
        q = report.quantiles
        quantiles = QuantileModel(
            p00135=q.p00135,
            p50=q.p50,
            p99865=q.p99865,
            source=report.quantile_source or "empirical",
        )

    return CapabilityReportModel(
        dimension_id=report.dimension_id,
        n=report.n,
        path=report.path.value,
        tolerance=tolerance,
        mean=finite_or_none(report.mean),
        sigma_overall=sigma_model(report.sigma_overall),
        sigma_within=sigma_model(report.sigma_within),
        outliers=outliers,
        normality=normality,
        best_fit=best_fit,
        quantiles=quantiles,
        indices={
            name: IndexModel(
                value=finite_or_none(iv.value),
                reason=iv.reason.value if iv.reason is not None else None,
            )
            for name, iv in report.indices.items()
        },
        ppm_nonconforming=finite_or_none(report.ppm_nonconforming),
        rating=report.rating.value,
        trace=[
            TraceEntryModel(node=t.node, predicate=t.predicate, branch=t.branch)
            for t in report.trace
        ],
        error=ErrorModel(**report.error) if report.error is not None else None,
    )
