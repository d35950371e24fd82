import math
import sys
from typing import Callable, Iterable

import numpy as np
from scipy import optimize, special, stats

from pcap_project.constants import P_LOWER, P_MEDIAN, P_UPPER
from pcap_project.entity.artifact_entity import Criterion, RankedFits
from pcap_project.entity.config_entity import DistributionFitConfig
from pcap_project.entity.domain_entity import (
    DistributionFit,
    Family,
    MeasurementSeries,
    QuantileTriple,
)
from pcap_project.exception import (
    CapabilityError,
    CustomException,
    DegenerateData,
    NoFamilyFits,
    NonConvergence,
    SupportViolation,
    TooFewSamples,
)
from pcap_project.logger import logger

SHAPE_TOL = 1e-10
MAX_ITER = 200
QUANTILE_TOL = 1e-10

# Location search for the 3-parameter Weibull, as multiples of the data range
W3P_FAR_OFFSET = 10.0
W3P_NEAR_OFFSET = 1e-4

POSITIVE_SUPPORT = {
    Family.LOGNORMAL,
    Family.EXPONENTIAL,
    Family.GAMMA,
    Family.WEIBULL2P,
}


def information_criteria(loglik: float, k: int, n: int) -> dict[str, float]:
    """AIC, BIC and AICc; AICc is +inf when n <= k + 1."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    aic = -2.0 * loglik + 2 * k
    bic = -2.0 * loglik + k * math.log(n)
    if n > k + 1:
        aicc = aic + 2.0 * k * (k + 1) / (n - k - 1)
    else:
        aicc = math.inf
    return {"aic": aic, "bic": bic, "aicc": aicc}


def _solve_positive_root(
    f: Callable[[float], float],
    fprime: Callable[[float], float],
    x0: float,
    what: str,
) -> float:
    """Root of a function with one sign change on (0, inf).

    Newton from x0 first; bracketed Brent search when Newton fails or
    leaves the positive axis.
    """
    try:
        result = optimize.root_scalar(
            f, x0=x0, fprime=fprime, method="newton", xtol=SHAPE_TOL, maxiter=MAX_ITER
        )
        if result.converged and result.root > 0 and math.isfinite(result.root):
            return float(result.root)
    except (ArithmeticError, ValueError, RuntimeError):
        pass

    lo, hi = x0 / 2, x0 * 2
    for _ in range(MAX_ITER):
        if np.sign(f(lo)) != np.sign(f(hi)):
            break
        lo, hi = lo / 2, hi * 2
    else:
        raise NonConvergence(f"could not bracket the {what} equation")
    try:
        root, info = optimize.brentq(
            f, lo, hi, xtol=SHAPE_TOL, maxiter=MAX_ITER, full_output=True
        )
    except (ValueError, RuntimeError) as e:
        raise NonConvergence(f"{what} search failed: {e}") from e
    if not info.converged:
        raise NonConvergence(f"{what} search did not converge")
    return float(root)


def _gamma_shape(x: np.ndarray) -> float:
    s = math.log(float(np.mean(x))) - float(np.mean(np.log(x)))
    if s <= 0:
        raise DegenerateData("gamma shape equation has no positive root")
    x0 = (3 - s + math.sqrt((s - 3) ** 2 + 24 * s)) / (12 * s)

    def f(k: float) -> float:
        return math.log(k) - float(special.digamma(k)) - s

    def fprime(k: float) -> float:
        return 1.0 / k - float(special.polygamma(1, k))

    return _solve_positive_root(f, fprime, x0, "gamma shape")


def _weibull_shape(x: np.ndarray) -> float:
    # normalising by the maximum keeps y**c within [0, 1]
    y = x / np.max(x)
    log_y = np.log(y)
    mean_log = float(np.mean(log_y))

    def f(c: float) -> float:
        yc = y**c
        return float(np.sum(yc * log_y) / np.sum(yc)) - 1.0 / c - mean_log

    def fprime(c: float) -> float:
        yc = y**c
        s0 = np.sum(yc)
        s1 = np.sum(yc * log_y)
        s2 = np.sum(yc * log_y**2)
        return float(s2 / s0 - (s1 / s0) ** 2) + 1.0 / c**2

    sd_log = float(np.std(log_y))
    x0 = 1.2 / sd_log if sd_log > 0 else 1.0
    return _solve_positive_root(f, fprime, x0, "weibull shape")


def _weibull2p_params(x: np.ndarray) -> tuple[float, float]:
    shape = _weibull_shape(x)
    x_max = float(np.max(x))
    scale = x_max * float(np.mean((x / x_max) ** shape)) ** (1.0 / shape)
    return shape, scale


def _weibull3p_params(x: np.ndarray) -> tuple[float, float, float]:
    x_min = float(np.min(x))
    spread = float(np.ptp(x))

    def negative_profile(location: float) -> float:
        shifted = x - location
        try:
            shape, scale = _weibull2p_params(shifted)
        except CapabilityError:
            return math.inf
        value = -float(np.sum(stats.weibull_min.logpdf(shifted, shape, scale=scale)))
        return value if math.isfinite(value) else math.inf

    result = optimize.minimize_scalar(
        negative_profile,
        bounds=(x_min - W3P_FAR_OFFSET * spread, x_min - W3P_NEAR_OFFSET * spread),
        method="bounded",
        options={"xatol": 1e-8 * spread, "maxiter": MAX_ITER},
    )
    if not result.success or not math.isfinite(result.fun):
        raise NonConvergence(f"weibull3p location search failed: {result.message}")
    location = float(result.x)
    shape, scale = _weibull2p_params(x - location)
    return shape, scale, location


def _estimate(family: Family, x: np.ndarray) -> tuple[float, ...]:
    if family is Family.NORMAL:
        return float(np.mean(x)), float(np.std(x))
    if family is Family.LOGNORMAL:
        log_x = np.log(x)
        return float(np.mean(log_x)), float(np.std(log_x))
    if family is Family.EXPONENTIAL:
        return (1.0 / float(np.mean(x)),)
    if family is Family.GAMMA:
        shape = _gamma_shape(x)
        return shape, float(np.mean(x)) / shape
    if family is Family.WEIBULL2P:
        return _weibull2p_params(x)
    return _weibull3p_params(x)


def frozen_distribution(fit: DistributionFit):
    """scipy frozen distribution for a fit."""
    p = fit.params
    if fit.family is Family.NORMAL:
        return stats.norm(loc=p[0], scale=p[1])
    if fit.family is Family.LOGNORMAL:
        return stats.lognorm(s=p[1], scale=math.exp(p[0]))
    if fit.family is Family.EXPONENTIAL:
        return stats.expon(scale=1.0 / p[0])
    if fit.family is Family.GAMMA:
        return stats.gamma(a=p[0], scale=p[1])
    if fit.family is Family.WEIBULL2P:
        return stats.weibull_min(c=p[0], scale=p[1])
    return stats.weibull_min(c=p[0], scale=p[1], loc=p[2])


def build_fit(
    family: Family, params: tuple[float, ...], values: np.ndarray
) -> DistributionFit:
    """DistributionFit with log-likelihood and criteria evaluated on values."""
    n = int(values.size)
    trial = DistributionFit(family, tuple(params), n, 0.0, 0.0, 0.0, 0.0)
    loglik = float(np.sum(frozen_distribution(trial).logpdf(values)))
    if not math.isfinite(loglik):
        raise NonConvergence(f"{family.value} log-likelihood is not finite")
    criteria = information_criteria(loglik, family.k, n)
    return DistributionFit(family, tuple(params), n, loglik, **criteria)


def fit_distribution(
    series: MeasurementSeries | np.ndarray, family: Family
) -> DistributionFit:
    """Maximum-likelihood fit of one family."""
    x = series.array if isinstance(series, MeasurementSeries) else np.asarray(series)
    x = x.astype(float)
    n = x.size
    if n < family.k + 1:
        raise TooFewSamples(
            f"{family.value} needs at least {family.k + 1} values, got {n}"
        )
    if np.ptp(x) == 0:
        raise DegenerateData(f"cannot fit {family.value} to a constant series")
    if family in POSITIVE_SUPPORT and np.any(x <= 0):
        raise SupportViolation(f"{family.value} needs strictly positive data")

    with np.errstate(all="ignore"):
        params = _estimate(family, x)
    if not all(math.isfinite(v) for v in params):
        raise NonConvergence(f"{family.value} produced non-finite parameters")
    return build_fit(family, params, x)


def default_candidates(
    n: int, candidates: Iterable[Family] | None = None, weibull3p_min_n: int = 20
) -> tuple[list[Family], dict[str, str]]:
    """Candidate families for n values, with the reasons for any exclusion."""
    families = list(candidates) if candidates is not None else list(Family)
    excluded: dict[str, str] = {}
    if Family.WEIBULL3P in families and n < weibull3p_min_n:
        families.remove(Family.WEIBULL3P)
        excluded[Family.WEIBULL3P.value] = (
            f"EXCLUDED: n={n} is below the minimum of {weibull3p_min_n}"
        )
    return families, excluded


def select_best_distribution(
    series: MeasurementSeries,
    candidates: Iterable[Family] | None = None,
    criterion: Criterion = Criterion.AICC,
    weibull3p_min_n: int = 20,
) -> RankedFits:
    """Fits every candidate and ranks the successes, smallest criterion first.

    Ties go to the smaller parameter count, then to family order.
    """
    families, excluded = default_candidates(series.n, candidates, weibull3p_min_n)
    if not families and not excluded:
        raise ValueError("at least one candidate family is required")

    fits: list[DistributionFit] = []
    for family in families:
        try:
            fits.append(fit_distribution(series, family))
        except CapabilityError as e:
            excluded[family.value] = f"{e.code}: {e.message}"
            logger.info(f"{family.value} excluded: {e.message}")

    if not fits:
        raise NoFamilyFits(excluded)

    fits.sort(key=lambda f: (criterion.of(f), f.k, f.family.order))
    return RankedFits(fits=tuple(fits), criterion=criterion, excluded=excluded)


def quantile(fit: DistributionFit, p: float) -> float:
    """Inverse CDF with |CDF(q) - p| <= 1e-10."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    dist = frozen_distribution(fit)
    q = float(dist.ppf(p))
    if math.isfinite(q) and abs(float(dist.cdf(q)) - p) <= QUANTILE_TOL:
        return q

    # bracket around the closed-form answer and refine on the CDF
    lo_support, hi_support = (float(b) for b in dist.support())
    width = max(abs(q) if math.isfinite(q) else 1.0, 1.0)
    lo = q - width if math.isfinite(q) else float(dist.mean()) - width
    hi = q + width if math.isfinite(q) else float(dist.mean()) + width
    lo = max(lo, lo_support)
    hi = min(hi, hi_support)
    for _ in range(MAX_ITER):
        if dist.cdf(lo) <= p <= dist.cdf(hi):
            break
        width *= 2
        lo = max(lo - width, lo_support)
        hi = min(hi + width, hi_support)
    try:
        root = optimize.brentq(
            lambda x: float(dist.cdf(x)) - p,
            lo,
            hi,
            xtol=1e-14,
            rtol=1e-15,
            maxiter=MAX_ITER,
        )
    except (ValueError, RuntimeError) as e:
        # no sign change in the bracket, or no convergence
        if math.isfinite(q):
            logger.warning(f"{fit.family.value} quantile({p}) kept at ppf: {e}")
            return q
        raise NonConvergence(
            f"{fit.family.value} quantile({p}) could not be inverted: {e}"
        ) from e
    return float(root)


def quantile_triple(fit: DistributionFit) -> QuantileTriple:
    return QuantileTriple(
        p00135=quantile(fit, P_LOWER),
        p50=quantile(fit, P_MEDIAN),
        p99865=quantile(fit, P_UPPER),
    )


def empirical_quantile_triple(series: MeasurementSeries) -> QuantileTriple:
    """Order-statistic interpolation, used when no family can be fitted."""
    lower, median, upper = np.quantile(
        series.array, [P_LOWER, P_MEDIAN, P_UPPER], method="linear"
    )
    return QuantileTriple(float(lower), float(median), float(upper))


class DistributionFitting:
    def __init__(self, config: DistributionFitConfig):
        self.config = config

    def initiate_distribution_fitting(self, series: MeasurementSeries) -> RankedFits:
        try:
            logger.info("Starting distribution fitting")
            ranked = select_best_distribution(
                series,
                candidates=self.config.candidates,
                criterion=self.config.criterion,
                weibull3p_min_n=self.config.weibull3p_min_n,
            )
            best = ranked.best
            logger.info(
                f"Best fit {best.family.value} by {ranked.criterion.value}="
                f"{ranked.criterion.of(best):.4f}"
            )
            return ranked
        except CapabilityError:
            raise
        except Exception as e:
            logger.error(f"Error occurred during distribution fitting: {e}")
            raise CustomException(e, sys) from e
