"""SVG histograms with a density overlay and specification markers.

Figures are built on matplotlib's object API, without pyplot. The density
curve is for display only.
"""

import io
import math
from typing import Sequence

import numpy as np
from matplotlib import rc_context
from matplotlib.axes import Axes
from matplotlib.figure import Figure
from scipy import stats

from pcap_project.constants import DEFAULT_RATIO_LIMITS
from pcap_project.entity.domain_entity import (
    MeasurementSeries,
    QuantileTriple,
    ToleranceSpec,
)
from pcap_project.exception import DegenerateRange, TooFewSamples

MIN_BINS = 5
MAX_BINS = 50
DENSITY_POINTS = 256

# fixed salt and no timestamp keep the SVG byte-stable across runs
_SVG_RC = {"svg.hashsalt": "pcap", "svg.fonttype": "none"}
_SVG_METADATA = {"Date": None}

_SPEC_STYLE = {"color": "tab:red", "linestyle": "-", "linewidth": 1.5}
_CENTER_STYLE = {"color": "tab:green", "linestyle": "-.", "linewidth": 1.2}
_MEAN_STYLE = {"color": "black", "linestyle": "-", "linewidth": 1.2}
_QUANTILE_STYLE = {"color": "tab:purple", "linestyle": ":", "linewidth": 1.2}
_LIMIT_STYLE = {"color": "tab:red", "linestyle": "--", "linewidth": 1.5}


def histogram_bins(values: np.ndarray) -> np.ndarray:
    """Freedman-Diaconis edges, clamped to MIN_BINS..min(MAX_BINS, 2 sqrt(n)) bins.

    A far outlier shrinks the IQR-based width relative to the range, so the
    raw rule alone can ask for millions of bins.
    """
    lo, hi = float(np.min(values)), float(np.max(values))
    q75, q25 = np.percentile(values, [75, 25])
    width = 2.0 * float(q75 - q25) * values.size ** (-1.0 / 3.0)
    count = math.ceil((hi - lo) / width) if width > 0 else MIN_BINS
    ceiling = max(MIN_BINS, min(MAX_BINS, 2 * math.ceil(math.sqrt(values.size))))
    count = min(max(count, MIN_BINS), ceiling)
    return np.linspace(lo, hi, count + 1)


def _check_values(values: np.ndarray) -> None:
    if values.size < 2:
        raise TooFewSamples(f"a histogram needs at least 2 values, got {values.size}")
    if np.ptp(values) == 0:
        raise DegenerateRange("cannot draw a histogram of a constant series")


def _draw_distribution(ax: Axes, values: np.ndarray, lo: float, hi: float) -> None:
    ax.hist(
        values,
        bins=histogram_bins(values),
        density=True,
        color="tab:blue",
        alpha=0.45,
        edgecolor="white",
    )
    grid = np.linspace(lo, hi, DENSITY_POINTS)
    density = stats.gaussian_kde(values, bw_method="silverman")(grid)
    ax.plot(grid, density, color="tab:blue", linewidth=1.5)


def _marker(ax: Axes, x: float, name: str, style: dict) -> None:
    ax.axvline(x, gid=f"marker-{name}", **style)
    ax.text(
        x,
        1.01,
        name,
        transform=ax.get_xaxis_transform(),
        rotation=90,
        ha="center",
        va="bottom",
        fontsize=8,
    )


def _padded_range(points: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(points), max(points)
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _to_svg(fig: Figure) -> bytes:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="svg", metadata=_SVG_METADATA)
    return buffer.getvalue()


def emit_histogram_svg(
    series: MeasurementSeries,
    spec: ToleranceSpec,
    quantiles: QuantileTriple | None = None,
) -> bytes:
    """Histogram, density and vertical markers for one dimension.

    Markers carry the SVG ids marker-LSL, marker-USL, marker-M (bilateral
    specs), marker-T, marker-mean and, with quantiles, marker-P0.135,
    marker-P50 and marker-P99.865.
    """
    values = np.asarray(series.array, dtype=float)
    _check_values(values)
    mean = float(np.mean(values))

    markers: list[tuple[float, str, dict]] = []
    if spec.lsl is not None:
        markers.append((spec.lsl, "LSL", _SPEC_STYLE))
    if spec.usl is not None:
        markers.append((spec.usl, "USL", _SPEC_STYLE))
    if spec.midpoint is not None:
        markers.append((spec.midpoint, "M", _CENTER_STYLE))
    if spec.target is not None:
        markers.append((spec.target, "T", _CENTER_STYLE))
    markers.append((mean, "mean", _MEAN_STYLE))
    if quantiles is not None:
        markers += [
            (quantiles.p00135, "P0.135", _QUANTILE_STYLE),
            (quantiles.p50, "P50", _QUANTILE_STYLE),
            (quantiles.p99865, "P99.865", _QUANTILE_STYLE),
        ]

    lo, hi = _padded_range(
        [float(np.min(values)), float(np.max(values)), *(x for x, _, _ in markers)]
    )
    with rc_context(_SVG_RC):
        fig = Figure(figsize=(8, 4.5), layout="constrained")
        ax = fig.subplots()
        _draw_distribution(ax, values, lo, hi)
        for x, name, style in markers:
            _marker(ax, x, name, style)
        ax.set_xlim(lo, hi)
        ax.set_xlabel(f"measurement{f' ({spec.units})' if spec.units else ''}")
        ax.set_ylabel("density")
        return _to_svg(fig)


def emit_ratio_histogram_svg(
    values: Sequence[float] | np.ndarray,
    limits: tuple[float, float] = DEFAULT_RATIO_LIMITS,
    label: str = "Cpk/Ppk",
) -> bytes:
    """Histogram of index ratios with dashed lines (ids limit-<x>) at the limits."""
    data = np.asarray(values, dtype=float)
    _check_values(data)

    lo, hi = _padded_range([float(np.min(data)), float(np.max(data)), *limits])
    with rc_context(_SVG_RC):
        fig = Figure(figsize=(8, 4.5), layout="constrained")
        ax = fig.subplots()
        _draw_distribution(ax, data, lo, hi)
        for limit in limits:
            ax.axvline(limit, gid=f"limit-{limit:g}", **_LIMIT_STYLE)
        ax.set_xlim(lo, hi)
        ax.set_xlabel(label)
        ax.set_ylabel("density")
        return _to_svg(fig)
