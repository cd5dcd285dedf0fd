"""Error metrics for comparing predictions with labels."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import StrEnum
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import OVERLAP_BINS, TAIL_PERCENTILE, TAIL_PROB
from .exceptions import (
    ConfigurationError, DimensionMismatchError, DomainError, EmptyRegionError,
    UndefinedCorrelationError,
)

_LOGGER = logging.getLogger(__name__)


class TailSide(StrEnum):
    LEFT = "left"
    RIGHT = "right"


class TailCondition(StrEnum):
    """Which series decides tail membership."""

    LABEL = "label"
    PREDICTION = "prediction"


@dataclass(frozen=True)
class MetricReport:
    """All evaluation metrics of one prediction run."""

    rmse: float
    cc: float
    overlap: float
    extreme_rmse: float
    l1: float
    l2: float
    p1_tail_mean: float
    p99_tail_mean: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def rounded(self, digits: int = 6) -> dict[str, float]:
        """Values at the given number of significant digits, for printing."""
        return {key: float(f"{value:.{digits}g}") for key, value in asdict(self).items()}


def _pair(preds: ArrayLike, labels: ArrayLike) -> tuple[NDArray, NDArray]:
    preds = np.asarray(preds, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if preds.shape != labels.shape:
        raise DimensionMismatchError(f"predictions {preds.shape} and labels {labels.shape} differ")
    if preds.size == 0:
        raise DimensionMismatchError("metrics need at least one sample")
    return preds, labels


def rmse(preds: ArrayLike, labels: ArrayLike) -> float:
    """Root mean squared error."""
    preds, labels = _pair(preds, labels)
    return float(np.sqrt(np.mean((preds - labels) ** 2)))


def pearson_cc(preds: ArrayLike, labels: ArrayLike) -> float:
    """Sample Pearson correlation coefficient."""
    preds, labels = _pair(preds, labels)
    dp = preds - preds.mean()
    dl = labels - labels.mean()
    norm = np.sqrt(np.sum(dp * dp) * np.sum(dl * dl))
    if not norm > 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant series")
    return float(np.clip(np.sum(dp * dl) / norm, -1.0, 1.0))


def overlap_area(sample_a: ArrayLike, sample_b: ArrayLike, bins: int = OVERLAP_BINS) -> float:
    """
    Area shared by the histogram densities of two samples.

    Both histograms use the same equal-width bins spanning the pooled range.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("overlap needs two non-empty samples")
    if bins < 1:
        raise ConfigurationError(f"overlap needs at least one bin, got {bins}")

    low = min(a.min(), b.min())
    high = max(a.max(), b.max())
    if not high > low:
        # Zero pooled range: every value in both samples is the same.
        return 1.0
    edges = np.linspace(low, high, bins + 1)
    p, _ = np.histogram(a, bins=edges, density=True)
    q, _ = np.histogram(b, bins=edges, density=True)
    return float(np.clip(np.sum(np.minimum(p, q)) * (edges[1] - edges[0]), 0.0, 1.0))


def extreme_thresholds(labels: ArrayLike, tail_prob: float = TAIL_PROB) -> tuple[float, float]:
    """(l1, l2): the tail_prob and 1 - tail_prob empirical label quantiles."""
    if not 0 < tail_prob < 0.5:
        raise ConfigurationError(f"tail probability must lie in (0, 0.5), got {tail_prob}")
    values = np.asarray(labels, dtype=float)
    if values.size == 0:
        raise EmptyRegionError("thresholds of an empty label set")
    l1, l2 = np.quantile(values, [tail_prob, 1.0 - tail_prob])
    return float(l1), float(l2)


def extreme_rmse(preds: ArrayLike, labels: ArrayLike, l1: float, l2: float) -> float:
    """RMSE over the samples whose label lies in [0, l1] or [l2, 1]."""
    preds, labels = _pair(preds, labels)
    region = (labels <= l1) | (labels >= l2)
    if not np.any(region):
        raise EmptyRegionError(f"no labels fall inside [.., {l1}] or [{l2}, ..]")
    return rmse(preds[region], labels[region])


def tail_mean(
        preds: ArrayLike,
        labels: ArrayLike,
        percentile: float = TAIL_PERCENTILE,
        side: TailSide | str = TailSide.RIGHT,
        condition: TailCondition | str = TailCondition.LABEL,
) -> float:
    """
    Mean prediction over one tail of the distribution.

    The tail is the part of the conditioning series at or below its
    percentile quantile (left) or at or above its 1 - percentile quantile
    (right).
    """
    preds, labels = _pair(preds, labels)
    if not 0 < percentile < 0.5:
        raise ConfigurationError(f"tail percentile must lie in (0, 0.5), got {percentile}")
    reference = labels if TailCondition(condition) is TailCondition.LABEL else preds
    if TailSide(side) is TailSide.LEFT:
        members = reference <= np.quantile(reference, percentile)
    else:
        members = reference >= np.quantile(reference, 1.0 - percentile)
    if not np.any(members):
        raise EmptyRegionError(f"the {side} tail at {percentile} is empty")
    return float(np.mean(preds[members]))


def evaluate(
        preds: ArrayLike,
        labels: ArrayLike,
        thresholds: tuple[float, float] | None = None,
        tail_prob: float = TAIL_PROB,
        tail_percentile: float = TAIL_PERCENTILE,
        overlap_bins: int = OVERLAP_BINS,
        condition: TailCondition | str = TailCondition.LABEL,
) -> MetricReport:
    """Compute the full metric report; thresholds default to those of the labels."""
    preds, labels = _pair(preds, labels)
    l1, l2 = thresholds if thresholds is not None else extreme_thresholds(labels, tail_prob)
    try:
        cc = pearson_cc(preds, labels)
    except UndefinedCorrelationError:
        _LOGGER.warning("Constant predictions, correlation reported as NaN")
        cc = float("nan")
    return MetricReport(
        rmse=rmse(preds, labels),
        cc=cc,
        overlap=overlap_area(labels, preds, overlap_bins),
        extreme_rmse=extreme_rmse(preds, labels, l1, l2),
        l1=l1,
        l2=l2,
        p1_tail_mean=tail_mean(preds, labels, tail_percentile, TailSide.LEFT, condition),
        p99_tail_mean=tail_mean(preds, labels, tail_percentile, TailSide.RIGHT, condition),
    )
