"""Label curve generation from inverse cumulative distribution functions."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .const import DOMAIN_LENGTH, N_POINTS, PAIR_REPEATS
from .exceptions import ConfigurationError, DegenerateRangeError, DomainError

_LOGGER = logging.getLogger(__name__)

# Rational approximation of the standard normal quantile (Acklam), accurate
# to about 1e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_P_HIGH = 1 - _P_LOW
_SQRT_2PI = np.sqrt(2 * np.pi)


class DistributionKind(StrEnum):
    """Shape of the label distribution."""

    UNIMODAL = "unimodal"
    SKEWED_UNIMODAL = "skewed_unimodal"
    BIMODAL = "bimodal"
    SKEWED_BIMODAL = "skewed_bimodal"

    @property
    def is_bimodal(self) -> bool:
        return self in (DistributionKind.BIMODAL, DistributionKind.SKEWED_BIMODAL)

    @property
    def is_skewed(self) -> bool:
        return self in (DistributionKind.SKEWED_UNIMODAL, DistributionKind.SKEWED_BIMODAL)


@dataclass(frozen=True, eq=False)
class BasisCurve:
    """One basis segment of a label curve."""

    values: NDArray[np.float64]
    kind: DistributionKind

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class LabelCurve:
    """Normalized target series L(t) on the uniform grid t_j = j*M/T."""

    values: NDArray[np.float64]
    kind: DistributionKind | None
    domain_length: float = DOMAIN_LENGTH
    period: int | None = field(default=None)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def name(self) -> str:
        return "external" if self.kind is None else str(self.kind)

    @property
    def grid(self) -> NDArray[np.float64]:
        return np.arange(len(self.values)) * (self.domain_length / len(self.values))


def _acklam(p: NDArray[np.float64]) -> NDArray[np.float64]:
    x = np.empty_like(p)

    low = p < _P_LOW
    if np.any(low):
        q = np.sqrt(-2 * np.log(p[low]))
        x[low] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
                 ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)

    high = p > _P_HIGH
    if np.any(high):
        q = np.sqrt(-2 * np.log1p(-p[high]))
        x[high] = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
                  ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)

    mid = ~(low | high)
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        x[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
                 (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1)
    return x


def inverse_normal_cdf(p: ArrayLike, mean: float = 0.0, sd: float = 1.0) -> float | NDArray[np.float64]:
    """
    Quantile function of N(mean, sd^2).

    The rational approximation is refined by one Newton step against the
    scipy error function, which brings the absolute error well below 1e-9.

    :param p: probability or array of probabilities, each strictly inside (0, 1)
    :param mean: distribution mean
    :param sd: standard deviation, strictly positive
    :return: the quantile, a float for scalar input
    """
    if not sd > 0:
        raise DomainError(f"standard deviation must be positive, got {sd}")
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise DomainError("probabilities must lie strictly inside (0, 1)")

    flat = np.atleast_1d(p_arr).ravel()
    x = _acklam(flat)
    # Newton step; the upper tail works on the complement to keep precision.
    upper = x > 0
    err = np.where(upper, (1 - flat) - 0.5 * special.erfc(x / np.sqrt(2)),
                   0.5 * special.erfc(-x / np.sqrt(2)) - flat)
    x = x - err * _SQRT_2PI * np.exp(0.5 * x * x)

    result = mean + sd * x.reshape(p_arr.shape)
    if result.ndim == 0:
        return float(result)
    return result


def inverse_lognormal_cdf(p: ArrayLike, mu: float = 0.0, sd: float = 1.0) -> float | NDArray[np.float64]:
    """Quantile function of ln N(mu, sd^2)."""
    return np.exp(inverse_normal_cdf(p, mu, sd))


def _quantile_grid(n: int) -> NDArray[np.float64]:
    return (np.arange(n) + 0.5) / n


def generate_basis(kind: DistributionKind, n_points: int = N_POINTS) -> BasisCurve:
    """
    Build the basis segment of a label curve.

    Unimodal kinds sample one inverse CDF on the midpoint grid; bimodal kinds
    concatenate the sd=1 component and the sd=1/2 component, each on its own
    half-length grid.
    """
    kind = DistributionKind(kind)
    if n_points < 2:
        raise ConfigurationError(f"a basis curve needs at least 2 points, got {n_points}")
    if kind.is_bimodal and n_points % 2:
        raise ConfigurationError(f"bimodal basis curves need an even point count, got {n_points}")

    quantile = inverse_lognormal_cdf if kind.is_skewed else inverse_normal_cdf
    if kind.is_bimodal:
        grid = _quantile_grid(n_points // 2)
        values = np.concatenate([quantile(grid, 0.0, 1.0), quantile(grid, 0.0, 0.5)])
    else:
        values = quantile(_quantile_grid(n_points), 0.0, 1.0)

    _LOGGER.debug("Generated %s basis with %d points", kind, n_points)
    return BasisCurve(values=np.asarray(values, dtype=float), kind=kind)


def uniform_normalize(series: ArrayLike) -> NDArray[np.float64]:
    """Affinely map a series onto [0, 1] with exact extrema."""
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise DegenerateRangeError("cannot normalize an empty series")
    low, high = values.min(), values.max()
    if not high > low:
        raise DegenerateRangeError(f"series has zero range (all values equal {low})")
    return (values - low) / (high - low)


def build_label_curve(
        basis: BasisCurve, pair_repeats: int = PAIR_REPEATS, domain_length: float = DOMAIN_LENGTH
) -> LabelCurve:
    """Tile the mirrored basis pair and normalize it into a label curve."""
    if pair_repeats < 1:
        raise ConfigurationError(f"pair_repeats must be at least 1, got {pair_repeats}")
    if not domain_length > 0:
        raise ConfigurationError(f"domain_length must be positive, got {domain_length}")

    pair = np.concatenate([basis.values, basis.values[::-1]])
    values = uniform_normalize(np.tile(pair, pair_repeats))
    _LOGGER.debug("Built %s label curve of %d samples", basis.kind, len(values))
    return LabelCurve(values=values, kind=basis.kind, domain_length=float(domain_length), period=len(pair))


def default_label_curve(
        kind: DistributionKind,
        n_points: int = N_POINTS,
        pair_repeats: int = PAIR_REPEATS,
        domain_length: float = DOMAIN_LENGTH,
) -> LabelCurve:
    """Generate the label curve of one distribution kind."""
    return build_label_curve(generate_basis(kind, n_points), pair_repeats, domain_length)
