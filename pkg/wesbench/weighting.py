"""Label density estimation and the WES weighting curve g(x)."""
from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import ArrayLike, NDArray

from .const import PDF_BINS, POLY_DEGREE, WEIGHT_EXPORT_POINTS, WEIGHT_GRID_POINTS
from .exceptions import ConfigurationError, DegenerateRangeError, DomainError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PdfEstimate:
    """Equal-width histogram density on [0, 1]."""

    bin_centers: NDArray[np.float64]
    densities: NDArray[np.float64]
    bin_width: float


@dataclass(frozen=True, eq=False)
class PdfFit:
    """Least-squares polynomial approximation f_hat of a label density."""

    polynomial: Polynomial
    residual_rms: float

    @property
    def degree(self) -> int:
        return self.polynomial.degree()


@dataclass(frozen=True, eq=False)
class WeightingCurve:
    """
    g(x) = (beta - c) * (1 - f_hat(x) / f_max) + c on [0, 1].

    f_hat is clamped to [0, f_max], so g stays inside [c, beta].
    """

    fit: PdfFit
    f_max: float
    argmax: float
    beta: float
    c: float = 1.0

    @property
    def poly_coeffs(self) -> NDArray[np.float64]:
        return self.fit.polynomial.coef

    def density(self, x: ArrayLike) -> NDArray[np.float64]:
        return np.clip(self.fit.polynomial(np.asarray(x, dtype=float)), 0.0, self.f_max)

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        return (self.beta - self.c) * (1.0 - self.density(x) / self.f_max) + self.c


def empirical_pdf(labels: ArrayLike, bins: int = PDF_BINS) -> PdfEstimate:
    """Histogram density of the labels on [0, 1], rightmost bin closed."""
    values = np.asarray(labels, dtype=float)
    if values.size == 0:
        raise DomainError("cannot estimate the density of an empty label set")
    if bins < 2:
        raise ConfigurationError(f"density estimation needs at least 2 bins, got {bins}")

    densities, edges = np.histogram(values, bins=bins, range=(0.0, 1.0), density=True)
    return PdfEstimate(
        bin_centers=0.5 * (edges[:-1] + edges[1:]),
        densities=densities,
        bin_width=float(edges[1] - edges[0]),
    )


def fit_pdf_polynomial(pdf: PdfEstimate, degree: int = POLY_DEGREE) -> PdfFit:
    """Ordinary least-squares polynomial fit of densities against bin centers."""
    if degree < 1:
        raise ConfigurationError(f"polynomial degree must be at least 1, got {degree}")
    if len(pdf.bin_centers) <= degree:
        raise ConfigurationError(
            f"{len(pdf.bin_centers)} bins cannot determine a degree {degree} polynomial"
        )

    # Fitting on the mapped window [-1, 1] keeps the degree-12 design well conditioned.
    polynomial, (_, rank, _, _) = Polynomial.fit(
        pdf.bin_centers, pdf.densities, degree, domain=[0.0, 1.0], full=True
    )
    if rank < degree + 1:
        raise ConfigurationError(f"rank-deficient design for degree {degree} (rank {rank})")

    residual_rms = float(np.sqrt(np.mean((polynomial(pdf.bin_centers) - pdf.densities) ** 2)))
    _LOGGER.debug("Fitted degree %d density polynomial, residual RMS %.4g", degree, residual_rms)
    return PdfFit(polynomial=polynomial, residual_rms=residual_rms)


def label_range_constant(labels: ArrayLike) -> float:
    """c = 1 / (y_max - y_min); 1 for uniformly normalized labels."""
    values = np.asarray(labels, dtype=float)
    spread = values.max() - values.min()
    if not spread > 0:
        raise DegenerateRangeError("labels have zero range")
    return float(1.0 / spread)


def weighting_curve(fit: PdfFit, beta: float, c: float = 1.0) -> WeightingCurve:
    """Build g(x) from a density fit; f_max is taken over the clamped fit."""
    if beta < c:
        raise ConfigurationError(f"beta ({beta}) must not be smaller than c ({c})")

    grid = np.linspace(0.0, 1.0, WEIGHT_GRID_POINTS)
    raw = fit.polynomial(grid)
    if np.any(raw < 0):
        _LOGGER.warning(
            "Density polynomial dips below zero on %d of %d grid points; clamping",
            int(np.count_nonzero(raw < 0)), len(grid),
        )
    clamped = np.clip(raw, 0.0, None)
    peak = int(np.argmax(clamped))
    f_max = float(clamped[peak])
    if not f_max > 0:
        raise ConfigurationError("fitted density is nowhere positive on [0, 1]")

    return WeightingCurve(fit=fit, f_max=f_max, argmax=float(grid[peak]), beta=float(beta), c=float(c))


def build_weighting_curve(
        labels: ArrayLike, beta: float, bins: int = PDF_BINS, degree: int = POLY_DEGREE
) -> WeightingCurve:
    """Estimate, fit and rescale the label density in one go."""
    fit = fit_pdf_polynomial(empirical_pdf(labels, bins), degree)
    return weighting_curve(fit, beta, label_range_constant(labels))


def eval_weight(curve: WeightingCurve, x: ArrayLike) -> float | NDArray[np.float64]:
    """Evaluate g at one label value or an array of them."""
    result = curve(x)
    if np.ndim(result) == 0:
        return float(result)
    return result


def weighting_columns(curve: WeightingCurve, points: int = WEIGHT_EXPORT_POINTS) -> dict:
    """(x, f_hat, g) columns for plotting a weighting curve."""
    x = np.linspace(0.0, 1.0, points)
    return {"x": x, "f_hat": curve.density(x), "g": curve(x)}
