"""Fourier cosine features of a label curve and their noisy versions."""
from __future__ import annotations

from dataclasses import dataclass, replace
import logging
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray
import pandas as pd
from scipy import integrate

from .const import N_FEATURES, N_TERMS
from .curvegen import LabelCurve
from .exceptions import ConfigurationError, ReportWriteError

_LOGGER = logging.getLogger(__name__)

# Harmonics evaluated per block, bounds the cosine table to a few MB.
_CHUNK = 16


@dataclass(frozen=True, eq=False)
class CosineSpectrum:
    """Coefficients a_0, a_1..a_K of the cosine series of a label curve."""

    a0: float
    coefficients: NDArray[np.float64]
    domain_length: float

    @property
    def n_terms(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True, eq=False)
class HarmonicSet:
    """Harmonic indices n_k with their coefficients, largest magnitude first."""

    indices: NDArray[np.int64]
    coefficients: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """T x N input signals aligned with the label grid."""

    rows: NDArray[np.float64]
    sigma: float = 0.0
    seed: int | None = None

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]


def _harmonic_blocks(n_terms: int):
    for start in range(1, n_terms + 1, _CHUNK):
        yield np.arange(start, min(start + _CHUNK, n_terms + 1))


def cosine_coefficients(curve: LabelCurve, n_terms: int = N_TERMS) -> CosineSpectrum:
    """
    Cosine series coefficients of L(t) on [0, M] by the composite trapezoid rule.

    The periodic closing point L(M) = L(0) is appended to the sample grid.
    """
    if n_terms < 1:
        raise ConfigurationError(f"need at least one cosine term, got {n_terms}")
    if len(curve) < 2 * n_terms:
        raise ConfigurationError(
            f"{n_terms} cosine terms need at least {2 * n_terms} samples, curve has {len(curve)}"
        )

    m = curve.domain_length
    t = np.append(curve.grid, m)
    values = np.append(curve.values, curve.values[0])

    a0 = integrate.trapezoid(values, t) / m
    coefficients = np.empty(n_terms)
    for block in _harmonic_blocks(n_terms):
        table = np.cos(np.pi * np.outer(block, t / m))
        coefficients[block - 1] = 2.0 / m * integrate.trapezoid(table * values, t, axis=1)

    _LOGGER.debug("Computed %d cosine coefficients for %s curve", n_terms, curve.name)
    return CosineSpectrum(a0=float(a0), coefficients=coefficients, domain_length=m)


def select_harmonics(spectrum: CosineSpectrum, n_features: int = N_FEATURES) -> HarmonicSet:
    """Pick the N largest-magnitude coefficients, ties going to the smaller index."""
    if not 1 <= n_features <= spectrum.n_terms:
        raise ConfigurationError(
            f"cannot select {n_features} harmonics out of {spectrum.n_terms} terms"
        )
    indices = np.arange(1, spectrum.n_terms + 1)
    order = np.lexsort((indices, -np.abs(spectrum.coefficients)))[:n_features]
    _LOGGER.debug("Selected harmonics %s", indices[order].tolist())
    return HarmonicSet(indices=indices[order], coefficients=spectrum.coefficients[order])


def synthesize_features(harmonics: HarmonicSet, grid: ArrayLike, domain_length: float) -> FeatureMatrix:
    """Noiseless signals h_k(t) = cos(n_k * pi * t / M) on the given grid."""
    t = np.asarray(grid, dtype=float)
    rows = np.cos(np.pi * np.outer(t / domain_length, harmonics.indices))
    return FeatureMatrix(rows=rows)


def add_noise(features: FeatureMatrix, sigma: float, seed: int) -> FeatureMatrix:
    """
    Add independent N(0, sigma^2) noise to every entry.

    Each feature column draws from its own stream spawned from the seed, so
    the result does not depend on the order columns are generated in.
    """
    if sigma < 0:
        raise ConfigurationError(f"noise sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return features

    streams = np.random.SeedSequence(seed).spawn(features.n_features)
    noise = np.column_stack(
        [np.random.default_rng(stream).standard_normal(features.n_samples) for stream in streams]
    )
    return replace(features, rows=features.rows + sigma * noise, sigma=float(sigma), seed=seed)


def partial_sum_reconstruction(spectrum: CosineSpectrum, grid: ArrayLike) -> NDArray[np.float64]:
    """Evaluate a_0 + sum_i a_i cos(i * pi * t / M) on a grid."""
    t = np.asarray(grid, dtype=float) / spectrum.domain_length
    total = np.full(t.shape, spectrum.a0)
    for block in _harmonic_blocks(spectrum.n_terms):
        total += spectrum.coefficients[block - 1] @ np.cos(np.pi * np.outer(block, t))
    return total


def write_columnar(path: str | Path, columns: Mapping[str, ArrayLike]) -> Path:
    """Write equal-length columns as a tab-separated table with a header row."""
    path = Path(path)
    try:
        pd.DataFrame({name: np.asarray(col) for name, col in columns.items()}).to_csv(
            path, sep="\t", index=False
        )
    except OSError as err:
        raise ReportWriteError(f"could not write {path}: {err}") from err
    return path


def feature_columns(curve: LabelCurve, features: FeatureMatrix, harmonics: HarmonicSet) -> dict:
    """Columns for inspecting a dataset: t, label and one column per harmonic."""
    columns = {"t": curve.grid, "label": curve.values}
    for k, index in enumerate(harmonics.indices):
        columns[f"h_{index}"] = features.rows[:, k]
    return columns
