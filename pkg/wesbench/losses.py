"""Regression losses and their derivatives with respect to the prediction."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import StrEnum
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import ConfigurationError, DimensionMismatchError, MissingWeightsError
from .weighting import WeightingCurve

_LOGGER = logging.getLogger(__name__)
_LN2 = np.log(2.0)


class LossKind(StrEnum):
    """Loss families."""

    MSE = "mse"
    MAE = "mae"
    HUBER = "huber"
    LOGCOSH = "logcosh"
    QUANTILE = "quantile"
    WES = "wes"

    @property
    def takes_param(self) -> bool:
        return self in (LossKind.HUBER, LossKind.QUANTILE, LossKind.WES)


@dataclass(frozen=True)
class LossSpec:
    """
    A loss family with its hyperparameter.

    param is delta for Huber, gamma for quantile and beta for WES. A WES spec
    parsed from an id carries no weighting curve until bind() supplies one.
    """

    kind: LossKind
    param: float | None = None
    weighting: WeightingCurve | None = None

    def __post_init__(self):
        kind = LossKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind.takes_param:
            if self.param is None and not (kind is LossKind.WES and self.weighting is not None):
                raise ConfigurationError(f"loss '{kind}' needs a parameter")
            if self.param is None:
                object.__setattr__(self, "param", self.weighting.beta)
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise ConfigurationError(f"loss '{kind}' takes no parameter")

        if kind is LossKind.HUBER and not self.param > 0:
            raise ConfigurationError(f"huber delta must be positive, got {self.param}")
        if kind is LossKind.QUANTILE and not 0 < self.param < 1:
            raise ConfigurationError(f"quantile gamma must lie in (0, 1), got {self.param}")
        if kind is LossKind.WES and not self.param >= 1:
            raise ConfigurationError(f"wes beta must be at least 1, got {self.param}")

    @classmethod
    def from_id(cls, loss_id: str, weighting: WeightingCurve | None = None) -> LossSpec:
        """Parse ids such as 'mse', 'huber:0.5', 'quantile:0.25' or 'wes:8.0'."""
        name, _, value = loss_id.strip().lower().partition(":")
        try:
            kind = LossKind(name)
        except ValueError:
            raise ConfigurationError(f"unknown loss '{loss_id}'") from None
        try:
            param = float(value) if value else None
        except ValueError:
            raise ConfigurationError(f"bad parameter in loss '{loss_id}'") from None
        return cls(kind, param, weighting)

    @classmethod
    def wes(cls, weighting: WeightingCurve) -> LossSpec:
        return cls(LossKind.WES, weighting.beta, weighting)

    @property
    def loss_id(self) -> str:
        if self.param is None:
            return str(self.kind)
        return f"{self.kind}:{self.param!r}"

    @property
    def beta(self) -> float | None:
        return self.param if self.kind is LossKind.WES else None

    def bind(self, weighting: WeightingCurve) -> LossSpec:
        """Attach the weighting curve a WES spec evaluates g with."""
        return replace(self, weighting=weighting)


def _arrays(preds: ArrayLike, labels: ArrayLike) -> tuple[NDArray, NDArray]:
    preds = np.asarray(preds, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if preds.shape != labels.shape:
        raise DimensionMismatchError(f"predictions {preds.shape} and labels {labels.shape} differ")
    return preds, labels


def _weights(spec: LossSpec, labels: NDArray, weights: ArrayLike | None) -> NDArray:
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != labels.shape:
            raise DimensionMismatchError("weights must match labels in shape")
        return weights
    if spec.weighting is None:
        raise MissingWeightsError("the wes loss needs g(y) weights or a weighting curve")
    return spec.weighting(labels)


def elementwise_loss(
        spec: LossSpec, preds: ArrayLike, labels: ArrayLike, weights: ArrayLike | None = None
) -> NDArray[np.float64]:
    """Per-sample loss values."""
    preds, labels = _arrays(preds, labels)
    e = preds - labels
    match spec.kind:
        case LossKind.MSE:
            return e * e
        case LossKind.MAE:
            return np.abs(e)
        case LossKind.HUBER:
            a = np.abs(e)
            delta = spec.param
            return np.where(a <= delta, 0.5 * e * e, delta * a - 0.5 * delta * delta)
        case LossKind.LOGCOSH:
            a = np.abs(e)
            return a + np.log1p(np.exp(-2.0 * a)) - _LN2
        case LossKind.QUANTILE:
            gamma = spec.param
            return np.where(e > 0, (1.0 - gamma) * e, -gamma * e)
        case LossKind.WES:
            return 0.5 * e * e * _weights(spec, labels, weights)


def loss_value(
        spec: LossSpec, preds: ArrayLike, labels: ArrayLike, weights: ArrayLike | None = None
) -> float:
    """Batch-mean loss over equal-length predictions and labels."""
    values = elementwise_loss(spec, preds, labels, weights)
    if values.size == 0:
        raise DimensionMismatchError("loss of an empty batch")
    return float(np.mean(values))


def loss_grad(
        spec: LossSpec, pred: ArrayLike, label: ArrayLike, weight: ArrayLike | None = None
) -> float | NDArray[np.float64]:
    """
    Derivative of the per-sample loss with respect to the prediction.

    Kinks of MAE and quantile take the zero subgradient.
    """
    preds, labels = _arrays(pred, label)
    e = preds - labels
    match spec.kind:
        case LossKind.MSE:
            grad = 2.0 * e
        case LossKind.MAE:
            grad = np.sign(e)
        case LossKind.HUBER:
            delta = spec.param
            grad = np.where(np.abs(e) <= delta, e, delta * np.sign(e))
        case LossKind.LOGCOSH:
            grad = np.tanh(e)
        case LossKind.QUANTILE:
            gamma = spec.param
            grad = np.where(e > 0, 1.0 - gamma, np.where(e < 0, -gamma, 0.0))
        case LossKind.WES:
            grad = e * _weights(spec, labels, weight)
    if np.ndim(grad) == 0:
        return float(grad)
    return grad


def batch_grad(
        spec: LossSpec, preds: ArrayLike, labels: ArrayLike, weights: ArrayLike | None = None
) -> NDArray[np.float64]:
    """dJ/d(y_hat_i) of the batch-mean loss: per-sample derivative over N."""
    grad = np.atleast_1d(loss_grad(spec, preds, labels, weights))
    return grad / grad.size
