"""Feedforward network with hand-derived backpropagation and Adam updates."""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
from pathlib import Path
from typing import Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import expit

from .const import (
    ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, BATCH_SIZE, EPOCHS, HOLDOUT_FRACTION,
    LAYER_SIZES, LEARNING_RATE, MODEL_FORMAT_VERSION,
)
from .curvegen import LabelCurve
from .exceptions import (
    ConfigurationError, DimensionMismatchError, MissingWeightsError, NonFiniteLossError, ReportWriteError,
)
from .losses import LossKind, LossSpec, batch_grad, loss_value
from .signals import FeatureMatrix

_LOGGER = logging.getLogger(__name__)

_SPLIT_STREAM = 1
_SHUFFLE_STREAM = 2


@dataclass(frozen=True)
class Architecture:
    """Layer widths n_1..n_L; sigmoid hidden layers and a linear output node."""

    layer_sizes: tuple[int, ...] = LAYER_SIZES

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ConfigurationError("a network needs at least an input and an output layer")
        if sizes[-1] != 1:
            raise ConfigurationError(f"the output layer must have one node, got {sizes[-1]}")
        if min(sizes) < 1:
            raise ConfigurationError(f"layer sizes must be positive, got {sizes}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return list(zip(self.layer_sizes[1:], self.layer_sizes[:-1]))


@dataclass(eq=False)
class MlpParams:
    """Weight matrices Theta_i (n_{i+1} x n_i) and bias vectors b_i (n_{i+1})."""

    weights: list[NDArray[np.float64]]
    biases: list[NDArray[np.float64]]

    @classmethod
    def zeros(cls, arch: Architecture) -> MlpParams:
        return cls(
            weights=[np.zeros(shape) for shape in arch.shapes],
            biases=[np.zeros(shape[0]) for shape in arch.shapes],
        )

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def arrays(self) -> Iterator[NDArray[np.float64]]:
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def copy(self) -> MlpParams:
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def map(self, other: MlpParams, func) -> MlpParams:
        return MlpParams(
            [func(a, b) for a, b in zip(self.weights, other.weights)],
            [func(a, b) for a, b in zip(self.biases, other.biases)],
        )

    def equals(self, other: MlpParams) -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


@dataclass(frozen=True, eq=False)
class Activations:
    """Layer activations a_1..a_L (batch-major) and pre-activations z_2..z_L."""

    a: list[NDArray[np.float64]]
    z: list[NDArray[np.float64]]

    @property
    def output(self) -> NDArray[np.float64]:
        return self.a[-1][:, 0]


@dataclass(frozen=True, eq=False)
class AdamState:
    """First and second moment estimates for every parameter array."""

    first_moment: MlpParams
    second_moment: MlpParams
    step_count: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON

    @classmethod
    def initial(cls, arch: Architecture, **kwargs) -> AdamState:
        return cls(MlpParams.zeros(arch), MlpParams.zeros(arch), **kwargs)


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch training settings."""

    learning_rate: float = LEARNING_RATE
    batch_size: int = BATCH_SIZE
    epochs: int = EPOCHS
    seed: int = 0
    shuffle: bool = True
    holdout_fraction: float = HOLDOUT_FRACTION
    layer_sizes: tuple[int, ...] = LAYER_SIZES

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning_rate must not be negative, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be at least 1, got {self.epochs}")
        if not 0 <= self.holdout_fraction < 1:
            raise ConfigurationError(f"holdout_fraction must lie in [0, 1), got {self.holdout_fraction}")
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))

    @property
    def architecture(self) -> Architecture:
        return Architecture(self.layer_sizes)


@dataclass(eq=False)
class TrainedModel:
    """Final parameters with the per-epoch loss trajectory."""

    architecture: Architecture
    params: MlpParams
    train_history: list[float] = field(default_factory=list)
    holdout_history: list[float] = field(default_factory=list)
    train_indices: NDArray[np.int64] | None = None
    holdout_indices: NDArray[np.int64] | None = None

    @property
    def final_train_loss(self) -> float:
        return self.train_history[-1] if self.train_history else float("nan")

    def predict(self, features: FeatureMatrix | ArrayLike) -> NDArray[np.float64]:
        return predict(self, features)


def init_params(arch: Architecture, seed: int) -> MlpParams:
    """Draw every weight and bias i.i.d. from N(0, 1)."""
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for rows, cols in arch.shapes:
        weights.append(rng.standard_normal((rows, cols)))
        biases.append(rng.standard_normal(rows))
    return MlpParams(weights, biases)


def forward(params: MlpParams, inputs: ArrayLike) -> Activations:
    """
    Propagate a vector or a batch of rows through the network.

    z_{i+1} = Theta_i a_i + b_i, with a sigmoid on hidden layers and the
    identity on the output layer. Every intermediate is retained.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    if x.shape[1] != params.weights[0].shape[1]:
        raise DimensionMismatchError(
            f"input width {x.shape[1]} does not match {params.weights[0].shape[1]} input nodes"
        )

    a = [x]
    z = []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        pre = a[-1] @ w.T + b
        z.append(pre)
        a.append(pre if i == last else expit(pre))
    return Activations(a=a, z=z)


def backward(params: MlpParams, activations: Activations, dj_da_l: ArrayLike) -> MlpParams:
    """
    Gradients of J with respect to every weight and bias.

    dj_da_l holds dJ/da_L per sample; for a batch-mean loss it already carries
    the 1/N factor, so per-sample contributions are summed.
    """
    if len(activations.a) != len(params.weights) + 1 or activations.a[0].shape[1] != params.weights[0].shape[1]:
        raise DimensionMismatchError("activations do not come from this network")
    delta = np.asarray(dj_da_l, dtype=float).reshape(-1, 1)
    if delta.shape[0] != activations.a[0].shape[0]:
        raise DimensionMismatchError(
            f"{delta.shape[0]} output gradients for a batch of {activations.a[0].shape[0]}"
        )

    n_layers = len(params.weights)
    grad_w = [np.empty(0)] * n_layers
    grad_b = [np.empty(0)] * n_layers
    for i in reversed(range(n_layers)):
        grad_w[i] = delta.T @ activations.a[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            hidden = activations.a[i]
            delta = (delta @ params.weights[i]) * hidden * (1.0 - hidden)
    return MlpParams(grad_w, grad_b)


def adam_step(
        state: AdamState, params: MlpParams, grads: MlpParams, lr: float
) -> tuple[AdamState, MlpParams]:
    """One bias-corrected Adam update; inputs are left untouched."""
    step = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    m = state.first_moment.map(grads, lambda m_, g: b1 * m_ + (1 - b1) * g)
    v = state.second_moment.map(grads, lambda v_, g: b2 * v_ + (1 - b2) * g * g)
    correction1 = 1 - b1 ** step
    correction2 = 1 - b2 ** step

    def update(p, m_, v_):
        return p - lr * (m_ / correction1) / (np.sqrt(v_ / correction2) + state.epsilon)

    new_params = MlpParams(
        [update(*arrays) for arrays in zip(params.weights, m.weights, v.weights)],
        [update(*arrays) for arrays in zip(params.biases, m.biases, v.biases)],
    )
    new_state = AdamState(m, v, step, b1, b2, state.epsilon)
    return new_state, new_params


def split_indices(n_samples: int, holdout_fraction: float, seed: int) -> tuple[NDArray, NDArray]:
    """Seeded shuffled train/holdout split; both index sets come back sorted."""
    n_holdout = int(round(holdout_fraction * n_samples))
    if n_holdout == 0:
        return np.arange(n_samples), np.arange(0)
    if n_holdout >= n_samples:
        raise ConfigurationError("holdout_fraction leaves no training samples")
    perm = np.random.default_rng([seed, _SPLIT_STREAM]).permutation(n_samples)
    return np.sort(perm[n_holdout:]), np.sort(perm[:n_holdout])


def _label_weights(loss: LossSpec, labels: NDArray) -> NDArray | None:
    if loss.kind is not LossKind.WES:
        return None
    if loss.weighting is None:
        raise MissingWeightsError("a wes loss must be bound to a weighting curve before training")
    return loss.weighting(labels)


def _dataset_loss(params, x, y, loss, weights) -> float:
    return loss_value(loss, forward(params, x).output, y, weights)


def train(
        features: FeatureMatrix, labels: LabelCurve | ArrayLike, loss: LossSpec, config: TrainConfig
) -> TrainedModel:
    """
    Train a fresh network with mini-batch Adam.

    The history holds the full training-set loss before the first update and
    after each epoch, with the holdout loss alongside when a holdout exists.
    """
    y_all = np.asarray(labels.values if isinstance(labels, LabelCurve) else labels, dtype=float)
    x_all = features.rows if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)
    if x_all.shape[0] != y_all.shape[0]:
        raise DimensionMismatchError(f"{x_all.shape[0]} feature rows for {y_all.shape[0]} labels")

    arch = config.architecture
    if x_all.shape[1] != arch.n_inputs:
        raise DimensionMismatchError(f"{x_all.shape[1]} features for {arch.n_inputs} input nodes")

    w_all = _label_weights(loss, y_all)
    train_idx, holdout_idx = split_indices(len(y_all), config.holdout_fraction, config.seed)
    x_train, y_train = x_all[train_idx], y_all[train_idx]
    w_train = None if w_all is None else w_all[train_idx]
    x_hold, y_hold = x_all[holdout_idx], y_all[holdout_idx]
    w_hold = None if w_all is None else w_all[holdout_idx]

    params = init_params(arch, config.seed)
    state = AdamState.initial(arch)
    shuffle_rng = np.random.default_rng([config.seed, _SHUFFLE_STREAM])

    train_history = [_dataset_loss(params, x_train, y_train, loss, w_train)]
    holdout_history = [_dataset_loss(params, x_hold, y_hold, loss, w_hold)] if len(holdout_idx) else []

    n_train = len(train_idx)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n_train) if config.shuffle else np.arange(n_train)
        for batch, start in enumerate(range(0, n_train, config.batch_size)):
            rows = order[start:start + config.batch_size]
            y = y_train[rows]
            w = None if w_train is None else w_train[rows]
            acts = forward(params, x_train[rows])
            value = loss_value(loss, acts.output, y, w)
            if not np.isfinite(value):
                raise NonFiniteLossError(epoch, batch, value)
            grads = backward(params, acts, batch_grad(loss, acts.output, y, w))
            state, params = adam_step(state, params, grads, config.learning_rate)

        train_history.append(_dataset_loss(params, x_train, y_train, loss, w_train))
        if len(holdout_idx):
            holdout_history.append(_dataset_loss(params, x_hold, y_hold, loss, w_hold))
        if not np.isfinite(train_history[-1]):
            raise NonFiniteLossError(epoch, -1, train_history[-1])
        _LOGGER.debug("Epoch %d/%d %s loss %.6g", epoch, config.epochs, loss.loss_id, train_history[-1])

    return TrainedModel(
        architecture=arch,
        params=params,
        train_history=train_history,
        holdout_history=holdout_history,
        train_indices=train_idx,
        holdout_indices=holdout_idx,
    )


def predict(model: TrainedModel, features: FeatureMatrix | ArrayLike) -> NDArray[np.float64]:
    """Network output per feature row, unclipped."""
    rows = features.rows if isinstance(features, FeatureMatrix) else features
    return forward(model.params, rows).output


def save_model(model: TrainedModel, path: str | Path) -> Path:
    """Write layer sizes, then row-major weights and biases of every layer."""
    path = Path(path)
    lines = [f"wesbench-model {MODEL_FORMAT_VERSION}", " ".join(str(n) for n in model.architecture.layer_sizes)]
    for w, b in zip(model.params.weights, model.params.biases):
        lines.append(" ".join(repr(float(v)) for v in w.ravel()))
        lines.append(" ".join(repr(float(v)) for v in b))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as err:
        raise ReportWriteError(f"could not write model to {path}: {err}") from err
    return path


def load_model(path: str | Path) -> TrainedModel:
    """Read a model written by save_model."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split()
    if header[0] != "wesbench-model" or int(header[1]) != MODEL_FORMAT_VERSION:
        raise ConfigurationError(f"{path} is not a version {MODEL_FORMAT_VERSION} wesbench model")
    arch = Architecture(tuple(int(n) for n in lines[1].split()))
    weights = []
    biases = []
    for i, (rows, cols) in enumerate(arch.shapes):
        weights.append(np.array(lines[2 + 2 * i].split(), dtype=float).reshape(rows, cols))
        biases.append(np.array(lines[3 + 2 * i].split(), dtype=float))
    return TrainedModel(architecture=arch, params=MlpParams(weights, biases))
