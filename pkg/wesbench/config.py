"""Configuration loading and validation for benchmark sweeps."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import hashlib
import json
import logging
import os
from pathlib import Path
import tomllib
from typing import Any

import voluptuous as vol
from voluptuous.humanize import humanize_error

from .const import (
    BATCH_SIZE, BENCHMARK_LOSSES, BETAS, DOMAIN_LENGTH, ENSEMBLE_SIZE, ENV_WORKERS, EPOCHS,
    HOLDOUT_FRACTION, LAYER_SIZES, LEARNING_RATE, MASTER_SEED, N_FEATURES, N_POINTS, N_TERMS,
    OUTPUT_DIR, OVERLAP_BINS, PAIR_REPEATS, PAPER_ENSEMBLE_SIZE, PDF_BINS, POLY_DEGREE, SIGMAS,
    TAIL_PERCENTILE, TAIL_PROB, WES_FAMILY,
)
from .curvegen import DistributionKind
from .exceptions import ConfigurationError
from .losses import LossKind, LossSpec
from .metrics import TailCondition
from .network import TrainConfig

_LOGGER = logging.getLogger(__name__)


def _loss_id(value: Any) -> str:
    text = str(value).strip().lower()
    if text == WES_FAMILY:
        return text
    try:
        return LossSpec.from_id(text).loss_id
    except ConfigurationError as err:
        raise vol.Invalid(str(err)) from None


_POSITIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=1))
_NON_NEGATIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0))

EXPERIMENT_SCHEMA = vol.Schema(
    {
        vol.Optional("distributions", default=[k.value for k in DistributionKind]): vol.All(
            [vol.In([k.value for k in DistributionKind])], vol.Length(min=1)
        ),
        vol.Optional("sigmas", default=list(SIGMAS)): vol.All([_NON_NEGATIVE_FLOAT], vol.Length(min=1)),
        vol.Optional("betas", default=list(BETAS)): vol.All(
            [vol.All(vol.Coerce(float), vol.Range(min=1))], vol.Length(min=1)
        ),
        vol.Optional("losses", default=[*BENCHMARK_LOSSES, WES_FAMILY]): vol.All([_loss_id], vol.Length(min=1)),
        vol.Optional("ensemble_size", default=ENSEMBLE_SIZE): _POSITIVE_INT,
        vol.Optional("master_seed", default=MASTER_SEED): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional("fresh_noise_per_member", default=True): bool,
        vol.Optional("output_dir", default=OUTPUT_DIR): str,
    }
)
CURVE_SCHEMA = vol.Schema(
    {
        vol.Optional("n_points", default=N_POINTS): vol.All(vol.Coerce(int), vol.Range(min=2)),
        vol.Optional("pair_repeats", default=PAIR_REPEATS): _POSITIVE_INT,
        vol.Optional("domain_length", default=DOMAIN_LENGTH): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional("n_terms", default=N_TERMS): _POSITIVE_INT,
        vol.Optional("n_features", default=N_FEATURES): _POSITIVE_INT,
    }
)
ESTIMATION_SCHEMA = vol.Schema(
    {
        vol.Optional("pdf_bins", default=PDF_BINS): vol.All(vol.Coerce(int), vol.Range(min=2)),
        vol.Optional("overlap_bins", default=OVERLAP_BINS): _POSITIVE_INT,
        vol.Optional("poly_degree", default=POLY_DEGREE): _POSITIVE_INT,
        vol.Optional("tail_prob", default=TAIL_PROB): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=0.5, min_included=False, max_included=False)
        ),
        vol.Optional("tail_percentile", default=TAIL_PERCENTILE): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=0.5, min_included=False, max_included=False)
        ),
        vol.Optional("tail_condition", default=TailCondition.LABEL.value): vol.In(
            [c.value for c in TailCondition]
        ),
    }
)
TRAIN_SCHEMA = vol.Schema(
    {
        vol.Optional("learning_rate", default=LEARNING_RATE): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional("batch_size", default=BATCH_SIZE): _POSITIVE_INT,
        vol.Optional("epochs", default=EPOCHS): _POSITIVE_INT,
        vol.Optional("shuffle", default=True): bool,
        vol.Optional("holdout_fraction", default=HOLDOUT_FRACTION): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, max_included=False)
        ),
        vol.Optional("layer_sizes", default=list(LAYER_SIZES)): vol.All([_POSITIVE_INT], vol.Length(min=2)),
    }
)
CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional("experiment", default={}): EXPERIMENT_SCHEMA,
        vol.Optional("curve", default={}): CURVE_SCHEMA,
        vol.Optional("estimation", default={}): ESTIMATION_SCHEMA,
        vol.Optional("train", default={}): TRAIN_SCHEMA,
    }
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines the artifacts of one sweep."""

    distributions: tuple[DistributionKind, ...] = tuple(DistributionKind)
    sigmas: tuple[float, ...] = SIGMAS
    betas: tuple[float, ...] = BETAS
    losses: tuple[str, ...] = (*BENCHMARK_LOSSES, WES_FAMILY)
    ensemble_size: int = ENSEMBLE_SIZE
    master_seed: int = MASTER_SEED
    fresh_noise_per_member: bool = True
    output_dir: Path = Path(OUTPUT_DIR)
    n_points: int = N_POINTS
    pair_repeats: int = PAIR_REPEATS
    domain_length: float = DOMAIN_LENGTH
    n_terms: int = N_TERMS
    n_features: int = N_FEATURES
    pdf_bins: int = PDF_BINS
    overlap_bins: int = OVERLAP_BINS
    poly_degree: int = POLY_DEGREE
    tail_prob: float = TAIL_PROB
    tail_percentile: float = TAIL_PERCENTILE
    tail_condition: TailCondition = TailCondition.LABEL
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        object.__setattr__(self, "distributions", tuple(DistributionKind(d) for d in self.distributions))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "losses", tuple(self.losses))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "tail_condition", TailCondition(self.tail_condition))
        if self.ensemble_size < 1:
            raise ConfigurationError("ensemble_size must be at least 1")
        if any(s < 0 for s in self.sigmas):
            raise ConfigurationError("noise levels must be non-negative")
        if any(b < 1 for b in self.betas):
            raise ConfigurationError("beta values must be at least c = 1")
        if self.train.layer_sizes[0] != self.n_features:
            raise ConfigurationError(
                f"input layer has {self.train.layer_sizes[0]} nodes but {self.n_features} features are extracted"
            )

    def loss_grid(self) -> list[tuple[str, float | None]]:
        """(loss id, beta) pairs, with the bare 'wes' family expanded over every beta."""
        grid = []
        for loss_id in self.losses:
            if loss_id == WES_FAMILY:
                grid.extend((LossSpec(LossKind.WES, beta).loss_id, beta) for beta in self.betas)
            else:
                spec = LossSpec.from_id(loss_id)
                grid.append((spec.loss_id, spec.beta))
        return list(dict.fromkeys(grid))

    def paper_scale(self) -> ExperimentConfig:
        return replace(self, ensemble_size=PAPER_ENSEMBLE_SIZE)


def validate_config(raw: dict[str, Any]) -> dict[str, Any]:
    """Apply defaults and range checks to a raw config mapping."""
    try:
        return CONFIG_SCHEMA(raw)
    except vol.Invalid as err:
        raise ConfigurationError(humanize_error(raw, err)) from err


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    data = validate_config(raw)
    train = data["train"]
    return ExperimentConfig(
        **data["experiment"],
        **data["curve"],
        **data["estimation"],
        train=TrainConfig(
            learning_rate=train["learning_rate"],
            batch_size=train["batch_size"],
            epochs=train["epochs"],
            shuffle=train["shuffle"],
            holdout_fraction=train["holdout_fraction"],
            layer_sizes=tuple(train["layer_sizes"]),
        ),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a TOML sweep config with [experiment], [curve], [estimation] and [train] sections."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as err:
        raise ConfigurationError(f"config file {path} is not valid TOML: {err}") from err
    _LOGGER.debug("Loaded config from %s", path)
    return config_from_dict(raw)


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    """The effective config in the sectioned layout of the config file."""
    train = config.train
    return {
        "experiment": {
            "distributions": [str(d) for d in config.distributions],
            "sigmas": list(config.sigmas),
            "betas": list(config.betas),
            "losses": list(config.losses),
            "ensemble_size": config.ensemble_size,
            "master_seed": config.master_seed,
            "fresh_noise_per_member": config.fresh_noise_per_member,
            "output_dir": str(config.output_dir),
        },
        "curve": {
            "n_points": config.n_points,
            "pair_repeats": config.pair_repeats,
            "domain_length": config.domain_length,
            "n_terms": config.n_terms,
            "n_features": config.n_features,
        },
        "estimation": {
            "pdf_bins": config.pdf_bins,
            "overlap_bins": config.overlap_bins,
            "poly_degree": config.poly_degree,
            "tail_prob": config.tail_prob,
            "tail_percentile": config.tail_percentile,
            "tail_condition": str(config.tail_condition),
        },
        "train": {
            "learning_rate": train.learning_rate,
            "batch_size": train.batch_size,
            "epochs": train.epochs,
            "shuffle": train.shuffle,
            "holdout_fraction": train.holdout_fraction,
            "layer_sizes": list(train.layer_sizes),
        },
    }


def config_hash(config: ExperimentConfig) -> str:
    """Stable digest of everything that shapes the results; the output directory is left out."""
    data = config_to_dict(config)
    del data["experiment"]["output_dir"]
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(canonical.encode(), digest_size=8).hexdigest()


def default_workers() -> int:
    """Worker count from the environment, 1 when unset."""
    value = os.environ.get(ENV_WORKERS)
    if value is None:
        return 1
    try:
        workers = int(value)
    except ValueError:
        raise ConfigurationError(f"{ENV_WORKERS} must be an integer, got {value!r}") from None
    if workers < 1:
        raise ConfigurationError(f"{ENV_WORKERS} must be at least 1, got {workers}")
    return workers
