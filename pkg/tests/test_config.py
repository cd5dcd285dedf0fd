from pathlib import Path

import pytest

from wesbench.config import (
    ExperimentConfig, config_from_dict, config_hash, config_to_dict, default_workers, load_config, validate_config,
)
from wesbench.const import BENCHMARK_LOSSES, BETAS, ENSEMBLE_SIZE, PAPER_ENSEMBLE_SIZE, SIGMAS
from wesbench.curvegen import DistributionKind
from wesbench.exceptions import ConfigurationError
from wesbench.metrics import TailCondition

SWEEP_TOML = """
[experiment]
distributions = ["bimodal"]
sigmas = [0.02, 0.04]
betas = [2, 4.5]
losses = ["mse", "huber:5", "wes"]
ensemble_size = 3
master_seed = 42
output_dir = "out"

[curve]
n_points = 100
pair_repeats = 2
n_terms = 30

[estimation]
tail_condition = "prediction"

[train]
epochs = 4
batch_size = 32
"""


def test_empty_config_gets_defaults():
    config = config_from_dict({})
    assert config.distributions == tuple(DistributionKind)
    assert config.sigmas == SIGMAS
    assert config.betas == BETAS
    assert config.losses == (*BENCHMARK_LOSSES, "wes")
    assert config.ensemble_size == ENSEMBLE_SIZE
    assert config.train.epochs == 300
    assert config == ExperimentConfig()


def test_load_config(tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text(SWEEP_TOML)
    config = load_config(path)
    assert config.distributions == (DistributionKind.BIMODAL,)
    assert config.betas == (2.0, 4.5)
    assert config.losses == ("mse", "huber:5.0", "wes")
    assert config.output_dir == Path("out")
    assert config.tail_condition is TailCondition.PREDICTION
    assert config.train.epochs == 4
    assert config.train.batch_size == 32
    assert config.n_terms == 30


def test_loss_grid_expands_wes_over_betas(tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text(SWEEP_TOML)
    grid = load_config(path).loss_grid()
    assert grid == [("mse", None), ("huber:5.0", None), ("wes:2.0", 2.0), ("wes:4.5", 4.5)]


def test_default_grid_size():
    # 8 benchmark losses plus one WES run per beta.
    assert len(ExperimentConfig().loss_grid()) == 8 + 15


@pytest.mark.parametrize(
    "raw",
    [
        {"experiment": {"sigmas": [-0.1]}},
        {"experiment": {"betas": [0.5]}},
        {"experiment": {"ensemble_size": 0}},
        {"experiment": {"distributions": ["trimodal"]}},
        {"experiment": {"losses": ["cubic"]}},
        {"experiment": {"unknown_key": 1}},
        {"train": {"learning_rate": 0}},
        {"train": {"holdout_fraction": 1.0}},
        {"estimation": {"tail_condition": "both"}},
        {"extra_section": {}},
    ],
)
def test_invalid_values_rejected(raw):
    with pytest.raises(ConfigurationError):
        validate_config(raw)


def test_input_width_must_match_features():
    with pytest.raises(ConfigurationError):
        config_from_dict({"curve": {"n_features": 4}})
    config = config_from_dict({"curve": {"n_features": 4}, "train": {"layer_sizes": [4, 10, 1]}})
    assert config.train.layer_sizes == (4, 10, 1)


def test_missing_and_broken_files(tmp_path):
    with pytest.raises(ConfigurationError, match="does not exist"):
        load_config(tmp_path / "nope.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[experiment\nsigmas = ")
    with pytest.raises(ConfigurationError, match="not valid TOML"):
        load_config(broken)


def test_config_dict_echo_reloads():
    config = ExperimentConfig(sigmas=(0.03,), ensemble_size=4)
    assert config_from_dict(config_to_dict(config)) == config


def test_config_hash_ignores_output_dir():
    a = ExperimentConfig(output_dir=Path("a"))
    b = ExperimentConfig(output_dir=Path("b"))
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 16
    assert config_hash(a) != config_hash(ExperimentConfig(master_seed=1))


def test_paper_scale():
    assert ExperimentConfig().paper_scale().ensemble_size == PAPER_ENSEMBLE_SIZE


def test_default_workers(monkeypatch):
    monkeypatch.delenv("WESBENCH_WORKERS", raising=False)
    assert default_workers() == 1
    monkeypatch.setenv("WESBENCH_WORKERS", "4")
    assert default_workers() == 4
    monkeypatch.setenv("WESBENCH_WORKERS", "many")
    with pytest.raises(ConfigurationError):
        default_workers()
    monkeypatch.setenv("WESBENCH_WORKERS", "0")
    with pytest.raises(ConfigurationError):
        default_workers()
