import json

import numpy as np
import pandas as pd
import pytest

from wesbench.cli import main
from wesbench.const import EXIT_CONFIG_ERROR, EXIT_OK
from wesbench.runner import RESULTS_FILE, SUMMARY_FILE, TABLE2_FILE

TINY_TOML = """
[experiment]
distributions = ["unimodal"]
sigmas = [0.02]
betas = [4.0]
losses = ["mse", "wes"]
ensemble_size = 1

[curve]
n_points = 100
pair_repeats = 2
n_terms = 20

[estimation]
pdf_bins = 20
poly_degree = 6

[train]
epochs = 2
batch_size = 64
"""


@pytest.fixture
def tiny_toml(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML)
    return path


def test_generate(tmp_path, tiny_toml):
    out = tmp_path / "data"
    assert main(["generate", "--dist", "unimodal", "--out", str(out), "--config", str(tiny_toml)]) == EXIT_OK
    labels = pd.read_csv(out / "labels.tsv", sep="\t")
    spectrum = pd.read_csv(out / "spectrum.tsv", sep="\t")
    features = pd.read_csv(out / "features.tsv", sep="\t")
    assert len(labels) == 400
    assert len(spectrum) == 21
    assert features.shape == (400, 7)


def test_generate_with_noise_is_seeded(tmp_path, tiny_toml):
    args = ["generate", "--dist", "bimodal", "--config", str(tiny_toml), "--sigma", "0.05", "--seed", "4"]
    assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*args, "--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "features.tsv").read_text()
    assert a == (tmp_path / "b" / "features.tsv").read_text()


def test_train_prints_metrics(tmp_path, tiny_toml, capsys):
    out = tmp_path / "run"
    code = main([
        "train", "--dist", "unimodal", "--loss", "wes", "--beta", "4", "--sigma", "0.01", "--seed", "2",
        "--config", str(tiny_toml), "--out", str(out),
    ])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert set(report) >= {"rmse", "cc", "overlap", "extreme_rmse", "p1_tail_mean", "p99_tail_mean"}
    assert report["rmse"] == float(f"{report['rmse']:.6g}")
    assert (out / "model.txt").exists()
    history = pd.read_csv(out / "history.tsv", sep="\t")
    assert len(history) == 3


def test_train_epoch_override(tmp_path, tiny_toml, capsys):
    out = tmp_path / "run"
    args = ["train", "--dist", "unimodal", "--loss", "mse", "--config", str(tiny_toml), "--epochs", "1"]
    assert main([*args, "--out", str(out)]) == EXIT_OK
    assert len(pd.read_csv(out / "history.tsv", sep="\t")) == 2


def test_train_on_label_file(tmp_path, tiny_toml, capsys):
    labels = tmp_path / "labels.txt"
    np.savetxt(labels, np.sin(np.linspace(0, 6 * np.pi, 400)) ** 3)
    code = main(["train", "--labels-file", str(labels), "--loss", "huber:0.5", "--config", str(tiny_toml)])
    assert code == EXIT_OK
    assert "rmse" in json.loads(capsys.readouterr().out)


@pytest.mark.parametrize(
    "extra",
    [["--loss", "wes"], ["--loss", "cubic"], ["--loss", "mse", "--beta", "2"], ["--loss", "huber"]],
)
def test_train_config_errors(tiny_toml, extra):
    assert main(["train", "--dist", "unimodal", "--config", str(tiny_toml), *extra]) == EXIT_CONFIG_ERROR


def test_sweep_and_report(tmp_path, tiny_toml):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(tiny_toml), "--workers", "1", "--out", str(out)]) == EXIT_OK
    results = pd.read_csv(out / RESULTS_FILE, comment="#")
    assert len(results) == 2
    assert (out / SUMMARY_FILE).exists()

    (out / TABLE2_FILE).unlink()
    assert main(["report", "--results", str(out)]) == EXIT_OK
    assert (out / TABLE2_FILE).exists()


def test_sweep_reads_workers_from_environment(tmp_path, tiny_toml, monkeypatch):
    monkeypatch.setenv("WESBENCH_WORKERS", "zero")
    assert main(["sweep", "--config", str(tiny_toml), "--out", str(tmp_path / "x")]) == EXIT_CONFIG_ERROR


def test_bad_config_file_exit_code(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[experiment]\nsigmas = [-1.0]\n")
    assert main(["sweep", "--config", str(path)]) == EXIT_CONFIG_ERROR
    assert main(["sweep", "--config", str(tmp_path / "absent.toml")]) == EXIT_CONFIG_ERROR


def test_report_without_results(tmp_path):
    assert main(["report", "--results", str(tmp_path)]) == EXIT_CONFIG_ERROR


def test_source_is_required(tmp_path):
    with pytest.raises(SystemExit):
        main(["generate", "--out", str(tmp_path)])
