"""Command line entry point: generate, train, sweep and report."""
from __future__ import annotations

import argparse
from dataclasses import replace
import json
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ExperimentConfig, default_workers, load_config
from .const import DOMAIN, MASTER_SEED, VERSION, WES_FAMILY
from .curvegen import DistributionKind, default_label_curve
from .exceptions import ConfigurationError, ReportWriteError, WesBenchError, exit_code_handler
from .network import save_model
from .runner import (
    emit_reports, load_label_series, prepare_curve, regenerate_reports, run_experiment, single_task,
    train_member,
)
from .signals import add_noise, feature_columns, write_columnar

_LOGGER = logging.getLogger(__name__)


def _base_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "epochs", None) is not None:
        config = replace(config, train=replace(config.train, epochs=args.epochs))
    return config


def _label_curve(args: argparse.Namespace, config: ExperimentConfig):
    if args.labels_file:
        return load_label_series(args.labels_file, config.domain_length)
    return default_label_curve(
        DistributionKind(args.dist), config.n_points, config.pair_repeats, config.domain_length
    )


def _output_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ReportWriteError(f"could not create {out}: {err}") from err
    return out


@exit_code_handler
def cmd_generate(args: argparse.Namespace) -> int:
    """Write the label curve, its cosine spectrum and the feature signals."""
    config = _base_config(args)
    prepared = prepare_curve(_label_curve(args, config), config)
    out = _output_dir(args.out)

    features = add_noise(prepared.features, args.sigma, args.seed) if args.sigma > 0 else prepared.features
    spectrum = prepared.spectrum
    write_columnar(out / "labels.tsv", {"t": prepared.curve.grid, "label": prepared.curve.values})
    write_columnar(out / "spectrum.tsv", {
        "n": np.arange(spectrum.n_terms + 1),
        "a_n": np.concatenate([[spectrum.a0], spectrum.coefficients]),
    })
    write_columnar(out / "features.tsv", feature_columns(prepared.curve, features, prepared.harmonics))
    _LOGGER.info("Wrote %s dataset to %s", prepared.curve.name, out)
    return 0


@exit_code_handler
def cmd_train(args: argparse.Namespace) -> int:
    """Train one network and print its metrics as JSON."""
    config = _base_config(args)
    loss_id = args.loss
    if loss_id == WES_FAMILY:
        if args.beta is None:
            raise ConfigurationError("--loss wes needs --beta")
        loss_id = f"{WES_FAMILY}:{args.beta}"
    elif args.beta is not None:
        raise ConfigurationError("--beta only applies to --loss wes")

    prepared = prepare_curve(_label_curve(args, config), config)
    task = single_task(prepared, config, loss_id, args.sigma, args.seed)
    result, model = train_member(task)
    if model is None:
        raise WesBenchError(f"training diverged for {task.key.loss}; lower the learning rate")

    report = result.metrics.rounded(6)
    print(json.dumps(report, indent=2))

    if args.out:
        out = _output_dir(args.out)
        save_model(model, out / "model.txt")
        history = {"epoch": np.arange(len(model.train_history)), "train_loss": model.train_history}
        if model.holdout_history:
            history["holdout_loss"] = model.holdout_history
        write_columnar(out / "history.tsv", history)
        (out / "metrics.json").write_text(json.dumps(result.metrics.as_dict(), indent=2) + "\n")
        _LOGGER.info("Saved model and history to %s", out)
    return 0


@exit_code_handler
def cmd_sweep(args: argparse.Namespace) -> int:
    """Run the full grid and write every report file."""
    config = _base_config(args)
    if args.paper_scale:
        config = config.paper_scale()
    if args.out:
        config = replace(config, output_dir=Path(args.out))
    workers = args.workers if args.workers is not None else default_workers()
    result_set = run_experiment(config, workers)
    emit_reports(result_set, config.output_dir)
    return 0


@exit_code_handler
def cmd_report(args: argparse.Namespace) -> int:
    """Rebuild the summary tables from a stored results.csv."""
    for path in regenerate_reports(args.results):
        _LOGGER.info("Rewrote %s", path)
    return 0


def _add_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--dist", choices=[k.value for k in DistributionKind], help="built-in label distribution")
    source.add_argument("--labels-file", help="one-column text file with an external label series")
    parser.add_argument("--config", help="TOML config supplying curve and training settings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=DOMAIN, description="Error-weighted loss benchmark on synthetic signals.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="write a label curve, its spectrum and features")
    _add_source(generate)
    generate.add_argument("--out", required=True, help="output directory")
    generate.add_argument("--sigma", type=float, default=0.0, help="feature noise standard deviation")
    generate.add_argument("--seed", type=int, default=MASTER_SEED, help="noise seed")
    generate.set_defaults(func=cmd_generate)

    train = commands.add_parser("train", help="train and evaluate a single network")
    _add_source(train)
    train.add_argument("--loss", required=True, help="loss id such as mse, huber:5.0 or wes")
    train.add_argument("--beta", type=float, help="beta for the wes loss")
    train.add_argument("--sigma", type=float, default=0.0, help="feature noise standard deviation")
    train.add_argument("--seed", type=int, default=MASTER_SEED, help="initialization, split and noise seed")
    train.add_argument("--epochs", type=int, help="override the configured epoch count")
    train.add_argument("--out", help="directory for the model, loss history and metrics")
    train.set_defaults(func=cmd_train)

    sweep = commands.add_parser("sweep", help="run the full experiment grid")
    sweep.add_argument("--config", help="TOML sweep config")
    sweep.add_argument("--workers", type=int, help="worker processes (default from WESBENCH_WORKERS or 1)")
    sweep.add_argument("--paper-scale", action="store_true", help="use the full ensemble size")
    sweep.add_argument("--out", help="override the configured output directory")
    sweep.set_defaults(func=cmd_sweep)

    report = commands.add_parser("report", help="regenerate summary tables from results.csv")
    report.add_argument("--results", required=True, help="directory holding results.csv")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
