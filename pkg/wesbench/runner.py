"""Experiment grid orchestration, aggregation and report files."""
from __future__ import annotations

import asyncio
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
import hashlib
import json
import logging
from pathlib import Path
import time
from typing import Iterable, Iterator

import numpy as np
from numpy.typing import NDArray
import pandas as pd

from .config import ExperimentConfig, config_from_dict, config_hash, config_to_dict
from .const import (
    DOMAIN, FIGURE_PDF_BINS, FIGURE_PDF_RANGE, HIGHER_IS_BETTER, METRIC_COLUMNS, RESULT_COLUMNS, RNG_ALGORITHM,
    SCATTER_STRIDE, STATUS_NON_FINITE, STATUS_OK, VERSION, WES_FAMILY,
)
from .curvegen import DistributionKind, LabelCurve, default_label_curve, uniform_normalize
from .exceptions import ConfigurationError, NonFiniteLossError, ReportWriteError
from .losses import LossSpec
from .metrics import MetricReport, TailCondition, evaluate, extreme_thresholds
from .network import TrainConfig, TrainedModel, train
from .signals import (
    CosineSpectrum, FeatureMatrix, HarmonicSet, add_noise, cosine_coefficients, select_harmonics,
    synthesize_features,
)
from .weighting import (
    PdfEstimate, PdfFit, WeightingCurve, empirical_pdf, fit_pdf_polynomial, label_range_constant, weighting_columns,
    weighting_curve,
)

_LOGGER = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.csv"
TABLE2_FILE = "table2.csv"
IMPROVEMENTS_FILE = "improvements.csv"
FIGURE3_FILE = "figure3.csv"
FIGURE1_FILE = "figure1_weighting.csv"
FIGURE1_LABEL_FILE = "figure1_label_pdf.csv"
FIGURE4_PDF_FILE = "figure4_pdf.csv"
FIGURE4_SCATTER_FILE = "figure4_scatter.csv"
CONFIG_ECHO_FILE = "effective_config.json"
METADATA_FILE = "run_metadata.json"

SUMMARY_COLUMNS = (
    ["distribution", "sigma", "loss", "beta", "n_members"]
    + [f"{metric}_{stat}" for metric in METRIC_COLUMNS for stat in ("mean", "sd", "best")]
    + [f"best_beta_{metric}" for metric in METRIC_COLUMNS]
)
TABLE2_COLUMNS = [
    "tail", "sigma", "distribution", "wes_mean", "wes_std", "wes_best_beta",
    "others_best", "others_best_loss", "others_worst", "others_worst_loss",
]
IMPROVEMENT_METRICS = ("overlap", "rmse", "cc", "extreme_rmse")
IMPROVEMENTS_COLUMNS = [
    "distribution", "sigma", "metric", "wes_best", "others_mean", "mse", "others_best",
    "gain_vs_others_mean", "gain_vs_mse", "gain_vs_others_best",
]
FIGURE3_COLUMNS = [
    "distribution", "metric", "sigma", "wes_mean", "wes_sd", "best_beta",
    "mse_mean", "mse_sd", "others_mean", "others_sd",
]
FIGURE1_COLUMNS = ["distribution", "beta", "x", "f_hat", "g"]
FIGURE1_LABEL_COLUMNS = ["distribution", "bin_center", "density"]
FIGURE4_PDF_COLUMNS = ["distribution", "sigma", "loss", "bin_center", "density"]
FIGURE4_SCATTER_COLUMNS = ["distribution", "sigma", "loss", "label", "prediction"]


def stable_seed(*parts) -> int:
    """64-bit seed derived from the repr of its parts, stable across runs and platforms."""
    text = "\x1f".join(repr(part) for part in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def _wes_mask(losses: pd.Series) -> pd.Series:
    return losses.astype(str).str.startswith(f"{WES_FAMILY}:").astype(bool)


@dataclass(frozen=True)
class ResultKey:
    """Identity of one ensemble member inside the grid."""

    distribution: str
    sigma: float
    loss: str
    beta: float | None
    member: int

    def sort_key(self) -> tuple:
        return (self.distribution, self.sigma, self.loss, -1.0 if self.beta is None else self.beta, self.member)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Metrics and bookkeeping of one trained ensemble member."""

    key: ResultKey
    seed: int
    noise_seed: int
    metrics: MetricReport | None
    train_loss_final: float
    wall_seconds: float
    status: str = STATUS_OK
    pred_density: NDArray[np.float64] | None = None
    scatter: NDArray[np.float64] | None = None

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def row(self) -> dict:
        metrics = self.metrics.as_dict() if self.metrics else {}
        return {
            "distribution": self.key.distribution,
            "sigma": self.key.sigma,
            "loss": self.key.loss,
            "beta": np.nan if self.key.beta is None else self.key.beta,
            "member": self.key.member,
            "seed": self.seed,
            **{metric: metrics.get(metric, np.nan) for metric in METRIC_COLUMNS},
            "train_loss_final": self.train_loss_final,
            "wall_seconds": self.wall_seconds,
            "status": self.status,
        }


@dataclass(eq=False)
class PreparedDistribution:
    """Everything about one label curve that is shared by all of its cells."""

    curve: LabelCurve
    spectrum: CosineSpectrum
    harmonics: HarmonicSet
    features: FeatureMatrix
    pdf: PdfEstimate
    fit: PdfFit
    weightings: dict[float, WeightingCurve]
    thresholds: tuple[float, float]


@dataclass(eq=False)
class ResultSet:
    """All member results of a sweep in canonical key order."""

    results: list[ExperimentResult]
    config: ExperimentConfig | None = None
    prepared: dict[str, PreparedDistribution] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.results)

    def __iter__(self) -> Iterator[ExperimentResult]:
        return iter(self.results)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([result.row() for result in self.results], columns=list(RESULT_COLUMNS))


@dataclass(frozen=True, eq=False)
class MemberTask:
    """Self-contained work item; it pickles cleanly into worker processes."""

    key: ResultKey
    seed: int
    noise_seed: int
    loss: LossSpec
    clean_rows: NDArray[np.float64]
    labels: NDArray[np.float64]
    train_config: TrainConfig
    thresholds: tuple[float, float]
    overlap_bins: int
    tail_percentile: float
    tail_condition: TailCondition
    keep_scatter: bool = False


def load_label_series(path: str | Path, domain_length: float) -> LabelCurve:
    """Read a one-column label series from a text file and normalize it."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, comment="#", sep=r"\s+")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise ConfigurationError(f"could not read labels from {path}: {err}") from err
    values = pd.to_numeric(frame.iloc[:, 0], errors="coerce").dropna().to_numpy(dtype=float)
    _LOGGER.info("Loaded %d external labels from %s", len(values), path)
    return LabelCurve(values=uniform_normalize(values), kind=None, domain_length=float(domain_length))


def prepare_curve(curve: LabelCurve, config: ExperimentConfig) -> PreparedDistribution:
    """Spectrum, harmonics, clean features, density fit and weighting curves of a label curve."""
    spectrum = cosine_coefficients(curve, config.n_terms)
    harmonics = select_harmonics(spectrum, config.n_features)
    features = synthesize_features(harmonics, curve.grid, curve.domain_length)
    pdf = empirical_pdf(curve.values, config.pdf_bins)
    fit = fit_pdf_polynomial(pdf, config.poly_degree)
    c = label_range_constant(curve.values)
    weightings = {beta: weighting_curve(fit, beta, c) for beta in config.betas}
    thresholds = extreme_thresholds(curve.values, config.tail_prob)
    _LOGGER.info(
        "Prepared %s curve: harmonics %s, thresholds (%.4f, %.4f)",
        curve.name, harmonics.indices.tolist(), *thresholds,
    )
    return PreparedDistribution(curve, spectrum, harmonics, features, pdf, fit, weightings, thresholds)


def prepare_distribution(kind: DistributionKind, config: ExperimentConfig) -> PreparedDistribution:
    curve = default_label_curve(kind, config.n_points, config.pair_repeats, config.domain_length)
    return prepare_curve(curve, config)


def bind_loss(loss_id: str, prepared: PreparedDistribution) -> LossSpec:
    """Loss spec for an id, with WES bound to this curve's weighting for its beta."""
    spec = LossSpec.from_id(loss_id)
    if spec.beta is None:
        return spec
    weighting = prepared.weightings.get(spec.beta)
    if weighting is None:
        weighting = weighting_curve(prepared.fit, spec.beta, label_range_constant(prepared.curve.values))
    return spec.bind(weighting)


def noise_seed_for(config: ExperimentConfig, distribution: str, sigma: float, member: int) -> int:
    if config.fresh_noise_per_member:
        return stable_seed(config.master_seed, distribution, sigma, "noise", member)
    return stable_seed(config.master_seed, distribution, sigma, "noise")


def build_tasks(config: ExperimentConfig, prepared: dict[str, PreparedDistribution]) -> list[MemberTask]:
    """Every (distribution, sigma, loss, beta, member) cell of the grid."""
    tasks = []
    for distribution, data in prepared.items():
        for sigma in config.sigmas:
            for loss_id, beta in config.loss_grid():
                loss = bind_loss(loss_id, data)
                for member in range(config.ensemble_size):
                    key = ResultKey(distribution, sigma, loss_id, beta, member)
                    seed = stable_seed(config.master_seed, distribution, sigma, loss_id, beta, member)
                    tasks.append(MemberTask(
                        key=key,
                        seed=seed,
                        noise_seed=noise_seed_for(config, distribution, sigma, member),
                        loss=loss,
                        clean_rows=data.features.rows,
                        labels=data.curve.values,
                        train_config=replace(config.train, seed=seed),
                        thresholds=data.thresholds,
                        overlap_bins=config.overlap_bins,
                        tail_percentile=config.tail_percentile,
                        tail_condition=config.tail_condition,
                        keep_scatter=member == 0,
                    ))
    return tasks


def single_task(
        prepared: PreparedDistribution, config: ExperimentConfig, loss_id: str, sigma: float, seed: int
) -> MemberTask:
    """One stand-alone member outside any grid, seeded directly."""
    loss = bind_loss(loss_id, prepared)
    return MemberTask(
        key=ResultKey(prepared.curve.name, float(sigma), loss.loss_id, loss.beta, 0),
        seed=seed,
        noise_seed=stable_seed(seed, "noise"),
        loss=loss,
        clean_rows=prepared.features.rows,
        labels=prepared.curve.values,
        train_config=replace(config.train, seed=seed),
        thresholds=prepared.thresholds,
        overlap_bins=config.overlap_bins,
        tail_percentile=config.tail_percentile,
        tail_condition=config.tail_condition,
    )


def check_seed_uniqueness(tasks: Iterable[MemberTask]) -> None:
    tasks = list(tasks)
    if len({task.seed for task in tasks}) != len(tasks):
        raise ConfigurationError("member seed collision inside the grid; change master_seed")


def train_member(task: MemberTask) -> tuple[ExperimentResult, TrainedModel | None]:
    """Noise, train and evaluate one ensemble member."""
    start = time.perf_counter()
    features = add_noise(FeatureMatrix(rows=task.clean_rows), task.key.sigma, task.noise_seed)
    try:
        model = train(features, task.labels, task.loss, task.train_config)
    except NonFiniteLossError as err:
        _LOGGER.warning("Member %s aborted: %s", task.key, err)
        return ExperimentResult(
            key=task.key, seed=task.seed, noise_seed=task.noise_seed, metrics=None,
            train_loss_final=err.value, wall_seconds=time.perf_counter() - start, status=STATUS_NON_FINITE,
        ), None

    rows = model.holdout_indices if len(model.holdout_indices) else model.train_indices
    preds = model.predict(features.rows[rows])
    labels = task.labels[rows]
    report = evaluate(
        preds, labels, task.thresholds,
        tail_percentile=task.tail_percentile, overlap_bins=task.overlap_bins, condition=task.tail_condition,
    )
    counts, edges = np.histogram(preds, bins=FIGURE_PDF_BINS, range=FIGURE_PDF_RANGE)
    density = counts / (len(preds) * (edges[1] - edges[0]))
    scatter = np.column_stack([labels, preds])[::SCATTER_STRIDE] if task.keep_scatter else None

    result = ExperimentResult(
        key=task.key,
        seed=task.seed,
        noise_seed=task.noise_seed,
        metrics=report,
        train_loss_final=model.final_train_loss,
        wall_seconds=time.perf_counter() - start,
        pred_density=density,
        scatter=scatter,
    )
    return result, model


def run_member(task: MemberTask) -> ExperimentResult:
    return train_member(task)[0]


async def async_run_experiment(config: ExperimentConfig, workers: int = 1) -> ResultSet:
    """
    Run the whole grid, fanning members out over worker processes.

    Each member owns its seeds, so the result set does not depend on the
    worker count or on completion order.
    """
    if workers < 1:
        raise ConfigurationError(f"workers must be at least 1, got {workers}")
    prepared = {str(kind): prepare_distribution(kind, config) for kind in config.distributions}
    tasks = build_tasks(config, prepared)
    check_seed_uniqueness(tasks)
    _LOGGER.info("Running %d members with %d worker(s)", len(tasks), workers)

    results: list[ExperimentResult] = []
    if workers == 1:
        for task in tasks:
            results.append(run_member(task))
            _LOGGER.debug("Finished %s", task.key)
    else:
        loop = asyncio.get_running_loop()
        sink_lock = asyncio.Lock()
        in_flight = asyncio.Semaphore(2 * workers)

        with ProcessPoolExecutor(max_workers=workers) as executor:
            async def run_one(task: MemberTask) -> None:
                async with in_flight:
                    result = await loop.run_in_executor(executor, run_member, task)
                async with sink_lock:
                    results.append(result)
                    _LOGGER.debug("Finished %s (%d/%d)", task.key, len(results), len(tasks))

            await asyncio.gather(*(run_one(task) for task in tasks))

    results.sort(key=lambda result: result.key.sort_key())
    aborted = sum(not result.ok for result in results)
    if aborted:
        _LOGGER.warning("%d of %d members aborted with a non-finite loss", aborted, len(results))
    return ResultSet(results=results, config=config, prepared=prepared)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ResultSet:
    """Synchronous entry point for async_run_experiment."""
    return asyncio.run(async_run_experiment(config, workers))


def _stats(values: NDArray, higher_is_better: bool) -> tuple[float, float, float]:
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    best = float(np.max(values) if higher_is_better else np.min(values))
    return mean, sd, best


def aggregate(results: ResultSet | pd.DataFrame) -> pd.DataFrame:
    """
    Per (distribution, sigma, loss) mean, sample sd and best over members.

    WES additionally gets one 'wes' row per (distribution, sigma) whose
    statistics run over the per-beta means, with the argbest beta per metric.
    """
    frame = results.frame() if isinstance(results, ResultSet) else results
    frame = frame[frame["status"] == STATUS_OK]

    rows = []
    for (distribution, sigma, loss), group in frame.groupby(["distribution", "sigma", "loss"], sort=True):
        row = {
            "distribution": distribution, "sigma": sigma, "loss": loss,
            "beta": group["beta"].iloc[0], "n_members": len(group),
        }
        for metric in METRIC_COLUMNS:
            mean, sd, best = _stats(group[metric].to_numpy(dtype=float), HIGHER_IS_BETTER[metric])
            row.update({f"{metric}_mean": mean, f"{metric}_sd": sd, f"{metric}_best": best})
        rows.append(row)
    per_loss = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    family_rows = []
    wes = per_loss[_wes_mask(per_loss["loss"])]
    for (distribution, sigma), group in wes.groupby(["distribution", "sigma"], sort=True):
        group = group.sort_values("beta", kind="stable")
        row = {
            "distribution": distribution, "sigma": sigma, "loss": WES_FAMILY,
            "beta": np.nan, "n_members": int(group["n_members"].sum()),
        }
        for metric in METRIC_COLUMNS:
            means = group[f"{metric}_mean"].to_numpy(dtype=float)
            mean, sd, best = _stats(means, HIGHER_IS_BETTER[metric])
            pick = int(np.argmax(means) if HIGHER_IS_BETTER[metric] else np.argmin(means))
            row.update({
                f"{metric}_mean": mean, f"{metric}_sd": sd, f"{metric}_best": best,
                f"best_beta_{metric}": float(group["beta"].iloc[pick]),
            })
        family_rows.append(row)

    summary = pd.concat([per_loss, pd.DataFrame(family_rows, columns=SUMMARY_COLUMNS)], ignore_index=True)
    return summary.sort_values(["distribution", "sigma", "loss"], kind="stable").reset_index(drop=True)


def _benchmark_rows(cell: pd.DataFrame) -> pd.DataFrame:
    return cell[~_wes_mask(cell["loss"]) & (cell["loss"] != WES_FAMILY)]


def table2(summary: pd.DataFrame) -> pd.DataFrame:
    """
    Tail means in the layout of the published comparison table.

    WES mean and std run over the beta grid; 'others' are the benchmark
    losses. The best left-tail value is the lowest, the best right-tail value
    the highest.
    """
    rows = []
    for tail, metric, higher in (("P1", "p1_tail_mean", False), ("P99", "p99_tail_mean", True)):
        for (distribution, sigma), cell in summary.groupby(["distribution", "sigma"], sort=True):
            family = cell[cell["loss"] == WES_FAMILY]
            others = _benchmark_rows(cell)
            row = {"tail": tail, "sigma": sigma, "distribution": distribution}
            if len(family):
                row.update({
                    "wes_mean": family[f"{metric}_mean"].iloc[0],
                    "wes_std": family[f"{metric}_sd"].iloc[0],
                    "wes_best_beta": family[f"best_beta_{metric}"].iloc[0],
                })
            if len(others):
                values = others[f"{metric}_mean"].to_numpy(dtype=float)
                best, worst = (np.argmax(values), np.argmin(values)) if higher else (np.argmin(values), np.argmax(values))
                row.update({
                    "others_best": values[best], "others_best_loss": others["loss"].iloc[best],
                    "others_worst": values[worst], "others_worst_loss": others["loss"].iloc[worst],
                })
            rows.append(row)
    return pd.DataFrame(rows, columns=TABLE2_COLUMNS)


def _gain(wes: float, reference: float, higher: bool) -> float:
    return wes - reference if higher else reference - wes


def improvements(summary: pd.DataFrame) -> pd.DataFrame:
    """Gain of best-beta WES over the benchmark mean, MSE and the best benchmark loss."""
    rows = []
    for (distribution, sigma), cell in summary.groupby(["distribution", "sigma"], sort=True):
        family = cell[cell["loss"] == WES_FAMILY]
        others = _benchmark_rows(cell)
        if not len(family) or not len(others):
            continue
        mse = cell[cell["loss"] == "mse"]
        for metric in IMPROVEMENT_METRICS:
            higher = HIGHER_IS_BETTER[metric]
            wes_best = float(family[f"{metric}_best"].iloc[0])
            means = others[f"{metric}_mean"].to_numpy(dtype=float)
            others_best = float(means.max() if higher else means.min())
            mse_value = float(mse[f"{metric}_mean"].iloc[0]) if len(mse) else np.nan
            rows.append({
                "distribution": distribution, "sigma": sigma, "metric": metric,
                "wes_best": wes_best, "others_mean": float(means.mean()), "mse": mse_value,
                "others_best": others_best,
                "gain_vs_others_mean": _gain(wes_best, float(means.mean()), higher),
                "gain_vs_mse": _gain(wes_best, mse_value, higher),
                "gain_vs_others_best": _gain(wes_best, others_best, higher),
            })
    frame = pd.DataFrame(rows, columns=IMPROVEMENTS_COLUMNS)
    if len(frame):
        overall = frame.groupby("metric", sort=False).mean(numeric_only=True).reset_index()
        overall["distribution"] = "all"
        overall["sigma"] = np.nan
        frame = pd.concat([frame, overall[IMPROVEMENTS_COLUMNS]], ignore_index=True)
    return frame


def figure3(summary: pd.DataFrame) -> pd.DataFrame:
    """Metric-versus-sigma series for WES over beta, MSE and the benchmark mean."""
    rows = []
    for (distribution, sigma), cell in summary.groupby(["distribution", "sigma"], sort=True):
        family = cell[cell["loss"] == WES_FAMILY]
        mse = cell[cell["loss"] == "mse"]
        others = _benchmark_rows(cell)
        for metric in IMPROVEMENT_METRICS:
            means = others[f"{metric}_mean"].to_numpy(dtype=float)
            rows.append({
                "distribution": distribution, "metric": metric, "sigma": sigma,
                "wes_mean": family[f"{metric}_mean"].iloc[0] if len(family) else np.nan,
                "wes_sd": family[f"{metric}_sd"].iloc[0] if len(family) else np.nan,
                "best_beta": family[f"best_beta_{metric}"].iloc[0] if len(family) else np.nan,
                "mse_mean": mse[f"{metric}_mean"].iloc[0] if len(mse) else np.nan,
                "mse_sd": mse[f"{metric}_sd"].iloc[0] if len(mse) else np.nan,
                "others_mean": float(means.mean()) if len(means) else np.nan,
                "others_sd": float(np.std(means, ddof=1)) if len(means) > 1 else 0.0,
            })
    frame = pd.DataFrame(rows, columns=FIGURE3_COLUMNS)
    return frame.sort_values(["distribution", "metric", "sigma"], kind="stable").reset_index(drop=True)


def _figure_bin_centers() -> NDArray[np.float64]:
    edges = np.linspace(*FIGURE_PDF_RANGE, FIGURE_PDF_BINS + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def figure4_pdf(result_set: ResultSet) -> pd.DataFrame:
    """Ensemble-averaged prediction densities with the label density per distribution."""
    centers = _figure_bin_centers()
    frames = []
    for distribution, data in result_set.prepared.items():
        density, _ = np.histogram(data.curve.values, bins=FIGURE_PDF_BINS, range=FIGURE_PDF_RANGE, density=True)
        frames.append(pd.DataFrame({
            "distribution": distribution, "sigma": np.nan, "loss": "label",
            "bin_center": centers, "density": density,
        }))

    groups: dict[tuple, list[NDArray]] = {}
    for result in result_set:
        if result.ok and result.pred_density is not None:
            key = (result.key.distribution, result.key.sigma, result.key.loss)
            groups.setdefault(key, []).append(result.pred_density)
    for (distribution, sigma, loss), densities in groups.items():
        frames.append(pd.DataFrame({
            "distribution": distribution, "sigma": sigma, "loss": loss,
            "bin_center": centers, "density": np.mean(densities, axis=0),
        }))
    if not frames:
        return pd.DataFrame(columns=FIGURE4_PDF_COLUMNS)
    return pd.concat(frames, ignore_index=True)[FIGURE4_PDF_COLUMNS]


def figure4_scatter(result_set: ResultSet) -> pd.DataFrame:
    """Label/prediction pairs from member 0 of every cell."""
    frames = [
        pd.DataFrame({
            "distribution": result.key.distribution, "sigma": result.key.sigma, "loss": result.key.loss,
            "label": result.scatter[:, 0], "prediction": result.scatter[:, 1],
        })
        for result in result_set if result.ok and result.scatter is not None
    ]
    if not frames:
        return pd.DataFrame(columns=FIGURE4_SCATTER_COLUMNS)
    return pd.concat(frames, ignore_index=True)[FIGURE4_SCATTER_COLUMNS]


def figure1(result_set: ResultSet) -> tuple[pd.DataFrame, pd.DataFrame]:
    """(x, f_hat, g) per distribution and beta, and the label histograms they were fitted to."""
    weight_frames = []
    label_frames = []
    for distribution, data in result_set.prepared.items():
        for beta, curve in sorted(data.weightings.items()):
            weight_frames.append(pd.DataFrame({"distribution": distribution, "beta": beta, **weighting_columns(curve)}))
        label_frames.append(pd.DataFrame({
            "distribution": distribution, "bin_center": data.pdf.bin_centers, "density": data.pdf.densities,
        }))
    weights = pd.concat(weight_frames, ignore_index=True) if weight_frames else pd.DataFrame(columns=FIGURE1_COLUMNS)
    labels = pd.concat(label_frames, ignore_index=True) if label_frames else pd.DataFrame(columns=FIGURE1_LABEL_COLUMNS)
    return weights[FIGURE1_COLUMNS], labels[FIGURE1_LABEL_COLUMNS]


def header_lines(digest: str, generated: datetime | None = None) -> list[str]:
    generated = generated or datetime.now(timezone.utc)
    return [
        f"# {DOMAIN} {VERSION}",
        f"# config_hash {digest}",
        f"# generated {generated.strftime('%Y-%m-%dT%H:%M:%SZ')}",
    ]


def write_table(path: Path, frame: pd.DataFrame, header: list[str]) -> Path:
    """Write a CSV table behind '#' header comments, floats at full precision."""
    try:
        with path.open("w", newline="") as handle:
            handle.write("\n".join(header) + "\n")
            frame.to_csv(handle, index=False, lineterminator="\n")
    except OSError as err:
        raise ReportWriteError(f"could not write {path}: {err}") from err
    _LOGGER.debug("Wrote %d rows to %s", len(frame), path)
    return path


def read_header(path: Path) -> dict[str, str]:
    header = {}
    with path.open() as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            name, _, value = line[1:].strip().partition(" ")
            header[name] = value
    return header


def read_results(output_dir: str | Path) -> tuple[pd.DataFrame, str]:
    """Load results.csv and the config hash recorded in its header."""
    path = Path(output_dir) / RESULTS_FILE
    if not path.exists():
        raise ConfigurationError(f"no {RESULTS_FILE} in {output_dir}")
    frame = pd.read_csv(path, comment="#")
    return frame, read_header(path).get("config_hash", "unknown")


def emit_summary_reports(results: pd.DataFrame, output_dir: Path, header: list[str]) -> list[Path]:
    """summary, table2, improvements and figure3 files from a results frame."""
    summary = aggregate(results)
    return [
        write_table(output_dir / SUMMARY_FILE, summary, header),
        write_table(output_dir / TABLE2_FILE, table2(summary), header),
        write_table(output_dir / IMPROVEMENTS_FILE, improvements(summary), header),
        write_table(output_dir / FIGURE3_FILE, figure3(summary), header),
    ]


def emit_reports(result_set: ResultSet, output_dir: str | Path | None = None) -> list[Path]:
    """Write every result, summary and plot-data file of a sweep."""
    config = result_set.config
    output_dir = Path(output_dir if output_dir is not None else config.output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ReportWriteError(f"could not create {output_dir}: {err}") from err

    digest = config_hash(config)
    header = header_lines(digest)
    results = result_set.frame()
    paths = [write_table(output_dir / RESULTS_FILE, results, header)]
    paths += emit_summary_reports(results, output_dir, header)

    weights, label_pdf = figure1(result_set)
    paths += [
        write_table(output_dir / FIGURE1_FILE, weights, header),
        write_table(output_dir / FIGURE1_LABEL_FILE, label_pdf, header),
        write_table(output_dir / FIGURE4_PDF_FILE, figure4_pdf(result_set), header),
        write_table(output_dir / FIGURE4_SCATTER_FILE, figure4_scatter(result_set), header),
    ]

    metadata = {
        "tool": DOMAIN,
        "version": VERSION,
        "rng": RNG_ALGORITHM,
        "config_hash": digest,
        "members": len(result_set),
        "ok": sum(result.ok for result in result_set),
        "aborted": sum(not result.ok for result in result_set),
    }
    try:
        (output_dir / CONFIG_ECHO_FILE).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")
        (output_dir / METADATA_FILE).write_text(json.dumps(metadata, indent=2) + "\n")
    except OSError as err:
        raise ReportWriteError(f"could not write run metadata to {output_dir}: {err}") from err
    paths += [output_dir / CONFIG_ECHO_FILE, output_dir / METADATA_FILE]
    _LOGGER.info("Wrote %d report files to %s", len(paths), output_dir)
    return paths


def read_config_echo(output_dir: Path) -> ExperimentConfig | None:
    path = output_dir / CONFIG_ECHO_FILE
    if not path.exists():
        return None
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigurationError(f"could not read {path}: {err}") from err
    return config_from_dict(raw)


def regenerate_reports(output_dir: str | Path) -> list[Path]:
    """
    Rebuild the summary tables from a stored results.csv.

    The figure-1 weighting data is rebuilt too when the run's
    effective_config.json sits next to the results. Prediction densities and
    scatter samples need the trained members and are left as they are.
    """
    output_dir = Path(output_dir)
    results, digest = read_results(output_dir)
    header = header_lines(digest)
    paths = emit_summary_reports(results, output_dir, header)

    config = read_config_echo(output_dir)
    if config is None:
        _LOGGER.info("No %s in %s; keeping the figure-1 files", CONFIG_ECHO_FILE, output_dir)
        return paths
    prepared = {str(kind): prepare_distribution(kind, config) for kind in config.distributions}
    weights, label_pdf = figure1(ResultSet(results=[], config=config, prepared=prepared))
    paths += [
        write_table(output_dir / FIGURE1_FILE, weights, header),
        write_table(output_dir / FIGURE1_LABEL_FILE, label_pdf, header),
    ]
    return paths
