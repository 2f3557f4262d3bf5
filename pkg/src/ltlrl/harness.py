"""Experiment orchestration: seeds, metrics, aggregation, and CSV output.

File layout per configuration, under the output directory:

    {task}_{difficulty}_{method}[_learner]_seed{k}.csv      evaluation series
    {task}_{difficulty}_{method}[_learner]_seed{k}_episodes.csv
    {task}_{difficulty}_{method}[_learner]_seed{k}_manifest.json
    {task}_{difficulty}_{method}[_learner]_aggregate.csv

All numbers are written with repr so reading them back loses nothing, and
nothing time-dependent goes into any file: identical (config, seed) runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .environments import make_task, random_start_wrapper, sticky_wrapper
from .learning import EvalRecord, RunResult, train_loop

OUTPUT_DIR_ENV = "LTLRL_OUTPUT_DIR"

RUN_COLUMNS = ("seed", "step", "edr", "violation", "satisfied", "accept_visits")
EPISODE_COLUMNS = ("seed", "end_step", "accept_visits", "violated", "satisfied")
AGGREGATE_COLUMNS = (
    "step",
    "mean_edr",
    "ci_low",
    "ci_high",
    "method",
    "task",
    "difficulty",
)

BOOTSTRAP_RESAMPLES = 10_000
SMOOTHING_WINDOW = 10


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "results"))


def eventually_discounted_return(accept_visits: int, gamma: float) -> float:
    """Value of N accepting visits: the i-th is worth gamma**i."""
    if accept_visits < 0:
        raise ValueError(f"accept_visits must be >= 0, got {accept_visits}")
    total, weight = 0.0, 1.0
    for _ in range(accept_visits):
        total += weight
        weight *= gamma
    return total


def violation_rate(episodes) -> float:
    """Fraction of training episodes that entered a rejecting sink.

    Only meaningful for tasks with an avoid region; callers should omit
    the metric elsewhere.
    """
    episodes = list(episodes)
    if not episodes:
        return 0.0
    return sum(1 for e in episodes if e.violated) / len(episodes)


def satisfaction_within_episode(record) -> bool:
    """At least one accepting visit happened inside the episode window."""
    return record.accept_visits >= 1


def build_task(config: ExperimentConfig):
    """Instantiate the task named by the config, with wrappers applied."""
    task = make_task(config.task, config.difficulty)
    if config.sticky_prob > 0.0:
        task = sticky_wrapper(task, config.sticky_prob)
    if config.random_start is not None:
        task = random_start_wrapper(task, config.random_start)
    return task


def run_single(config: ExperimentConfig, seed: int) -> RunResult:
    return train_loop(build_task(config), config, seed)


def run_experiment(config: ExperimentConfig, max_workers: int | None = None):
    """Train every seed of the config; results come back in seed order.

    Runs are fully isolated (no shared mutable state), so they may execute
    on worker threads; with a single CPU this degrades to sequential.
    """
    config.validate()
    if max_workers is None:
        max_workers = min(len(config.seeds), os.cpu_count() or 1)
    if max_workers <= 1:
        return [run_single(config, seed) for seed in config.seeds]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(run_single, config, seed) for seed in config.seeds]
        return [f.result() for f in futures]


def config_stem(config: ExperimentConfig) -> str:
    stem = f"{config.task}_{config.difficulty}_{config.method}"
    if config.learner != "qlearning":
        stem += f"_{config.learner}"
    return stem


def run_csv_path(outdir, config: ExperimentConfig, seed: int) -> Path:
    return Path(outdir) / f"{config_stem(config)}_seed{seed}.csv"


def episodes_csv_path(outdir, config: ExperimentConfig, seed: int) -> Path:
    return Path(outdir) / f"{config_stem(config)}_seed{seed}_episodes.csv"


def manifest_path(outdir, config: ExperimentConfig, seed: int) -> Path:
    return Path(outdir) / f"{config_stem(config)}_seed{seed}_manifest.json"


def aggregate_csv_path(outdir, config: ExperimentConfig) -> Path:
    return Path(outdir) / f"{config_stem(config)}_aggregate.csv"


def write_run_csv(path, result: RunResult) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RUN_COLUMNS)
        for record in result.metrics:
            writer.writerow(
                (
                    result.seed,
                    record.step,
                    repr(record.edr),
                    int(record.violation),
                    int(record.satisfied),
                    record.accept_visits,
                )
            )
    return path


def write_episodes_csv(path, result: RunResult) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(EPISODE_COLUMNS)
        for episode in result.episodes:
            writer.writerow(
                (
                    result.seed,
                    episode.end_step,
                    episode.accept_visits,
                    int(episode.violated),
                    int(episode.satisfied),
                )
            )
    return path


def write_manifest(path, config: ExperimentConfig, seed: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"config": config.to_dict(), "seed": seed, "version": __version__}
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    return path


def read_run_csv(path) -> list[dict]:
    """Typed rows of a per-run CSV; raises on a missing column."""
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(RUN_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for raw in reader:
            rows.append(
                {
                    "seed": int(raw["seed"]),
                    "step": int(raw["step"]),
                    "edr": float(raw["edr"]),
                    "violation": bool(int(raw["violation"])),
                    "satisfied": bool(int(raw["satisfied"])),
                    "accept_visits": int(raw["accept_visits"]),
                }
            )
    return rows


@dataclass(frozen=True)
class AggregateRow:
    step: int
    mean_edr: float
    ci_low: float
    ci_high: float


def moving_average(series: np.ndarray, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Trailing moving average; early entries average what exists so far."""
    series = np.asarray(series, dtype=np.float64)
    sums = np.concatenate(([0.0], np.cumsum(series)))
    out = np.empty_like(series)
    for i in range(len(series)):
        lo = max(0, i + 1 - window)
        out[i] = (sums[i + 1] - sums[lo]) / (i + 1 - lo)
    return out


def bootstrap_mean_ci(
    values: np.ndarray, resamples: int = BOOTSTRAP_RESAMPLES
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean and simple percentile bootstrap 95% CI over the seed axis.

    values has shape (seeds, steps). The resampling generator is fixed, so
    aggregation of identical inputs is byte-stable.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2:
        raise ValueError("aggregation needs a (seeds >= 2, steps) matrix")
    n_seeds = values.shape[0]
    rng = np.random.default_rng(0)
    draws = rng.integers(0, n_seeds, size=(resamples, n_seeds))
    weights = np.zeros((resamples, n_seeds))
    np.add.at(weights, (np.arange(resamples)[:, None], draws), 1.0)
    resampled_means = weights @ values / n_seeds
    mean = values.mean(axis=0)
    ci_low = np.percentile(resampled_means, 2.5, axis=0)
    ci_high = np.percentile(resampled_means, 97.5, axis=0)
    return mean, ci_low, ci_high


def aggregate_series(steps, edr_matrix) -> list[AggregateRow]:
    """Bootstrap mean and CI per step, then smooth all three series."""
    mean, ci_low, ci_high = bootstrap_mean_ci(np.asarray(edr_matrix))
    mean = moving_average(mean)
    ci_low = moving_average(ci_low)
    ci_high = moving_average(ci_high)
    return [
        AggregateRow(int(s), float(m), float(lo), float(hi))
        for s, m, lo, hi in zip(steps, mean, ci_low, ci_high)
    ]


def aggregate_results(results) -> list[AggregateRow]:
    """Aggregate RunResults that share a configuration."""
    results = list(results)
    steps = [record.step for record in results[0].metrics]
    for result in results[1:]:
        if [record.step for record in result.metrics] != steps:
            raise ValueError("runs disagree on evaluation steps")
    matrix = np.array([[record.edr for record in r.metrics] for r in results])
    return aggregate_series(steps, matrix)


def aggregate_rows_from_runs(rows_per_seed) -> list[AggregateRow]:
    """Aggregate already-parsed per-run CSV rows, seed by seed."""
    by_seed = list(rows_per_seed)
    steps = [row["step"] for row in by_seed[0]]
    for rows in by_seed[1:]:
        if [row["step"] for row in rows] != steps:
            raise ValueError("per-run CSVs disagree on evaluation steps")
    matrix = np.array([[row["edr"] for row in rows] for rows in by_seed])
    return aggregate_series(steps, matrix)


def write_aggregate_csv(path, rows, config: ExperimentConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(AGGREGATE_COLUMNS)
        for row in rows:
            writer.writerow(
                (
                    row.step,
                    repr(row.mean_edr),
                    repr(row.ci_low),
                    repr(row.ci_high),
                    config.method,
                    config.task,
                    config.difficulty,
                )
            )
    return path


def persist_experiment(outdir, config: ExperimentConfig, results) -> list[Path]:
    """Write per-seed CSVs, episode CSVs, manifests, and the aggregate."""
    written = []
    for result in results:
        written.append(write_run_csv(run_csv_path(outdir, config, result.seed), result))
        written.append(
            write_episodes_csv(episodes_csv_path(outdir, config, result.seed), result)
        )
        written.append(
            write_manifest(manifest_path(outdir, config, result.seed), config, result.seed)
        )
    if len(results) >= 2:
        rows = aggregate_results(results)
        written.append(
            write_aggregate_csv(aggregate_csv_path(outdir, config), rows, config)
        )
    return written


def final_mean_and_ci(results) -> tuple[float, float, float]:
    """Smoothed mean and CI bounds at the last evaluation step."""
    rows = aggregate_results(results)
    last = rows[-1]
    return last.mean_edr, last.ci_low, last.ci_high
