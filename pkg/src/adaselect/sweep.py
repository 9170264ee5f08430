"""Experiment harness: configs, sweep execution, result CSVs, and rankings.

A sweep walks the grid of strategies x sampling rates x betas, trains one
job per cell, and appends per-epoch rows to a result CSV with a fixed
column order. The full-training benchmark ignores the rate and beta axes;
it is trained once and its rows are replicated across the rate grid so
rankings always include it. Adaptive-combiner cells additionally write a
per-iteration method-weight log, and a small matplotlib script is emitted
next to the CSVs so results can be plotted without coupling this package
to a plotting library.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .datasets import (
    REGRESSION,
    Dataset,
    gen_classification_blobs,
    gen_regression_simple,
    load_csv_dataset,
)
from .models import LossKind, make_model
from .rng import RngStream
from .training import (
    DivergenceError,
    SGDMomentum,
    TrainReport,
    strategy_from_token,
    train,
)

RESULT_COLUMNS = (
    "dataset",
    "strategy",
    "sampling_rate",
    "beta",
    "epoch",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "backward_samples",
    "wall_ms",
    "seed",
    "failed",
)
WEIGHT_LOG_COLUMNS = ("run_id", "t", "method", "weight", "avg_subset_loss")

DEFAULT_STRATEGIES = (
    "full",
    "uniform",
    "big_loss",
    "small_loss",
    "grad_norm",
    "adaboost",
    "coreset_mix",
    "coreset_mean",
    "adaselect",
)

_STREAM_MODEL_INIT = 7


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment definition; JSON-serializable, flags override fields."""

    dataset: str = "regression_simple"
    target_col: str = "target"
    task: str | None = None
    model: str = "mlp"
    hidden: tuple[int, ...] = (16,)
    activation: str = "relu"
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES
    candidates: tuple[str, ...] = ("big_loss", "small_loss", "uniform")
    rates: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    betas: tuple[float, ...] = (0.5,)
    kappa: float = -0.5
    curriculum: bool = True
    epochs: int = 20
    batch: int = 100
    lr: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    out: str = "results.csv"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        for rate in self.rates:
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"sampling rate {rate} outside (0, 1]")
        for beta in self.betas:
            if not -1.0 <= beta <= 1.0:
                raise ValueError(f"beta {beta} outside [-1, 1]")
        if self.model not in ("linear", "mlp"):
            raise ValueError("model must be 'linear' or 'mlp'")
        if self.epochs < 1 or self.batch < 1:
            raise ValueError("epochs and batch must be positive")

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**raw)

    def to_json_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")


@dataclass(frozen=True)
class ResultRow:
    """One epoch of one run; the persisted unit of the result CSV."""

    dataset: str
    strategy: str
    sampling_rate: float
    beta: float
    epoch: int
    train_loss: float
    test_loss: float
    test_accuracy: float | None
    backward_samples: int
    wall_ms: float
    seed: int
    failed: bool = False

    @property
    def cell(self) -> tuple[str, float, float, int]:
        return (self.strategy, self.sampling_rate, self.beta, self.seed)

    def to_csv_fields(self) -> list[str]:
        return [
            self.dataset,
            self.strategy,
            repr(self.sampling_rate),
            repr(self.beta),
            str(self.epoch),
            repr(self.train_loss),
            repr(self.test_loss),
            "" if self.test_accuracy is None else repr(self.test_accuracy),
            str(self.backward_samples),
            repr(self.wall_ms),
            str(self.seed),
            "1" if self.failed else "0",
        ]

    @classmethod
    def from_csv_fields(cls, fields: list[str]) -> "ResultRow":
        if len(fields) != len(RESULT_COLUMNS):
            raise ValueError(f"result row has {len(fields)} columns, expected {len(RESULT_COLUMNS)}")
        return cls(
            dataset=fields[0],
            strategy=fields[1],
            sampling_rate=float(fields[2]),
            beta=float(fields[3]),
            epoch=int(fields[4]),
            train_loss=float(fields[5]),
            test_loss=float(fields[6]),
            test_accuracy=None if fields[7] == "" else float(fields[7]),
            backward_samples=int(fields[8]),
            wall_ms=float(fields[9]),
            seed=int(fields[10]),
            failed=fields[11] == "1",
        )


def write_result_csv(path: str | Path, rows: list[ResultRow]) -> None:
    lines = [",".join(RESULT_COLUMNS)]
    lines.extend(",".join(row.to_csv_fields()) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_result_csv(path: str | Path) -> list[ResultRow]:
    text = Path(path).read_text().strip()
    if not text:
        return []
    lines = text.split("\n")
    if lines[0] != ",".join(RESULT_COLUMNS):
        raise ValueError(f"{path}: unexpected result CSV header")
    return [ResultRow.from_csv_fields(line.split(",")) for line in lines[1:]]


@dataclass(frozen=True)
class WeightLogRow:
    run_id: str
    t: int
    method: str
    weight: float
    avg_subset_loss: float

    def to_csv_fields(self) -> list[str]:
        return [self.run_id, str(self.t), self.method, repr(self.weight), repr(self.avg_subset_loss)]


def write_weight_log(path: str | Path, rows: list[WeightLogRow]) -> None:
    lines = [",".join(WEIGHT_LOG_COLUMNS)]
    lines.extend(",".join(row.to_csv_fields()) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_weight_log(path: str | Path) -> list[WeightLogRow]:
    text = Path(path).read_text().strip()
    if not text:
        return []
    lines = text.split("\n")
    if lines[0] != ",".join(WEIGHT_LOG_COLUMNS):
        raise ValueError(f"{path}: unexpected weight log header")
    out = []
    for line in lines[1:]:
        run_id, t, method, weight, avg = line.split(",")
        out.append(WeightLogRow(run_id, int(t), method, float(weight), float(avg)))
    return out


def build_dataset(config: ExperimentConfig) -> Dataset:
    token = config.dataset
    if token.startswith("csv:"):
        return load_csv_dataset(
            token[len("csv:") :],
            target_column=config.target_col,
            task=config.task or REGRESSION,
            seed=config.seed,
        )
    if token == "regression_simple":
        return gen_regression_simple(seed=config.seed)
    if token == "blobs":
        return gen_classification_blobs(seed=config.seed)
    raise ValueError(
        f"unknown dataset {token!r}; expected regression_simple, blobs, or csv:<path>"
    )


def _loss_for(dataset: Dataset) -> LossKind:
    return LossKind.MSE if dataset.task == REGRESSION else LossKind.CROSS_ENTROPY


def _build_model(config: ExperimentConfig, dataset: Dataset):
    hidden = () if config.model == "linear" else config.hidden
    n_out = 1 if dataset.task == REGRESSION else int(dataset.num_classes)
    layer_sizes = (dataset.n_features, *hidden, n_out)
    return make_model(
        layer_sizes,
        activation=config.activation,
        rng=RngStream(config.seed).derive(_STREAM_MODEL_INIT),
    )


def run_id_for(dataset: str, strategy: str, rate: float, beta: float, seed: int) -> str:
    return f"{dataset}|{strategy}|r{rate!r}|b{beta!r}|s{seed}"


def run_cell(
    config: ExperimentConfig,
    dataset: Dataset,
    strategy_token: str,
    rate: float,
    beta: float,
) -> tuple[list[ResultRow], list[WeightLogRow], TrainReport | None]:
    """Train one grid cell; divergence is recorded, not raised."""
    model = _build_model(config, dataset)
    strategy = strategy_from_token(
        strategy_token,
        candidates=config.candidates,
        sampling_rate=rate,
        beta=beta,
        kappa=config.kappa,
        curriculum_enabled=config.curriculum,
    )
    opt = SGDMomentum(learning_rate=config.lr, momentum=config.momentum)
    loss = _loss_for(dataset)
    effective_rate = 1.0 if strategy_token == "full" else rate
    rows: list[ResultRow] = []
    run_id = run_id_for(dataset.name, strategy_token, rate, beta, config.seed)
    try:
        report = train(
            strategy,
            dataset,
            model,
            loss,
            opt,
            epochs=config.epochs,
            sampling_rate=effective_rate,
            seed=config.seed,
            batch_size=config.batch,
        )
    except DivergenceError:
        rows.append(
            ResultRow(
                dataset=dataset.name,
                strategy=strategy_token,
                sampling_rate=rate,
                beta=beta,
                epoch=0,
                train_loss=0.0,
                test_loss=0.0,
                test_accuracy=None if dataset.task == REGRESSION else 0.0,
                backward_samples=0,
                wall_ms=0.0,
                seed=config.seed,
                failed=True,
            )
        )
        return rows, [], None
    for stats in report.epochs:
        rows.append(
            ResultRow(
                dataset=dataset.name,
                strategy=strategy_token,
                sampling_rate=rate,
                beta=beta,
                epoch=stats.epoch,
                train_loss=stats.train_loss,
                test_loss=stats.test_loss,
                test_accuracy=stats.test_accuracy,
                backward_samples=stats.backward_samples,
                wall_ms=stats.wall_ms,
                seed=config.seed,
                failed=False,
            )
        )
    weight_rows = [
        WeightLogRow(run_id, w.t, w.method, w.weight, w.avg_subset_loss)
        for w in report.weight_trace
    ]
    return rows, weight_rows, report


def _grid_cells(config: ExperimentConfig) -> list[tuple[str, float, float]]:
    cells = []
    for token in config.strategies:
        if token == "adaselect":
            cells.extend((token, r, b) for r in config.rates for b in config.betas)
        else:
            cells.extend((token, r, 0.0) for r in config.rates)
    return cells


def _cell_complete(rows: list[ResultRow], epochs: int) -> bool:
    return any(r.failed for r in rows) or any(r.epoch == epochs - 1 for r in rows)


def weight_log_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_weights.csv")


def plot_script_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_plots.py")


def run_sweep(config: ExperimentConfig) -> list[ResultRow]:
    """Execute the config's grid, resuming past completed cells.

    Cells already present in the output CSV (all epochs recorded, or a
    failure flagged) are skipped; partial cells are rerun from scratch.
    The result CSV and weight log are rewritten in grid order so reruns
    are deterministic byte-for-byte apart from wall-clock columns.
    """
    dataset = build_dataset(config)
    out_path = Path(config.out)
    existing: dict[tuple, list[ResultRow]] = {}
    if out_path.exists():
        for row in read_result_csv(out_path):
            if row.dataset == dataset.name and row.seed == config.seed:
                existing.setdefault((row.strategy, row.sampling_rate, row.beta), []).append(row)
    wlog_path = weight_log_path(out_path)
    existing_weights: dict[str, list[WeightLogRow]] = {}
    if wlog_path.exists():
        for wrow in read_weight_log(wlog_path):
            existing_weights.setdefault(wrow.run_id, []).append(wrow)

    # The benchmark ignores the rate axis: one training run, rows replicated
    # per rate so every per-rate ranking includes it.
    full_report_rows: list[ResultRow] | None = None
    all_rows: list[ResultRow] = []
    all_weight_rows: list[WeightLogRow] = []
    for token, rate, beta in _grid_cells(config):
        key = (token, rate, beta)
        kept = existing.get(key, [])
        if kept and _cell_complete(kept, config.epochs):
            all_rows.extend(sorted(kept, key=lambda r: r.epoch))
            run_id = run_id_for(dataset.name, token, rate, beta, config.seed)
            all_weight_rows.extend(existing_weights.get(run_id, []))
            continue
        if token == "full":
            if full_report_rows is None:
                rows, _, _ = run_cell(config, dataset, token, rate, beta)
                full_report_rows = rows
            rows = [replace(r, sampling_rate=rate) for r in full_report_rows]
            all_rows.extend(rows)
            continue
        rows, weight_rows, _ = run_cell(config, dataset, token, rate, beta)
        all_rows.extend(rows)
        all_weight_rows.extend(weight_rows)

    write_result_csv(out_path, all_rows)
    write_weight_log(wlog_path, all_weight_rows)
    emit_plot_script(out_path)
    return all_rows


@dataclass(frozen=True)
class RankingTable:
    """Average rank of each strategy per dataset, lower is better."""

    datasets: tuple[str, ...]
    strategies: tuple[str, ...]
    rates: tuple[float, ...]
    per_rate_rank: dict[tuple[str, str, float], float]
    average_rank: dict[tuple[str, str], float] = field(default_factory=dict)

    def format(self) -> str:
        width = max(len(s) for s in self.strategies) + 2
        lines = []
        header = "dataset".ljust(16) + "".join(s.rjust(width) for s in self.strategies)
        lines.append(header)
        for ds in self.datasets:
            cells = ""
            for s in self.strategies:
                rank = self.average_rank.get((ds, s))
                cells += " " * (width - 1) + "-" if rank is None else f"{rank:{width}.2f}"
            lines.append(ds.ljust(16) + cells)
        return "\n".join(lines)


def _mean_ranks(values: list[float]) -> list[float]:
    """Ranks starting at 1 for the smallest value; ties share the mean rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = mean_rank
        i = j + 1
    return ranks


def rank_table(rows: list[ResultRow]) -> RankingTable:
    """Rank strategies by final-epoch test metric at each rate, then average.

    Classification ranks by accuracy (higher is better), regression by test
    loss (lower is better). Cells with several betas keep their best final
    metric; failed cells rank last. A missing (strategy, rate) cell is an
    error listing the gap.
    """
    if not rows:
        raise ValueError("no result rows")
    by_dataset: dict[str, list[ResultRow]] = {}
    for row in rows:
        by_dataset.setdefault(row.dataset, []).append(row)

    per_rate_rank: dict[tuple[str, str, float], float] = {}
    average_rank: dict[tuple[str, str], float] = {}
    all_strategies: set[str] = set()
    all_rates: set[float] = set()
    for ds, ds_rows in by_dataset.items():
        strategies = sorted({r.strategy for r in ds_rows})
        rates = sorted({r.sampling_rate for r in ds_rows})
        if len(strategies) < 2:
            raise ValueError("ranking needs at least 2 strategies at common rates")
        classification = any(r.test_accuracy is not None for r in ds_rows)
        best_metric: dict[tuple[str, float], float] = {}
        missing = []
        for strategy in strategies:
            for rate in rates:
                cell_rows = [
                    r for r in ds_rows if r.strategy == strategy and r.sampling_rate == rate
                ]
                if not cell_rows:
                    missing.append(f"{ds}/{strategy}/rate={rate}")
                    continue
                # best final-epoch metric over betas; failed runs rank worst
                metrics = []
                for beta in sorted({r.beta for r in cell_rows}):
                    beta_rows = [r for r in cell_rows if r.beta == beta]
                    if any(r.failed for r in beta_rows):
                        metrics.append(math.inf)
                        continue
                    last = max(beta_rows, key=lambda r: r.epoch)
                    metrics.append(
                        -last.test_accuracy if classification else last.test_loss
                    )
                best_metric[(strategy, rate)] = min(metrics)
        if missing:
            raise ValueError("incomplete grid, missing cells: " + ", ".join(missing))
        for rate in rates:
            values = [best_metric[(s, rate)] for s in strategies]
            ranks = _mean_ranks(values)
            for strategy, rank in zip(strategies, ranks):
                per_rate_rank[(ds, strategy, rate)] = rank
        for strategy in strategies:
            average_rank[(ds, strategy)] = float(
                np.mean([per_rate_rank[(ds, strategy, rate)] for rate in rates])
            )
        all_strategies.update(strategies)
        all_rates.update(rates)
    return RankingTable(
        datasets=tuple(sorted(by_dataset)),
        strategies=tuple(sorted(all_strategies)),
        rates=tuple(sorted(all_rates)),
        per_rate_rank=per_rate_rank,
        average_rank=average_rank,
    )


_PLOT_TEMPLATE = '''"""Plot results from {result_csv} (auto-generated)."""

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

RESULTS = Path({result_csv!r})
WEIGHTS = Path({weights_csv!r})


def read_csv(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def plot_metric_vs_rate():
    rows = read_csv(RESULTS)
    final = {{}}
    for row in rows:
        key = (row["strategy"], float(row["sampling_rate"]))
        if key not in final or int(row["epoch"]) >= int(final[key]["epoch"]):
            final[key] = row
    use_acc = any(r["test_accuracy"] for r in rows)
    series = defaultdict(list)
    for (strategy, rate), row in sorted(final.items()):
        value = float(row["test_accuracy"] or "nan") if use_acc else float(row["test_loss"])
        series[strategy].append((rate, value))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for strategy, points in sorted(series.items()):
        points.sort()
        ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=strategy)
    ax.set_xlabel("sampling rate")
    ax.set_ylabel("test accuracy" if use_acc else "test loss")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(RESULTS.with_suffix(".metric_vs_rate.png"), dpi=150)


def plot_weight_evolution():
    if not WEIGHTS.exists():
        return
    rows = read_csv(WEIGHTS)
    if not rows:
        return
    runs = defaultdict(lambda: defaultdict(list))
    for row in rows:
        runs[row["run_id"]][row["method"]].append((int(row["t"]), float(row["weight"])))
    for run_id, methods in runs.items():
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for method, points in sorted(methods.items()):
            points.sort()
            ax.plot([p[0] for p in points], [p[1] for p in points], label=method)
        ax.set_xlabel("iteration")
        ax.set_ylabel("method weight")
        ax.set_title(run_id, fontsize=8)
        ax.legend(fontsize=7)
        fig.tight_layout()
        safe = run_id.replace("|", "_").replace("/", "_")
        fig.savefig(WEIGHTS.with_name(f"weights_{{safe}}.png"), dpi=150)
        plt.close(fig)


if __name__ == "__main__":
    plot_metric_vs_rate()
    plot_weight_evolution()
'''


def emit_plot_script(out_csv: str | Path) -> Path:
    out_csv = Path(out_csv)
    script = _PLOT_TEMPLATE.format(
        result_csv=str(out_csv), weights_csv=str(weight_log_path(out_csv))
    )
    path = plot_script_path(out_csv)
    path.write_text(script)
    return path
