"""Dataset generation, CSV ingestion, and the train/test container."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import RngStream

REGRESSION = "regression"
CLASSIFICATION = "classification"


@dataclass(frozen=True)
class Dataset:
    name: str
    task: str
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    num_classes: int | None = None

    def __post_init__(self) -> None:
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == CLASSIFICATION and self.num_classes is None:
            raise ValueError("classification dataset needs num_classes")

    @property
    def n_features(self) -> int:
        return self.x_train.shape[1]


def gen_regression_simple(
    n_train: int = 10000,
    n_test: int = 5000,
    noise_sigma: float = 0.1,
    seed: int = 0,
) -> Dataset:
    """Scalar regression y = 2x + 1 with optional Gaussian target noise."""
    if n_train < 1 or n_test < 1:
        raise ValueError("split sizes must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    gen = RngStream(seed).generator()
    n = n_train + n_test
    x = gen.uniform(-1.0, 1.0, size=(n, 1))
    y = 2.0 * x[:, 0] + 1.0
    if noise_sigma > 0:
        y = y + gen.normal(0.0, noise_sigma, size=n)
    return Dataset(
        name="regression_simple",
        task=REGRESSION,
        x_train=x[:n_train],
        y_train=y[:n_train],
        x_test=x[n_train:],
        y_test=y[n_train:],
    )


def gen_classification_blobs(
    n_classes: int = 4,
    n_per_class: int = 500,
    dim: int = 32,
    separation: float = 6.0,
    seed: int = 0,
) -> Dataset:
    """Unit-variance Gaussian clusters on a deterministic center layout.

    Class c sits at separation * (1 + c // dim) along axis c % dim, so any
    two centers are at least ``separation`` apart. Split is stratified
    80/20 per class.
    """
    if n_classes < 2:
        raise ValueError("n_classes must be at least 2")
    if n_per_class < 5 or dim < 1:
        raise ValueError("need n_per_class >= 5 and dim >= 1")
    gen = RngStream(seed).generator()
    train_x, train_y, test_x, test_y = [], [], [], []
    n_train_c = int(round(0.8 * n_per_class))
    for c in range(n_classes):
        center = np.zeros(dim)
        center[c % dim] = separation * (1 + c // dim)
        points = center + gen.normal(0.0, 1.0, size=(n_per_class, dim))
        train_x.append(points[:n_train_c])
        test_x.append(points[n_train_c:])
        train_y.append(np.full(n_train_c, c, dtype=np.int64))
        test_y.append(np.full(n_per_class - n_train_c, c, dtype=np.int64))
    return Dataset(
        name="blobs",
        task=CLASSIFICATION,
        x_train=np.concatenate(train_x),
        y_train=np.concatenate(train_y),
        x_test=np.concatenate(test_x),
        y_test=np.concatenate(test_y),
        num_classes=n_classes,
    )


def load_csv_dataset(
    path: str | Path,
    target_column: str,
    task: str = REGRESSION,
    seed: int = 0,
    train_fraction: float = 0.8,
) -> Dataset:
    """Load a numeric CSV with a header row into a standardized dataset.

    Features are standardized to zero mean and unit variance using
    statistics of the train split only. The split itself is a seeded
    permutation, so reloading the same file with the same seed reproduces
    it exactly. Categorical columns are not supported; every cell must
    parse as a number.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise ValueError(
                f"{path}: missing column {target_column!r}; header has {header}"
            )
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row at line {line_no} has {len(row)} cells, expected {len(header)}"
                )
            parsed = []
            for col_name, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {cell.strip()!r} at line {line_no}, "
                        f"column {col_name!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")

    data = np.asarray(rows, dtype=np.float64)
    target_idx = header.index(target_column)
    feature_idx = [i for i in range(len(header)) if i != target_idx]
    if not feature_idx:
        raise ValueError(f"{path}: no feature columns besides the target")
    x = data[:, feature_idx]
    y = data[:, target_idx]

    n = len(x)
    perm = RngStream(seed).generator().permutation(n)
    n_train = int(train_fraction * n)
    if n_train < 1 or n_train >= n:
        raise ValueError("train_fraction leaves an empty split")
    train_rows, test_rows = perm[:n_train], perm[n_train:]

    x_train, x_test = x[train_rows], x[test_rows]
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)
    std[std == 0.0] = 1.0
    x_train = (x_train - mean) / std
    x_test = (x_test - mean) / std

    num_classes = None
    y_train, y_test = y[train_rows], y[test_rows]
    if task == CLASSIFICATION:
        if not np.all(y == np.round(y)) or y.min() < 0:
            raise ValueError(f"{path}: classification targets must be nonnegative integers")
        y_train = y_train.astype(np.int64)
        y_test = y_test.astype(np.int64)
        num_classes = int(y.max()) + 1
    return Dataset(
        name=path.stem,
        task=task,
        x_train=x_train,
        y_train=y_train,
        x_test=x_test,
        y_test=y_test,
        num_classes=num_classes,
    )


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    """Write train and test rows as one CSV with header f0..fd-1,target."""
    path = Path(path)
    x = np.concatenate([dataset.x_train, dataset.x_test])
    y = np.concatenate([dataset.y_train, dataset.y_test])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(x.shape[1])] + ["target"])
        is_classification = dataset.task == CLASSIFICATION
        for features, target in zip(x, y):
            row = [repr(float(v)) for v in features]
            row.append(str(int(target)) if is_classification else repr(float(target)))
            writer.writerow(row)
