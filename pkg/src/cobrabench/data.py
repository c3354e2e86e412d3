"""CSV ingestion and the deterministic splits used by the benchmark."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus target vector, the unit of splitting."""

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple
    target_name: str

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("feature matrix must be n_rows x d with n_rows >= 1, d >= 1")
        if y.shape != (X.shape[0],):
            raise ValueError("targets length must equal feature row count")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains a non-finite value")
        if len(self.feature_names) != X.shape[1]:
            raise ValueError("feature_names length must equal column count")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "Dataset":
        """Row-subset view copied into a new Dataset, order as given."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.targets[idx],
                       self.feature_names, self.target_name)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class StandardizationParams:
    means: np.ndarray
    stds: np.ndarray


def load_csv(path: str, target_column: str) -> Dataset:
    """Parse a one-header CSV of finite reals into a Dataset.

    The target column may sit anywhere; remaining columns become features
    in file order.  Cells that fail to parse, or parse to NaN/inf, are
    reported with their row number (1-based, header is row 1) and column
    name.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError:
        raise FileNotFoundError(f"dataset file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise ValueError(f"{path}: target column {target_column!r} not in header {header}")
        tcol = header.index(target_column)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue  # tolerate a trailing blank line
            if len(raw) != len(header):
                raise ValueError(f"{path}: row {lineno} has {len(raw)} cells, expected {len(header)}")
            parsed = []
            for c, cell in enumerate(raw):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {lineno}, column {header[c]!r}: "
                        f"cannot parse {cell!r} as a real number") from None
                if not math.isfinite(v):
                    raise ValueError(
                        f"{path}: row {lineno}, column {header[c]!r}: non-finite value {cell!r}")
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    M = np.asarray(rows, dtype=float)
    feat_cols = [i for i in range(len(header)) if i != tcol]
    names = tuple(header[i] for i in feat_cols)
    return Dataset(M[:, feat_cols], M[:, tcol], names, target_column)


def write_csv(ds: Dataset, path: str) -> None:
    """Inverse of load_csv: target written as the last column.

    Values are written with repr, which round-trips float64 exactly, so
    load_csv(write_csv(ds)) reproduces ds bit for bit.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [ds.target_name])
        for i in range(ds.n_rows):
            w.writerow([repr(float(v)) for v in ds.features[i]] + [repr(float(ds.targets[i]))])


def train_test_split(ds: Dataset, spec: SplitSpec):
    """Disjoint shuffled partition; train gets floor(fraction * n) rows."""
    n = ds.n_rows
    n_train = math.floor(spec.train_fraction * n)
    if n_train < 1 or n - n_train < 1:
        raise ValueError(f"split of {n} rows at fraction {spec.train_fraction} leaves a side empty")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return ds.take(perm[:n_train]), ds.take(perm[n_train:])


def split_for_cobra(train: Dataset, machine_fraction: float, seed: int):
    """Split training rows into a machine-training part and an aggregation part.

    The first part (size floor(machine_fraction * n)) trains the weak
    learners; the second supplies the response memory the aggregator
    averages over.
    """
    n = train.n_rows
    n_k = math.floor(machine_fraction * n)
    if n_k < 1 or n - n_k < 1:
        raise ValueError(f"machine_fraction {machine_fraction} leaves an empty side for {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return train.take(perm[:n_k]), train.take(perm[n_k:])


def subsample(ds: Dataset, n: int, seed: int) -> Dataset:
    """n rows drawn without replacement, deterministic per seed."""
    if not 1 <= n <= ds.n_rows:
        raise ValueError(f"subsample size {n} out of range [1, {ds.n_rows}]")
    perm = np.random.default_rng(seed).permutation(ds.n_rows)
    return ds.take(perm[:n])


def standardize_fit(ds: Dataset) -> StandardizationParams:
    """Per-column mean and population std; constant columns get std 1."""
    means = ds.features.mean(axis=0)
    stds = ds.features.std(axis=0)
    stds = np.where(stds > 0.0, stds, 1.0)
    return StandardizationParams(means, stds)


def standardize_apply(ds: Dataset, params: StandardizationParams) -> Dataset:
    X = (ds.features - params.means) / params.stds
    return Dataset(X, ds.targets, ds.feature_names, ds.target_name)


def standardize_invert(ds: Dataset, params: StandardizationParams) -> Dataset:
    X = ds.features * params.stds + params.means
    return Dataset(X, ds.targets, ds.feature_names, ds.target_name)
