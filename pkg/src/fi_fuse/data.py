"""Tabular dataset ingestion, preprocessing, partitioning and synthesis."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    BadFoldCount,
    BadShape,
    EmptyDataset,
    MissingTarget,
    NonNumericFeature,
)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``X`` (n x d), integer labels ``y`` in ``[0, C)``."""

    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray
    class_names: list[str]

    def __post_init__(self):
        X = _frozen(self.X, float)
        y = _frozen(self.y, np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise BadShape(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise BadShape(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if len(self.feature_names) != X.shape[1]:
            raise BadShape("feature_names length does not match X columns")
        if len(self.class_names) < 1:
            raise BadShape("at least one class name is required")
        if y.min() < 0 or y.max() >= len(self.class_names):
            raise BadShape("label outside [0, C)")
        if not np.all(np.isfinite(X)):
            raise BadShape("X contains missing or non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", list(self.feature_names))
        object.__setattr__(self, "class_names", list(self.class_names))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.feature_names, self.X[idx], self.y[idx], self.class_names)

    def drop_features(self, cols) -> "Dataset":
        keep = [j for j in range(self.d) if j not in set(cols)]
        return Dataset([self.feature_names[j] for j in keep], self.X[:, keep], self.y,
                       self.class_names)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def folds(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignments == f) for f in range(self.k)]

    def splits(self) -> list["Split"]:
        idx = np.arange(len(self.assignments))
        return [Split(idx[self.assignments != f], idx[self.assignments == f], f)
                for f in range(self.k)]


@dataclass(frozen=True)
class Split:
    """Disjoint training rows and evaluation rows for one repetition."""

    train: np.ndarray
    evaluate: np.ndarray
    index: int = 0


@dataclass(frozen=True)
class SampleIndices:
    indices: np.ndarray = field(repr=False)


def load_csv(path, target_column: str) -> Dataset:
    """Read a headered CSV; impute feature gaps with column medians.

    Rows whose target is empty are dropped. Labels are encoded in order of
    first appearance.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataset(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if target_column not in header:
        raise MissingTarget(f"{path}: target column {target_column!r} not in header")
    t = header.index(target_column)
    feat_cols = [j for j in range(len(header)) if j != t]
    if not feat_cols:
        raise BadShape(f"{path}: no feature columns")

    values, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise BadShape(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        target = row[t].strip()
        if not target:
            continue
        parsed = []
        for j in feat_cols:
            cell = row[j].strip()
            if not cell:
                parsed.append(math.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericFeature(
                    f"{path}:{lineno}: column {header[j]!r} has non-numeric value {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise NonNumericFeature(f"{path}:{lineno}: column {header[j]!r} is not finite")
            parsed.append(v)
        values.append(parsed)
        labels.append(target)
    if not values:
        raise EmptyDataset(f"{path}: no rows with a target value")

    X = np.array(values, dtype=float)
    for j in range(X.shape[1]):
        col = X[:, j]
        gaps = np.isnan(col)
        if gaps.all():
            raise EmptyDataset(f"{path}: column {header[feat_cols[j]]!r} has no values")
        if gaps.any():
            col[gaps] = np.median(col[~gaps])

    class_names = list(dict.fromkeys(labels))
    code = {c: i for i, c in enumerate(class_names)}
    y = np.array([code[c] for c in labels])
    return Dataset([header[j] for j in feat_cols], X, y, class_names)


def load_iris() -> Dataset:
    ref = resources.files("fi_fuse") / "datasets" / "iris.csv"
    with resources.as_file(ref) as p:
        return load_csv(p, "species")


def iris_csv_path() -> Path:
    return Path(str(resources.files("fi_fuse") / "datasets" / "iris.csv"))


def normalize(ds: Dataset) -> Dataset:
    """Per-column min-max scaling to [0, 1]; constant columns become zeros."""
    X = ds.X
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    out = np.zeros_like(X)
    varying = span > 0
    out[:, varying] = (X[:, varying] - lo[varying]) / span[varying]
    # guard against 1 ulp overshoot so that normalization is idempotent
    np.clip(out, 0.0, 1.0, out=out)
    return Dataset(ds.feature_names, out, ds.y, ds.class_names)


def drop_correlated(ds: Dataset, threshold: float) -> tuple[Dataset, list[str]]:
    """Drop each column whose |Pearson r| with an earlier kept column exceeds threshold."""
    kept: list[int] = []
    dropped: list[int] = []
    X = ds.X
    std = X.std(axis=0)
    for j in range(ds.d):
        redundant = False
        for i in kept:
            if std[i] == 0 or std[j] == 0:
                continue
            r = np.corrcoef(X[:, i], X[:, j])[0, 1]
            if abs(r) > threshold:
                redundant = True
                break
        (dropped if redundant else kept).append(j)
    return ds.drop_features(dropped), [ds.feature_names[j] for j in dropped]


def drop_outlier_rows(ds: Dataset, z: float) -> tuple[Dataset, int]:
    """Remove rows with any feature more than ``z`` standard deviations from its mean."""
    mu = ds.X.mean(axis=0)
    sd = ds.X.std(axis=0)
    sd[sd == 0] = 1.0
    keep = np.all(np.abs(ds.X - mu) <= z * sd, axis=1)
    if not keep.any():
        raise EmptyDataset("outlier filter removed every row")
    return ds.subset(np.flatnonzero(keep)), int((~keep).sum())


def kfold(n: int, k: int, seed: int) -> FoldPlan:
    if k < 2 or k > n:
        raise BadFoldCount(f"need 2 <= k <= n, got k={k}, n={n}")
    order = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    assignments.setflags(write=False)
    return FoldPlan(k, assignments)


def bootstrap(n: int, seed: int) -> SampleIndices:
    if n < 1:
        raise BadShape("bootstrap needs n >= 1")
    return SampleIndices(np.random.default_rng(seed).integers(0, n, size=n))


def bootstrap_splits(n: int, repetitions: int, seed: int) -> list[Split]:
    """Bootstrap resamples for training, out-of-bag rows for evaluation."""
    seeds = np.random.SeedSequence(seed).generate_state(repetitions)
    out = []
    for r, s in enumerate(seeds):
        for attempt in range(100):
            draw = bootstrap(n, int(s) + attempt).indices
            oob = np.setdiff1d(np.arange(n), draw)
            if oob.size:
                break
        else:
            raise BadShape("could not obtain a non-empty out-of-bag set")
        out.append(Split(draw, oob, r))
    return out


def holdout_split(n: int, fraction: float, seed: int) -> Split:
    """Shuffle rows; hold out ``fraction`` of them (at least one) for evaluation."""
    if not 0 < fraction < 1:
        raise BadShape(f"split fraction must lie in (0, 1), got {fraction}")
    n_eval = min(max(1, int(round(fraction * n))), n - 1)
    if n_eval < 1:
        raise BadShape("holdout needs at least two rows")
    order = np.random.default_rng(seed).permutation(n)
    return Split(np.sort(order[n_eval:]), np.sort(order[:n_eval]), 0)


def synthetic_data(n: int, d: int, informative: int, n_classes: int,
                   seed: int) -> tuple[Dataset, list[int]]:
    """Gaussian features; labels cut from a random linear score of the informative ones.

    Returns the dataset and the sorted indices of the informative columns.
    The remaining columns are independent noise.
    """
    if n < n_classes or d < 1 or not 1 <= informative <= d or n_classes < 2:
        raise BadShape(
            f"invalid synthetic shape n={n}, d={d}, informative={informative}, C={n_classes}"
        )
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    inf_idx = np.sort(rng.choice(d, size=informative, replace=False))
    w = rng.uniform(0.5, 1.5, size=informative) * rng.choice([-1.0, 1.0], size=informative)
    score = X[:, inf_idx] @ w
    cuts = np.quantile(score, np.arange(1, n_classes) / n_classes)
    y = np.searchsorted(cuts, score, side="right")
    names = [f"x{j}" for j in range(d)]
    classes = [f"class_{c}" for c in range(n_classes)]
    return Dataset(names, X, y, classes), [int(i) for i in inf_idx]
