"""Classifier families, grid-search cross-validation and model persistence."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any

import numpy as np

from ..data import Dataset, kfold
from ..errors import (
    ClassCountTooLow,
    EmptyGrid,
    FormatError,
    InvalidHyperparameter,
    ShapeMismatch,
    UnknownName,
)
from . import forest, logistic, neural, svm

FAMILIES = {
    "logistic_regression": logistic,
    "random_forest": forest,
    "svm_rbf": svm,
    "neural_network": neural,
}

ALIASES = {
    "lr": "logistic_regression",
    "rf": "random_forest",
    "svm": "svm_rbf",
    "nn": "neural_network",
}

DISPLAY_NAMES = {
    "logistic_regression": "Logistic Regression",
    "random_forest": "Random Forest",
    "svm_rbf": "Support Vectors",
    "neural_network": "Neural Network",
}

DEFAULT_GRIDS = {
    "random_forest": {
        "trees": [100, 300],
        "min_leaf": [1, 5],
        "criterion": ["gini", "entropy"],
        "bootstrap": [True, False],
    },
    "svm_rbf": {"C_reg": [0.1, 1.0, 10.0], "gamma": [0.01, 0.1, 1.0]},
    "neural_network": {"lr": [0.001, 0.01], "batch": [2, 16], "epochs": [25, 100]},
    "logistic_regression": {"lr": [0.01, 0.1], "epochs": [200, 500]},
}

MODEL_FORMAT = "fi-fuse-model"
MODEL_FORMAT_VERSION = 1


def resolve_family(name: str) -> str:
    family = ALIASES.get(name, name)
    if family not in FAMILIES:
        raise UnknownName(f"unknown model family {name!r}; choose from "
                          f"{sorted(FAMILIES) + sorted(ALIASES)}")
    return family


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        family = resolve_family(self.family)
        module = FAMILIES[family]
        unknown = set(self.hyperparameters) - set(module.HYPERPARAMETERS)
        if unknown:
            raise InvalidHyperparameter(
                f"{family}: unknown hyperparameters {sorted(unknown)}")
        hp = dict(module.HYPERPARAMETERS)
        hp.update(self.hyperparameters)
        problems = module.validate(hp)
        if problems:
            raise InvalidHyperparameter(f"{family}: " + "; ".join(problems))
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "hyperparameters", MappingProxyType(hp))

    def to_dict(self) -> dict:
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters)}


class TrainedClassifier:
    """A fitted model. Immutable after construction; safe to share for prediction."""

    def __init__(self, spec: ModelSpec, state: dict, n_features: int, n_classes: int):
        self.spec = spec
        self.n_features = n_features
        self.n_classes = n_classes
        self._state = state
        self._module = FAMILIES[spec.family]

    @property
    def state(self) -> dict:
        return self._state

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(
                f"{self.spec.family} expects {self.n_features} features, got shape {X.shape}")
        P = self._module.predict_proba(self._state, X)
        P = np.clip(P, 0.0, None)
        return P / P.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def __repr__(self):
        return f"TrainedClassifier({self.spec.family}, {dict(self.spec.hyperparameters)})"


@dataclass
class CVReport:
    fold_accuracy: list[float]
    fold_f1: list[float]
    best_hyperparameters: dict
    mean_accuracy: float
    mean_f1: float
    grid_scores: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_hyperparameters": self.best_hyperparameters,
            "mean_accuracy": self.mean_accuracy,
            "mean_f1": self.mean_f1,
            "fold_accuracy": self.fold_accuracy,
            "fold_f1": self.fold_f1,
            "grid_scores": self.grid_scores,
        }


def train(spec: ModelSpec, X, y, seed: int, n_classes: int | None = None) -> TrainedClassifier:
    """Fit one model; the result depends only on (spec, X, y, seed)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X shape {X.shape} does not match y shape {y.shape}")
    if X.shape[0] == 0:
        raise ShapeMismatch("cannot train on zero rows")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if np.unique(y).size < 2 or n_classes < 2:
        raise ClassCountTooLow("training labels contain fewer than two classes")
    rng = np.random.default_rng(seed)
    state = FAMILIES[spec.family].fit(X, y.astype(np.int64), n_classes,
                                      dict(spec.hyperparameters), rng)
    return TrainedClassifier(spec, state, X.shape[1], n_classes)


def predict_proba(model: TrainedClassifier, X) -> np.ndarray:
    return model.predict_proba(X)


def scores(y_true, y_pred) -> tuple[float, float]:
    """Accuracy and macro-F1 of hard labels.

    Macro-F1 averages over the classes present in either truth or
    prediction; a class with no true positives scores 0.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size == 0:
        raise ShapeMismatch(f"label shapes {y_true.shape} and {y_pred.shape} disagree")
    acc = float(np.mean(y_true == y_pred))
    f1s = []
    for c in np.union1d(y_true, y_pred):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return acc, float(np.mean(f1s))


def evaluate(model: TrainedClassifier, X, y) -> tuple[float, float]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
    return scores(y, model.predict(X))


def grid_points(grid: dict) -> list[dict]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise EmptyGrid("hyperparameter grid is empty")
    keys = list(grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def grid_search(family: str, grid: dict, ds: Dataset, k: int,
                seed: int) -> tuple[TrainedClassifier, CVReport]:
    """Exhaustive k-fold grid search; the winner is refit on all rows.

    Selection: highest mean accuracy, then highest mean F1, then the first
    point in enumeration order.
    """
    family = resolve_family(family)
    points = grid_points(grid)
    specs = [ModelSpec(family, p) for p in points]
    splits = kfold(ds.n, k, seed).splits()
    table = []
    for spec, point in zip(specs, points):
        accs, f1s = [], []
        for sp in splits:
            m = train(spec, ds.X[sp.train], ds.y[sp.train], seed, ds.n_classes)
            a, f = evaluate(m, ds.X[sp.evaluate], ds.y[sp.evaluate])
            accs.append(a)
            f1s.append(f)
        table.append({"hyperparameters": point, "fold_accuracy": accs, "fold_f1": f1s,
                      "mean_accuracy": float(np.mean(accs)), "mean_f1": float(np.mean(f1s))})
    best = max(range(len(table)),
               key=lambda i: (table[i]["mean_accuracy"], table[i]["mean_f1"], -i))
    win = table[best]
    model = train(specs[best], ds.X, ds.y, seed, ds.n_classes)
    report = CVReport(win["fold_accuracy"], win["fold_f1"], dict(specs[best].hyperparameters),
                      win["mean_accuracy"], win["mean_f1"], table)
    return model, report


def _to_jsonable(v: Any):
    if isinstance(v, np.ndarray):
        return {"__array__": v.tolist(), "dtype": str(v.dtype), "shape": list(v.shape)}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_to_jsonable(x) for x in v]
    return v


def _from_jsonable(v: Any):
    if isinstance(v, dict) and "__array__" in v:
        return np.array(v["__array__"], dtype=v["dtype"]).reshape(v["shape"])
    return v


def model_to_dict(model: TrainedClassifier) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "family": model.spec.family,
        "hyperparameters": dict(model.spec.hyperparameters),
        "n_features": model.n_features,
        "n_classes": model.n_classes,
        "state": {k: _to_jsonable(v) for k, v in model.state.items()},
    }


def model_from_dict(doc: dict) -> TrainedClassifier:
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_FORMAT_VERSION:
        raise FormatError(f"not a {MODEL_FORMAT} v{MODEL_FORMAT_VERSION} document")
    spec = ModelSpec(doc["family"], doc["hyperparameters"])
    state = {k: _from_jsonable(v) for k, v in doc["state"].items()}
    return TrainedClassifier(spec, state, doc["n_features"], doc["n_classes"])


def save_model(model: TrainedClassifier, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TrainedClassifier:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
