"""Model-agnostic feature importance: permutation, exact Shapley, local surrogates.

Every explainer accepts any object with a ``predict_proba(X)`` method that
returns an (n, C) probability matrix.
"""

from __future__ import annotations

import csv
import io
import math
import zlib
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .data import Dataset, Split
from .errors import (
    DegenerateKernel,
    EmptyBackground,
    FiFuseError,
    FormatError,
    ShapeMismatch,
    TooManyFeatures,
)

TECHNIQUES = ("PI", "SHAP", "LIME")
MAX_SHAPLEY_FEATURES = 16


@dataclass(frozen=True)
class RawImportance:
    technique: str
    values: np.ndarray
    per_instance: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ShapeMismatch(f"{self.technique}: importance must be a finite vector")
        object.__setattr__(self, "values", v)


def _check_columns(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {X.shape}")
    d = getattr(model, "n_features", X.shape[1])
    if X.shape[1] != d:
        raise ShapeMismatch(f"model expects {d} features, got {X.shape[1]}")
    return X


def permutation_importance(model, X, y, n_repeats: int = 10, seed: int = 0) -> RawImportance:
    """Mean accuracy drop after shuffling each column, floored at zero."""
    X = _check_columns(model, X)
    y = np.asarray(y)
    n, d = X.shape
    if n < 2:
        raise ShapeMismatch("permutation importance needs at least two rows")
    if y.shape != (n,):
        raise ShapeMismatch(f"{n} rows but labels of shape {y.shape}")
    rng = np.random.default_rng(seed)
    baseline = np.mean(model.predict_proba(X).argmax(axis=1) == y)
    stacked = np.tile(X, (d * n_repeats, 1)).reshape(d, n_repeats, n, d)
    for j in range(d):
        for r in range(n_repeats):
            stacked[j, r, :, j] = X[rng.permutation(n), j]
    pred = model.predict_proba(stacked.reshape(-1, d)).argmax(axis=1).reshape(d, n_repeats, n)
    permuted = (pred == y).mean(axis=2)
    drops = baseline - permuted
    return RawImportance("PI", np.maximum(drops.mean(axis=1), 0.0), per_instance=drops)


def coalition_weights(d: int) -> np.ndarray:
    """|S|! (d - |S| - 1)! / d! for |S| = 0 .. d-1."""
    return np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d)
                     for s in range(d)])


def coalition_values(model, X_explain, X_background, target=None,
                     max_rows: int = 1 << 18) -> tuple[np.ndarray, np.ndarray]:
    """Value of every coalition for every explained row.

    Returns ``(v, target)`` where ``v[e, mask]`` is the mean over background
    rows of the target-class probability with features in ``mask`` taken
    from explained row ``e`` and the rest from the background row. Bit ``j``
    of ``mask`` marks feature ``j``.
    """
    X_explain = _check_columns(model, X_explain)
    X_background = np.asarray(X_background, dtype=float)
    if X_background.ndim != 2 or X_background.shape[0] == 0:
        raise EmptyBackground("background set is empty")
    E, d = X_explain.shape
    if X_background.shape[1] != d:
        raise ShapeMismatch("background and explained rows have different widths")
    if d > MAX_SHAPLEY_FEATURES:
        raise TooManyFeatures(f"exact Shapley enumeration supports d <= "
                              f"{MAX_SHAPLEY_FEATURES}, got {d}")
    if target is None:
        target = model.predict_proba(X_explain).argmax(axis=1)
    target = np.asarray(target)
    n_masks = 1 << d
    masks = ((np.arange(n_masks)[:, None] >> np.arange(d)) & 1).astype(bool)
    B = X_background.shape[0]
    per_row = n_masks * B
    step = max(1, max_rows // per_row)
    v = np.empty((E, n_masks))
    for s in range(0, E, step):
        xe = X_explain[s:s + step]
        hyb = np.where(masks[None, :, None, :], xe[:, None, None, :],
                       X_background[None, None, :, :])
        P = model.predict_proba(hyb.reshape(-1, d)).reshape(xe.shape[0], n_masks, B, -1)
        t = target[s:s + step]
        v[s:s + step] = P[np.arange(xe.shape[0]), :, :, t].mean(axis=2)
    return v, target


def shapley_from_values(v: np.ndarray, d: int) -> np.ndarray:
    """Exact Shapley values from a table of coalition values, shape (E, 2**d)."""
    weights = coalition_weights(d)
    masks = np.arange(1 << d)
    sizes = np.array([bin(m).count("1") for m in masks])
    phi = np.zeros((v.shape[0], d))
    for i in range(d):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[:, i] = (v[:, without | bit] - v[:, without]) @ weights[sizes[without]]
    return phi


def shapley_exact(model, X_explain, X_background,
                  target_policy: str = "predicted_class") -> RawImportance:
    """Mean |phi| over the explained rows, by full coalition enumeration."""
    if target_policy != "predicted_class":
        raise ValueError(f"unsupported target policy {target_policy!r}")
    v, _ = coalition_values(model, X_explain, X_background)
    phi = shapley_from_values(v, v.shape[1].bit_length() - 1)
    return RawImportance("SHAP", np.abs(phi).mean(axis=0), per_instance=phi)


def default_kernel_width(d: int) -> float:
    return 0.75 * math.sqrt(d)


def lime_tabular(model, X_explain, n_samples: int = 1000, kernel_width: float | None = None,
                 ridge_lambda: float = 1.0, seed: int = 0,
                 training_data=None) -> RawImportance:
    """Weighted ridge surrogate around each explained row.

    Perturbations are Gaussian with per-feature scale equal to the column
    standard deviation of ``training_data`` (``X_explain`` when omitted).
    The surrogate target is the probability of the row's predicted class.
    """
    X_explain = _check_columns(model, X_explain)
    E, d = X_explain.shape
    if n_samples < d + 2:
        raise ValueError(f"n_samples must be at least d + 2 = {d + 2}")
    if kernel_width is None:
        kernel_width = default_kernel_width(d)
    if not kernel_width > 0:
        raise ValueError("kernel_width must be positive")
    ref = X_explain if training_data is None else np.asarray(training_data, dtype=float)
    scale = ref.std(axis=0)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((E, n_samples, d)) * scale
    Z = X_explain[:, None, :] + noise
    target = model.predict_proba(X_explain).argmax(axis=1)
    P = model.predict_proba(Z.reshape(-1, d)).reshape(E, n_samples, -1)
    t = P[np.arange(E)[:, None], np.arange(n_samples)[None, :], target[:, None]]
    w = np.exp(-(noise ** 2).sum(axis=2) / kernel_width ** 2)
    coefs = np.empty((E, d))
    for e in range(E):
        we = w[e]
        if np.all(we < 1e-12):
            raise DegenerateKernel(f"all proximity weights vanish for row {e} "
                                   f"(kernel_width={kernel_width})")
        total = we.sum()
        Zc = Z[e] - we @ Z[e] / total
        tc = t[e] - we @ t[e] / total
        Zw = Zc * we[:, None]
        coefs[e] = np.linalg.solve(Zw.T @ Zc + ridge_lambda * np.eye(d), Zw.T @ tc)
    return RawImportance("LIME", np.abs(coefs).mean(axis=0), per_instance=coefs)


def normalize_importance(raw) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant vector maps to zeros."""
    v = np.asarray(getattr(raw, "values", raw), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ShapeMismatch("importance values must be finite")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


class ImportanceTensor:
    """Normalized importance vectors keyed by (model, technique, repetition)."""

    def __init__(self, feature_names: Iterable[str], entries: dict | None = None):
        self.feature_names = list(feature_names)
        self.entries: dict[tuple[str, str, int], np.ndarray] = {}
        for key, vec in (entries or {}).items():
            self.add(*key, vec)

    def add(self, model: str, technique: str, repetition: int, vector) -> None:
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (len(self.feature_names),):
            raise ShapeMismatch(f"vector for {(model, technique, repetition)} has shape "
                                f"{vec.shape}, expected ({len(self.feature_names)},)")
        self.entries[(model, technique, int(repetition))] = vec

    def __len__(self):
        return len(self.entries)

    @property
    def models(self) -> list[str]:
        return list(dict.fromkeys(k[0] for k in self.entries))

    @property
    def techniques(self) -> list[str]:
        return list(dict.fromkeys(k[1] for k in self.entries))

    def select(self, models="all", techniques="all") -> np.ndarray:
        """Stack matching vectors into an (m, d) source matrix, in insertion order."""
        rows = [v for (m, t, _), v in self.entries.items()
                if (models == "all" or m in models) and (techniques == "all" or t in techniques)]
        return np.array(rows).reshape(len(rows), len(self.feature_names))

    def samples(self, model: str | None = None, feature: int | None = None) -> np.ndarray:
        vecs = self.select("all" if model is None else [model])
        return vecs.ravel() if feature is None else vecs[:, feature]

    def rounded(self, decimals: int = 4) -> "ImportanceTensor":
        return ImportanceTensor(self.feature_names,
                                {k: np.round(v, decimals) for k, v in self.entries.items()})

    def to_csv(self, path=None, decimals: int = 4) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "technique", "repetition", *self.feature_names])
        for (m, t, r), v in self.entries.items():
            w.writerow([m, t, r, *(f"{x:.{decimals}f}" for x in v)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path=None, text: str | None = None) -> "ImportanceTensor":
        if text is None:
            with open(path, encoding="utf-8", newline="") as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise FormatError("row 1: tensor CSV is empty")
        head = [h.strip() for h in rows[0]]
        if head[:3] != ["model", "technique", "repetition"] or len(head) < 4:
            raise FormatError("row 1: header must start with model,technique,repetition "
                              "followed by at least one feature column")
        tensor = cls(head[3:])
        for r, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(head):
                raise FormatError(f"row {r}: expected {len(head)} fields, got {len(row)}")
            try:
                rep = int(row[2])
            except ValueError:
                raise FormatError(f"row {r}, column 3: repetition {row[2]!r} "
                                  f"is not an integer") from None
            vals = []
            for c, cell in enumerate(row[3:], start=4):
                try:
                    x = float(cell)
                except ValueError:
                    raise FormatError(f"row {r}, column {c}: {cell!r} is not a number") from None
                if not math.isfinite(x):
                    raise FormatError(f"row {r}, column {c}: value is not finite")
                vals.append(x)
            key = (row[0].strip(), row[1].strip(), rep)
            if key in tensor.entries:
                raise FormatError(f"row {r}: duplicate entry {key}")
            tensor.add(*key, vals)
        if not tensor.entries:
            raise FormatError("row 2: tensor CSV has no data rows")
        return tensor


@dataclass
class ExplainConfig:
    pi_repeats: int = 10
    lime_samples: int = 1000
    kernel_width: float | None = None
    ridge_lambda: float = 1.0
    max_background: int = 50
    max_explain: int = 100


def cell_seed(seed: int, *parts) -> np.random.SeedSequence:
    """Random stream for one cell, independent of evaluation order."""
    words = [int(seed)] + [zlib.crc32(str(p).encode()) for p in parts]
    return np.random.SeedSequence(words)


def _subsample(n: int, cap: int, ss: np.random.SeedSequence) -> np.ndarray:
    if n <= cap:
        return np.arange(n)
    return np.sort(np.random.default_rng(ss).choice(n, size=cap, replace=False))


def explain_cell(model, technique: str, ds: Dataset, split: Split, config: ExplainConfig,
                 ss: np.random.SeedSequence) -> RawImportance:
    s_pick, s_bg, s_run = ss.spawn(3)
    X_eval = ds.X[split.evaluate]
    y_eval = ds.y[split.evaluate]
    seed = int(s_run.generate_state(1)[0])
    if technique == "PI":
        return permutation_importance(model, X_eval, y_eval, config.pi_repeats, seed)
    pick = _subsample(len(split.evaluate), config.max_explain, s_pick)
    if technique == "SHAP":
        X_train = ds.X[np.unique(split.train)]
        bg = X_train[_subsample(len(X_train), config.max_background, s_bg)]
        return shapley_exact(model, X_eval[pick], bg)
    if technique == "LIME":
        return lime_tabular(model, X_eval[pick], config.lime_samples, config.kernel_width,
                            config.ridge_lambda, seed, training_data=ds.X[split.train])
    raise ValueError(f"unknown technique {technique!r}")


def compute_tensor(models: dict, techniques, ds: Dataset, splits: list[Split],
                   config: ExplainConfig | None = None, seed: int = 0,
                   fitted: dict | None = None) -> ImportanceTensor:
    """Normalized importance for every (model, technique, repetition) cell.

    ``models`` maps a display name to a ``ModelSpec``; each model is refit on
    the training rows of every split and explained on that split's held-out
    rows. ``fitted`` collects the per-repetition models when given.
    """
    from .models import train

    config = config or ExplainConfig()
    tensor = ImportanceTensor(ds.feature_names)
    for name, spec in models.items():
        for sp in splits:
            overlap = np.intersect1d(sp.train, sp.evaluate)
            if overlap.size:
                raise ShapeMismatch(f"repetition {sp.index}: evaluation rows overlap training")
            try:
                train_seed = int(cell_seed(seed, name, "train", sp.index).generate_state(1)[0])
                model = train(spec, ds.X[sp.train], ds.y[sp.train], train_seed, ds.n_classes)
            except FiFuseError as exc:
                raise type(exc)(f"cell ({name}, train, {sp.index}): {exc}") from exc
            if fitted is not None:
                fitted[(name, sp.index)] = model
            for tech in techniques:
                try:
                    raw = explain_cell(model, tech, ds, sp, config,
                                       cell_seed(seed, name, tech, sp.index))
                except FiFuseError as exc:
                    raise type(exc)(f"cell ({name}, {tech}, {sp.index}): {exc}") from exc
                tensor.add(name, tech, sp.index, normalize_importance(raw))
    return tensor
