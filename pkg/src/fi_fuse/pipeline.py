"""Four-stage run: preprocess, optimise models, compute importance, fuse."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as data_mod
from .errors import ConfigError, FiFuseError, UnknownName
from .explain import TECHNIQUES, ExplainConfig, ImportanceTensor, compute_tensor
from .fuse_crisp import METHODS, fuse, fuse_majority_vote
from .fuse_fuzzy import FuzzyReport, fuzzy_report
from .models import (
    DEFAULT_GRIDS,
    DISPLAY_NAMES,
    FAMILIES,
    ModelSpec,
    grid_search,
    resolve_family,
    save_model,
)
from .plots import bar_chart, membership_chart, slug

log = logging.getLogger(__name__)

REPETITION_MODES = ("kfold", "bootstrap", "holdout")
MANIFEST = "manifest.json"


@dataclass
class RunConfig:
    out: str = "fi_fuse_out"
    data: str | None = None
    target: str | None = None
    synth_rows: int = 500
    synth_features: int = 6
    synth_informative: int = 3
    synth_classes: int = 3
    models: list[str] = field(default_factory=lambda: ["rf", "svm", "nn", "lr"])
    techniques: list[str] = field(default_factory=lambda: list(TECHNIQUES))
    fusion: list[str] = field(default_factory=lambda: list(METHODS))
    folds: int = 5
    repetition: str = "kfold"
    repetitions: int = 10
    split: float = 0.2
    num_features: float = 1.0
    alpha: float = 0.05
    seed: int | None = None
    tune: bool = True
    fuzzy: str = "auto"
    drop_correlated: float | None = None
    drop_outliers: float | None = None
    pi_repeats: int = 10
    lime_samples: int = 1000
    kernel_width: float | None = None
    ridge_lambda: float = 1.0
    max_background: int = 50
    max_explain: int = 100
    plots: bool = True

    def validate(self) -> "RunConfig":
        if self.seed is None:
            raise ConfigError("a seed is required")
        for m in self.models:
            resolve_family(m)
        if not self.models:
            raise ConfigError("at least one model is required")
        bad = [t for t in self.techniques if t not in TECHNIQUES]
        if bad or not self.techniques:
            raise UnknownName(f"unknown techniques {bad}; choose from {list(TECHNIQUES)}")
        bad = [f for f in self.fusion if f not in METHODS]
        if bad:
            raise UnknownName(f"unknown fusion methods {bad}; choose from {list(METHODS)}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.repetition not in REPETITION_MODES:
            raise ConfigError(f"repetition must be one of {REPETITION_MODES}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not 0 < self.split < 1:
            raise ConfigError("split must lie in (0, 1)")
        if not 0 < self.num_features <= 1:
            raise ConfigError("num_features must lie in (0, 1]")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.fuzzy not in ("auto", "true", "false"):
            raise ConfigError("fuzzy must be auto, true or false")
        if self.fuzzy == "true" and self.n_repetitions() < 3:
            raise ConfigError("fuzzy fusion needs at least 3 repetitions")
        if self.data is None and self.target is not None:
            raise ConfigError("target given without data")
        if self.data is not None and self.target is None:
            raise ConfigError("data given without a target column")
        return self

    def n_repetitions(self) -> int:
        return {"kfold": self.folds, "bootstrap": self.repetitions, "holdout": 1}[self.repetition]

    def use_fuzzy(self) -> bool:
        return self.fuzzy == "true" or (self.fuzzy == "auto" and self.n_repetitions() >= 3)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@contextmanager
def stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except FiFuseError as exc:
        raise type(exc)(f"stage {name}: {exc}") from exc
    finally:
        timings[name] = round(time.perf_counter() - start, 3)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str, written: list[Path]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    written.append(path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def fused_csv(fused: dict[str, dict[str, float]], feature_names) -> str:
    methods = list(fused)
    lines = [",".join(["feature", *methods])]
    for f in feature_names:
        cells = [f'"{f}"' if "," in f else f]
        cells += [f"{fused[m][f]:.4f}" for m in methods]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def fuse_tensor(tensor: ImportanceTensor, methods=METHODS, models="all", techniques="all",
                alpha: float = 0.05, num_features: float = 1.0) -> dict[str, dict[str, float]]:
    S = tensor.select(models, techniques)
    raw = fuse(S, methods, alpha=alpha, num_features=num_features)
    return {m: dict(zip(tensor.feature_names, map(float, v))) for m, v in raw.items()}


def model_specific(tensor: ImportanceTensor, num_features: float = 1.0) -> dict:
    """Majority vote per model over its techniques and repetitions."""
    return {m: dict(zip(tensor.feature_names,
                        map(float, fuse_majority_vote(tensor.select([m]), num_features))))
            for m in tensor.models}


def _emit_fusion(out: Path, tensor: ImportanceTensor, fused: dict, report: FuzzyReport | None,
                 plots: bool, written: list[Path], num_features: float) -> None:
    _write(out / "fused.csv", fused_csv(fused, tensor.feature_names), written)
    if all(tensor.select([m]).shape[0] >= 2 for m in tensor.models):
        _write(out / "model_specific.csv",
               fused_csv(model_specific(tensor, num_features), tensor.feature_names), written)
    if report is not None:
        _write(out / "fuzzy_memberships.json", _json(report.to_dict()), written)
    if plots:
        for method, vals in fused.items():
            _write(out / "plots" / f"fused_{method}.svg",
                   bar_chart(tensor.feature_names, [vals[f] for f in tensor.feature_names],
                             f"Fused importance: {method}"), written)
        if report is not None:
            for name, fi in report.features.items():
                _write(out / "plots" / f"mf_{slug(name)}.svg",
                       membership_chart(fi.mfs.to_dict(), f"{name}: {fi.label} "
                                        f"({fi.degree:.2f})", fi.centroid), written)


def _splits(cfg: RunConfig, n: int):
    if cfg.repetition == "kfold":
        return data_mod.kfold(n, cfg.folds, cfg.seed).splits()
    if cfg.repetition == "bootstrap":
        return data_mod.bootstrap_splits(n, cfg.repetitions, cfg.seed)
    return [data_mod.holdout_split(n, cfg.split, cfg.seed)]


def load_dataset(cfg: RunConfig) -> tuple[data_mod.Dataset, dict]:
    info: dict = {}
    if cfg.data is not None:
        ds = data_mod.load_csv(cfg.data, cfg.target)
    else:
        ds, informative = data_mod.synthetic_data(cfg.synth_rows, cfg.synth_features,
                                                  cfg.synth_informative, cfg.synth_classes,
                                                  cfg.seed)
        info["informative"] = [ds.feature_names[i] for i in informative]
    if cfg.drop_outliers is not None:
        ds, removed = data_mod.drop_outlier_rows(ds, cfg.drop_outliers)
        info["outlier_rows_removed"] = removed
    if cfg.drop_correlated is not None:
        ds, dropped = data_mod.drop_correlated(ds, cfg.drop_correlated)
        info["correlated_features_dropped"] = dropped
    ds = data_mod.normalize(ds)
    info.update(n=ds.n, d=ds.d, classes=ds.class_names)
    return ds, info


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every stage and write the output directory; returns the manifest."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    written: list[Path] = []

    with stage("preprocess", timings):
        ds, data_info = load_dataset(cfg)
        if ds.n_classes < 2:
            raise ConfigError("the target column has fewer than two classes")

    with stage("optimise", timings):
        specs, reports = {}, {}
        for alias in cfg.models:
            family = resolve_family(alias)
            name = DISPLAY_NAMES[family]
            grid = DEFAULT_GRIDS[family] if cfg.tune else {
                k: [v] for k, v in FAMILIES[family].HYPERPARAMETERS.items()}
            log.info("grid search %s over %d points", name,
                     int(np.prod([len(v) for v in grid.values()])))
            model, report = grid_search(family, grid, ds, cfg.folds, cfg.seed)
            specs[name] = model.spec
            reports[name] = report
            save_model(model, _track(out / "models" / f"{slug(name)}.json", written))
        _write(out / "model_reports.json",
               _json({m: r.to_dict() for m, r in reports.items()}), written)

    with stage("importance", timings):
        econf = ExplainConfig(cfg.pi_repeats, cfg.lime_samples, cfg.kernel_width,
                              cfg.ridge_lambda, cfg.max_background, cfg.max_explain)
        tensor = compute_tensor(specs, cfg.techniques, ds, _splits(cfg, ds.n), econf, cfg.seed)
        text = tensor.to_csv()
        _write(out / "importance_raw.csv", text, written)
        # fuse exactly what was written, so `fi-fuse fuse` on the file reproduces the run
        tensor = ImportanceTensor.from_csv(text=text)

    with stage("fuse", timings):
        fused = fuse_tensor(tensor, cfg.fusion, alpha=cfg.alpha, num_features=cfg.num_features)
        report = fuzzy_report(tensor) if cfg.use_fuzzy() else None
        _emit_fusion(out, tensor, fused, report, cfg.plots, written, cfg.num_features)

    manifest = {
        "config": cfg.to_dict(),
        "data": data_info,
        "models": {m: {"family": specs[m].family,
                       "best_hyperparameters": r.best_hyperparameters,
                       "mean_accuracy": r.mean_accuracy, "mean_f1": r.mean_f1}
                   for m, r in reports.items()},
        "files": {p.relative_to(out).as_posix(): _sha256(p) for p in sorted(written)},
        "timings": timings,
    }
    if report is not None:
        manifest["labels"] = {f: fi.label for f, fi in report.features.items()}
    (out / MANIFEST).write_text(_json(manifest), encoding="utf-8")
    return manifest


def _track(path: Path, written: list[Path]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    written.append(path)
    return path


def fuse_only(tensor_csv, out=None, methods=METHODS, models="all", techniques="all",
              alpha: float = 0.05, num_features: float = 1.0, fuzzy: str = "auto",
              plots: bool = True) -> tuple[dict, FuzzyReport | None]:
    """Fuse an externally supplied importance tensor CSV."""
    tensor = ImportanceTensor.from_csv(tensor_csv)
    if models != "all" or techniques != "all":
        keep = {k: v for k, v in tensor.entries.items()
                if (models == "all" or k[0] in models)
                and (techniques == "all" or k[1] in techniques)}
        tensor = ImportanceTensor(tensor.feature_names, keep)
    fused = fuse_tensor(tensor, methods, alpha=alpha, num_features=num_features)
    report = None
    enough = all(tensor.select([m]).shape[0] >= 3 for m in tensor.models)
    if fuzzy == "true" or (fuzzy == "auto" and enough):
        report = fuzzy_report(tensor)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        _emit_fusion(out, tensor, fused, report, plots, written, num_features)
        manifest = {"tensor": os.fspath(tensor_csv), "methods": list(methods),
                    "files": {p.relative_to(out).as_posix(): _sha256(p) for p in sorted(written)}}
        (out / MANIFEST).write_text(_json(manifest), encoding="utf-8")
    return fused, report


def verify_manifest(out_dir) -> list[str]:
    """Problems found re-checking the manifest's file inventory; empty when intact."""
    out = Path(out_dir)
    try:
        manifest = json.loads((out / MANIFEST).read_text(encoding="utf-8"))
    except FileNotFoundError:
        return [f"{MANIFEST} is missing"]
    problems = []
    for rel, digest in manifest.get("files", {}).items():
        p = out / rel
        if not p.is_file():
            problems.append(f"{rel}: missing")
        elif _sha256(p) != digest:
            problems.append(f"{rel}: checksum mismatch")
    return problems
