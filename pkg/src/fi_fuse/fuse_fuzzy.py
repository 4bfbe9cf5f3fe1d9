"""Fuzzy interpretation of importance coefficients.

Three triangular membership functions (low, moderate, high) are fitted to a
sample of coefficients from its percentiles. Per-feature regions are
aggregated across models, defuzzified by their centroid, and the centroid is
labelled against the membership functions of the whole feature set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewSamples, ZeroArea

TERMS = ("low", "moderate", "high")
GRID = np.linspace(0.0, 1.0, 512)


@dataclass(frozen=True)
class TriangularMF:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not self.a <= self.b <= self.c:
            raise ValueError(f"triangle feet must satisfy a <= b <= c, got {self}")

    @property
    def peak(self) -> float:
        return self.b

    def __call__(self, x):
        return membership(self, x)

    def to_list(self) -> list[float]:
        return [float(self.a), float(self.b), float(self.c)]


def membership(mf: TriangularMF, x):
    """Piecewise-linear hat; a vertical edge where a == b or b == c."""
    x = np.asarray(x, dtype=float)
    a, b, c = mf.a, mf.b, mf.c
    mu = np.zeros_like(x)
    if b > a:
        rise = (x > a) & (x < b)
        mu = np.where(rise, (x - a) / (b - a), mu)
    if c > b:
        fall = (x > b) & (x < c)
        mu = np.where(fall, (c - x) / (c - b), mu)
    mu = np.where(x == b, 1.0, mu)
    return mu if mu.ndim else float(mu)


@dataclass(frozen=True)
class LinguisticImportance:
    low: TriangularMF
    moderate: TriangularMF
    high: TriangularMF

    def terms(self) -> dict[str, TriangularMF]:
        return {"low": self.low, "moderate": self.moderate, "high": self.high}

    def memberships(self, x) -> dict[str, float]:
        return {t: membership(mf, x) for t, mf in self.terms().items()}

    def to_dict(self) -> dict:
        return {t: mf.to_list() for t, mf in self.terms().items()}


def _samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 3:
        raise TooFewSamples(f"need at least 3 coefficients, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("coefficients must be finite")
    return x


def build_mfs(samples) -> LinguisticImportance:
    x = _samples(samples)
    p0, p25, p50, p75, p100 = np.percentile(x, [0, 25, 50, 75, 100])
    # percentile interpolation may leave p25/p75 a rounding error off p50
    p25 = min(p25, p50)
    p75 = max(p75, p50)
    return LinguisticImportance(
        TriangularMF(p0, p0, p50),
        TriangularMF(p25, p50, p75),
        TriangularMF(p50, p100, p100),
    )


def term_weights(mfs: LinguisticImportance, samples) -> np.ndarray:
    """Fraction of samples closest to each term's peak; ties are shared equally."""
    x = _samples(samples)
    peaks = np.array([mfs.low.peak, mfs.moderate.peak, mfs.high.peak])
    dist = np.abs(x[:, None] - peaks[None, :])
    nearest = dist == dist.min(axis=1, keepdims=True)
    share = nearest / nearest.sum(axis=1, keepdims=True)
    return share.sum(axis=0) / x.size


def aggregated_region(mfs: LinguisticImportance, weights, grid: np.ndarray = GRID) -> np.ndarray:
    """max over terms of min(weight, membership)."""
    curves = [np.minimum(w, membership(mf, grid)) for w, mf in zip(weights, mfs.terms().values())]
    return np.max(curves, axis=0)


def defuzzify_centroid(mu, grid: np.ndarray = GRID) -> float:
    mu = np.asarray(mu, dtype=float)
    area = np.trapezoid(mu, grid)
    if not area > 0:
        raise ZeroArea("aggregated membership region has zero area")
    return float(np.trapezoid(grid * mu, grid) / area)


def aggregate_feature(per_model_samples: dict) -> tuple[LinguisticImportance, float]:
    """Pool one feature's coefficients over models; return its MFs and centroid."""
    if not per_model_samples:
        raise TooFewSamples("no model samples given")
    for name, s in per_model_samples.items():
        if np.asarray(s).size < 3:
            raise TooFewSamples(f"model {name!r} has fewer than 3 coefficients")
    pool = np.concatenate([np.asarray(s, dtype=float).ravel()
                           for s in per_model_samples.values()])
    mfs = build_mfs(pool)
    weights = term_weights(mfs, pool)
    try:
        centroid = defuzzify_centroid(aggregated_region(mfs, weights))
    except ZeroArea:
        # all terms narrower than the grid spacing: use the weighted peak position
        peaks = np.array([mf.peak for mf in mfs.terms().values()])
        centroid = float(weights @ peaks)
    return mfs, centroid


def label_feature(mfs: LinguisticImportance, centroid: float) -> tuple[str, float]:
    """Term with the highest membership at ``centroid``; ties favour the higher term."""
    mu = mfs.memberships(centroid)
    best = max(reversed(TERMS), key=lambda t: mu[t])
    return best, float(mu[best])


@dataclass
class FeatureInterpretation:
    mfs: LinguisticImportance
    centroid: float
    label: str
    degree: float
    support: tuple[float, float]

    def to_dict(self) -> dict:
        return {**self.mfs.to_dict(), "label": self.label, "degree": self.degree,
                "support": list(self.support), "centroid": self.centroid}


@dataclass
class FuzzyReport:
    reference: LinguisticImportance
    models: dict[str, LinguisticImportance] = field(default_factory=dict)
    feature_models: dict[str, dict[str, LinguisticImportance]] = field(default_factory=dict)
    features: dict[str, FeatureInterpretation] = field(default_factory=dict)

    def all_mfs(self) -> list[LinguisticImportance]:
        out = [self.reference, *self.models.values()]
        for per_model in self.feature_models.values():
            out.extend(per_model.values())
        out.extend(f.mfs for f in self.features.values())
        return out

    def to_dict(self) -> dict:
        return {
            "reference": self.reference.to_dict(),
            "models": {m: li.to_dict() for m, li in self.models.items()},
            "feature_models": {f: {m: li.to_dict() for m, li in per.items()}
                               for f, per in self.feature_models.items()},
            "features": {f: fi.to_dict() for f, fi in self.features.items()},
        }


def fuzzy_report(tensor, models=None) -> FuzzyReport:
    """Membership functions for every model, every (feature, model) and every feature.

    Feature labels are read off the membership functions of all coefficients
    pooled together, so a label states importance relative to the other
    features.
    """
    models = list(models) if models is not None else tensor.models
    pooled = np.concatenate([tensor.samples(m) for m in models])
    report = FuzzyReport(build_mfs(pooled))
    for m in models:
        report.models[m] = build_mfs(tensor.samples(m))
    for j, name in enumerate(tensor.feature_names):
        per_model = {m: tensor.samples(m, j) for m in models}
        report.feature_models[name] = {m: build_mfs(s) for m, s in per_model.items()}
        mfs, centroid = aggregate_feature(per_model)
        label, degree = label_feature(report.reference, centroid)
        values = np.concatenate(list(per_model.values()))
        report.features[name] = FeatureInterpretation(
            mfs, centroid, label, degree, (float(values.min()), float(values.max())))
    return report
