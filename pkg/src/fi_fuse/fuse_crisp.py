"""Crisp decision fusion of importance vectors.

Each method takes a source matrix of shape (m, d), one row per
(model, technique, repetition) vector, and returns one coefficient per
feature. Fused values are not re-normalized.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import InsufficientSources, UnknownName

METHODS = (
    "mode",
    "median",
    "mean",
    "box_whiskers",
    "tau_test",
    "majority_vote",
    "rate_kendall",
    "rate_spearman",
)

MIN_SOURCES = {m: 2 for m in METHODS} | {"tau_test": 3, "rate_kendall": 3, "rate_spearman": 3}

KDE_GRID = np.linspace(0.0, 1.0, 512)


def _sources(sources, minimum: int = 2) -> np.ndarray:
    S = np.asarray(sources, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    if S.ndim != 2 or S.shape[0] < minimum:
        raise InsufficientSources(
            f"need at least {minimum} source vectors, got {0 if S.ndim != 2 else S.shape[0]}")
    return S


def fuse_mean(sources) -> np.ndarray:
    S = _sources(sources)
    # per-column 1-D means sum in the same order as box_whisker_mean
    return np.array([S[:, j].mean() for j in range(S.shape[1])])


def fuse_median(sources) -> np.ndarray:
    return np.median(_sources(sources), axis=0)


def silverman_bandwidth(x: np.ndarray) -> float:
    m = x.size
    sd = x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    h = 0.9 * min(sd, (q75 - q25) / 1.34) * m ** (-0.2)
    return max(h, 1e-3)


def kde_mode(x, grid: np.ndarray = KDE_GRID) -> float:
    """Argmax of a Gaussian KDE on ``grid``; the first grid point wins ties."""
    x = np.sort(np.asarray(x, dtype=float))  # order-free float sums
    h = silverman_bandwidth(x)
    dens = np.exp(-0.5 * ((grid[:, None] - x[None, :]) / h) ** 2).sum(axis=1)
    # every mode of an equal-bandwidth Gaussian mixture lies within the data range
    return float(np.clip(grid[np.argmax(dens)], x[0], x[-1]))


def fuse_mode_kde(sources) -> np.ndarray:
    S = _sources(sources)
    return np.array([kde_mode(S[:, j]) for j in range(S.shape[1])])


def box_whisker_mean(x) -> float:
    x = np.asarray(x, dtype=float)
    q1, q3 = np.percentile(x, [25, 75])
    iqr = q3 - q1
    kept = x[(x >= q1 - 1.5 * iqr) & (x <= q3 + 1.5 * iqr)]
    return float(kept.mean())


def fuse_box_whiskers(sources) -> np.ndarray:
    S = _sources(sources)
    return np.array([box_whisker_mean(S[:, j]) for j in range(S.shape[1])])


def thompson_tau(m: int, alpha: float = 0.05) -> float:
    t = stats.t.ppf(1.0 - alpha / 2.0, m - 2)
    return t * (m - 1) / (math.sqrt(m) * math.sqrt(m - 2 + t * t))


def tau_test_mean(x, alpha: float = 0.05) -> tuple[float, list[float]]:
    """Iterative Thompson tau rejection, one point per pass.

    Returns the mean of the surviving values and the rejected values in
    rejection order.
    """
    vals = list(np.sort(np.asarray(x, dtype=float)))  # order-free float sums
    rejected = []
    while len(vals) > 2:
        arr = np.array(vals)
        mu = arr.mean()
        s = arr.std(ddof=1)
        dev = np.abs(arr - mu)
        k = int(np.argmax(dev))
        if s == 0 or dev[k] <= thompson_tau(arr.size, alpha) * s:
            break
        rejected.append(vals.pop(k))
    return float(np.mean(vals)), rejected


def fuse_tau_test(sources, alpha: float = 0.05) -> np.ndarray:
    S = _sources(sources)
    return np.array([tau_test_mean(S[:, j], alpha)[0] for j in range(S.shape[1])])


def rank_rows(S: np.ndarray) -> np.ndarray:
    """Descending ranks per row, 1 = largest; ties go to the lower feature index."""
    order = np.argsort(-S, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, S.shape[1] + 1)[None, :], axis=1)
    return ranks


def fuse_majority_vote(sources, num_features: float = 1.0) -> np.ndarray:
    """Mean coefficient over the sources in which a feature held its modal rank.

    ``num_features`` in (0, 1] keeps the top ``ceil(num_features * d)`` ranks;
    the others collapse to rank ``d + 1``. Ties between modal ranks go to the
    better (smaller) rank.
    """
    S = _sources(sources)
    if not 0 < num_features <= 1:
        raise ValueError(f"num_features must lie in (0, 1], got {num_features}")
    m, d = S.shape
    top = math.ceil(num_features * d - 1e-9)
    ranks = rank_rows(S)
    ranks[ranks > top] = d + 1
    out = np.empty(d)
    for j in range(d):
        counts = np.bincount(ranks[:, j], minlength=d + 2)
        modal = int(np.argmax(counts))
        out[j] = S[ranks[:, j] == modal, j].mean()
    return out


def average_ranks(x) -> np.ndarray:
    """Ascending 1-based ranks, ties receiving the mean of their positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pair_signs(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    iu = np.triu_indices(x.size, k=1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    return sx, sy


def kendall_tau(x, y) -> float:
    """Kendall tau-b. Returns 0.0 when either vector is constant."""
    sx, sy = _pair_signs(x, y)
    s = float(np.sum(sx * sy))
    n0 = sx.size
    denom = math.sqrt(float(np.count_nonzero(sx)) * float(np.count_nonzero(sy)))
    if n0 == 0 or denom == 0:
        return 0.0
    return max(-1.0, min(1.0, s / denom))


def spearman_rho(x, y) -> float:
    """Pearson correlation of average ranks. Returns 0.0 when either vector is constant."""
    rx = average_ranks(x)
    ry = average_ranks(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        return 0.0
    return max(-1.0, min(1.0, float(rx @ ry) / denom))


@lru_cache(maxsize=None)
def _inversion_distribution(n: int) -> np.ndarray:
    """Number of permutations of n items with k inversions, k = 0 .. n(n-1)/2."""
    dist = np.array([1.0])
    for i in range(2, n + 1):
        new = np.zeros(dist.size + i - 1)
        for shift in range(i):
            new[shift:shift + dist.size] += dist
        dist = new
    return dist


def _normal_two_sided(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def _tie_groups(x) -> np.ndarray:
    _, counts = np.unique(np.asarray(x, dtype=float), return_counts=True)
    return counts[counts > 1].astype(float)


def kendall_test(x, y, exact_max: int = 10) -> tuple[float, float]:
    """tau-b and its two-sided p-value.

    Exact permutation distribution when there are no ties and n <= exact_max,
    tie-corrected normal approximation of the pair score otherwise.
    """
    tau = kendall_tau(x, y)
    n = len(x)
    sx, sy = _pair_signs(x, y)
    if n < 2 or not sx.any() or not sy.any():
        return tau, 1.0
    s = float(np.sum(sx * sy))
    tx, ty = _tie_groups(x), _tie_groups(y)
    if tx.size == 0 and ty.size == 0 and n <= exact_max:
        dist = _inversion_distribution(n)
        pairs = n * (n - 1) / 2
        score = pairs - 2 * np.arange(dist.size)        # concordant minus discordant
        p = dist[np.abs(score) >= abs(s) - 1e-9].sum() / dist.sum()
        return tau, float(min(1.0, p))
    v0 = n * (n - 1) * (2 * n + 5)
    vt = np.sum(tx * (tx - 1) * (2 * tx + 5))
    vu = np.sum(ty * (ty - 1) * (2 * ty + 5))
    v1 = np.sum(tx * (tx - 1)) * np.sum(ty * (ty - 1)) / (2.0 * n * (n - 1))
    v2 = (np.sum(tx * (tx - 1) * (tx - 2)) * np.sum(ty * (ty - 1) * (ty - 2))
          / (9.0 * n * (n - 1) * (n - 2))) if n > 2 else 0.0
    var = (v0 - vt - vu) / 18.0 + v1 + v2
    if var <= 0:
        return tau, 1.0
    return tau, _normal_two_sided(s / math.sqrt(var))


def spearman_test(x, y) -> tuple[float, float]:
    """rho and its two-sided p-value from the normal approximation z = rho * sqrt(n - 1)."""
    rho = spearman_rho(x, y)
    n = len(x)
    if n < 3:
        return rho, 1.0
    return rho, _normal_two_sided(rho * math.sqrt(n - 1))


def rate_survivors(sources, correlation: str = "kendall", alpha: float = 0.05) -> np.ndarray:
    """Boolean mask of sources positively and significantly correlated with the rest."""
    S = _sources(sources, 2)
    test = {"kendall": kendall_test, "spearman": spearman_test}.get(correlation)
    if test is None:
        raise UnknownName(f"unknown rank correlation {correlation!r}")
    m = S.shape[0]
    keep = np.zeros(m, dtype=bool)
    for i in range(m):
        # summing sorted columns keeps ties exact and the result independent of source order
        consensus = np.sort(np.delete(S, i, axis=0), axis=0).mean(axis=0)
        r, p = test(S[i], consensus)
        keep[i] = r > 0 and p < alpha
    if not keep.any():
        keep[:] = True
    return keep


def fuse_rate(sources, correlation: str = "kendall", alpha: float = 0.05,
              num_features: float = 1.0) -> np.ndarray:
    S = _sources(sources, 2)
    keep = rate_survivors(S, correlation, alpha)
    if keep.sum() == 1:
        # a single survivor holds every one of its ranks unanimously
        return S[keep][0].copy()
    return fuse_majority_vote(S[keep], num_features)


def fuse(sources, methods=METHODS, alpha: float = 0.05,
         num_features: float = 1.0) -> dict[str, np.ndarray]:
    """Apply several fusion methods to one source matrix."""
    S = np.asarray(sources, dtype=float)
    out = {}
    for method in methods:
        if method not in METHODS:
            raise UnknownName(f"unknown fusion method {method!r}; choose from {METHODS}")
        S = _sources(S, MIN_SOURCES[method])
        if method == "mode":
            out[method] = fuse_mode_kde(S)
        elif method == "median":
            out[method] = fuse_median(S)
        elif method == "mean":
            out[method] = fuse_mean(S)
        elif method == "box_whiskers":
            out[method] = fuse_box_whiskers(S)
        elif method == "tau_test":
            out[method] = fuse_tau_test(S, alpha)
        elif method == "majority_vote":
            out[method] = fuse_majority_vote(S, num_features)
        elif method == "rate_kendall":
            out[method] = fuse_rate(S, "kendall", alpha, num_features)
        else:
            out[method] = fuse_rate(S, "spearman", alpha, num_features)
    return out
