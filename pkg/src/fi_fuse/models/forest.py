"""CART decision trees and random forests.

All trees of a forest are grown together, one depth level at a time: every
(tree, row) pair is a row of one flat table, and split search runs as a
segmented scan over that table. Predictions average the class frequencies
of the leaves reached in each tree.
"""

from __future__ import annotations

import math

import numpy as np

HYPERPARAMETERS = {
    "trees": 100,
    "min_leaf": 1,
    "criterion": "gini",
    "bootstrap": True,
    "max_depth": None,
    "max_features": "sqrt",
}


def validate(hp: dict) -> list[str]:
    problems = []
    if not (isinstance(hp["trees"], int) and hp["trees"] >= 1):
        problems.append("trees must be an integer >= 1")
    if not (isinstance(hp["min_leaf"], int) and hp["min_leaf"] >= 1):
        problems.append("min_leaf must be an integer >= 1")
    if hp["criterion"] not in ("gini", "entropy"):
        problems.append("criterion must be 'gini' or 'entropy'")
    if not isinstance(hp["bootstrap"], bool):
        problems.append("bootstrap must be a boolean")
    md = hp["max_depth"]
    if md is not None and not (isinstance(md, int) and md >= 1):
        problems.append("max_depth must be None or an integer >= 1")
    mf = hp["max_features"]
    if not (mf in ("sqrt", "all") or (isinstance(mf, int) and mf >= 1)):
        problems.append("max_features must be 'sqrt', 'all' or an integer >= 1")
    return problems


def _n_features(max_features, d: int) -> int:
    if max_features == "all":
        return d
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    return min(int(max_features), d)


def _weighted_impurity(counts: np.ndarray, criterion: str) -> np.ndarray:
    """n * impurity for each row of a (m, C) count matrix."""
    n = counts.sum(axis=1)
    safe = np.where(n > 0, n, 1.0)
    if criterion == "gini":
        return n - (counts * counts).sum(axis=1) / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        clog = np.where(counts > 0, counts * np.log2(np.where(counts > 0, counts, 1.0)), 0.0)
    return np.where(n > 0, n * np.log2(safe), 0.0) - clog.sum(axis=1)


def fit(X: np.ndarray, y: np.ndarray, n_classes: int, hp: dict, rng) -> dict:
    n, d = X.shape
    T = hp["trees"]
    min_leaf = hp["min_leaf"]
    criterion = hp["criterion"]
    max_depth = hp["max_depth"] if hp["max_depth"] is not None else np.inf
    mf = _n_features(hp["max_features"], d)

    if hp["bootstrap"]:
        counts = np.stack([np.bincount(rng.integers(0, n, size=n), minlength=n)
                           for _ in range(T)])
    else:
        counts = np.ones((T, n), dtype=np.int64)
    t_of, i_of = np.nonzero(counts)
    w_of = counts[t_of, i_of].astype(float)
    y_of = y[i_of]

    feature: list[np.ndarray] = []
    threshold: list[np.ndarray] = []
    left: list[np.ndarray] = []
    right: list[np.ndarray] = []
    value: list[np.ndarray] = []

    n_nodes = T
    open_ids = np.arange(T)          # global ids of nodes at the current level
    row_seg = t_of.copy()            # position of each active row's node in open_ids
    active = np.arange(len(t_of))    # rows still inside an open node
    depth = 0
    max_seen_depth = 0
    level_ids = []

    while open_ids.size:
        n_open = open_ids.size
        cnt = np.bincount(row_seg * n_classes + y_of[active], weights=w_of[active],
                          minlength=n_open * n_classes).reshape(n_open, n_classes)
        tot = cnt.sum(axis=1)
        node_imp = _weighted_impurity(cnt, criterion)
        splittable = (node_imp > 1e-12 * tot) & (tot >= 2 * min_leaf) & (depth < max_depth)

        f_best = np.full(n_open, -1)
        t_best = np.zeros(n_open)
        if splittable.any():
            keys = rng.random((n_open, d))
            chosen = np.zeros((n_open, d), dtype=bool)
            np.put_along_axis(chosen, np.argsort(keys, axis=1)[:, :mf], True, axis=1)
            chosen &= splittable[:, None]
            best = np.full(n_open, np.inf)
            for f in range(d):
                sel = chosen[row_seg, f]
                if not sel.any():
                    continue
                rows = active[sel]
                seg = row_seg[sel]
                v = X[i_of[rows], f]
                order = np.lexsort((v, seg))
                seg, v, rows = seg[order], v[order], rows[order]
                oh = np.zeros((rows.size, n_classes))
                oh[np.arange(rows.size), y_of[rows]] = w_of[rows]
                cum = np.cumsum(oh, axis=0)
                start = np.ones(rows.size, dtype=bool)
                start[1:] = seg[1:] != seg[:-1]
                starts = np.flatnonzero(start)
                base = np.zeros((n_open, n_classes))
                head = starts[starts > 0]
                base[seg[head]] = cum[head - 1]
                lcnt = cum - base[seg]
                nl = lcnt.sum(axis=1)
                nr = tot[seg] - nl
                cand = np.zeros(rows.size, dtype=bool)
                cand[:-1] = (seg[:-1] == seg[1:]) & (v[:-1] < v[1:])
                cand &= (nl >= min_leaf) & (nr >= min_leaf)
                pos = np.flatnonzero(cand)
                if pos.size == 0:
                    continue
                lc = lcnt[pos]
                rc = cnt[seg[pos]] - lc
                cost = _weighted_impurity(lc, criterion) + _weighted_impurity(rc, criterion)
                ps = seg[pos]
                o2 = np.lexsort((pos, cost, ps))
                first = np.ones(o2.size, dtype=bool)
                first[1:] = ps[o2][1:] != ps[o2][:-1]
                win = o2[first]
                s_win, c_win, p_win = ps[win], cost[win], pos[win]
                better = c_win < best[s_win]
                s_win, c_win, p_win = s_win[better], c_win[better], p_win[better]
                best[s_win] = c_win
                f_best[s_win] = f
                lo, hi = v[p_win], v[p_win + 1]
                thr = (lo + hi) / 2.0
                t_best[s_win] = np.where(thr < hi, thr, lo)

        is_split = f_best >= 0
        n_split = int(is_split.sum())
        child_base = n_nodes + 2 * np.cumsum(is_split) - 2
        l_id = np.where(is_split, child_base, open_ids)
        r_id = np.where(is_split, child_base + 1, open_ids)
        level_ids.append(open_ids)
        feature.append(f_best)
        threshold.append(t_best)
        left.append(l_id)
        right.append(r_id)
        value.append(cnt / tot[:, None])
        if n_split:
            max_seen_depth = depth + 1

        # route rows of split nodes to their children
        keep = is_split[row_seg]
        active = active[keep]
        seg_k = row_seg[keep]
        go_left = X[i_of[active], f_best[seg_k]] <= t_best[seg_k]
        child = np.where(go_left, l_id[seg_k], r_id[seg_k])
        new_ids = np.arange(n_nodes, n_nodes + 2 * n_split)
        row_seg = child - n_nodes
        open_ids = new_ids
        n_nodes += 2 * n_split
        depth += 1

    ids = np.concatenate(level_ids)
    order = np.argsort(ids)
    cat = lambda parts: np.concatenate(parts)[order]  # noqa: E731
    return {
        "feature": cat(feature).astype(np.int64),
        "threshold": cat(threshold),
        "left": cat(left).astype(np.int64),
        "right": cat(right).astype(np.int64),
        "value": np.concatenate(value)[order],
        "n_trees": T,
        "depth": max_seen_depth,
    }


def predict_proba(state: dict, X: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    feature = np.asarray(state["feature"])
    threshold = np.asarray(state["threshold"], dtype=float)
    # leaves point to themselves, so every row can take exactly `depth` steps
    child = np.stack([state["left"], state["right"]], axis=1).ravel().astype(np.int64)
    feat = np.where(feature >= 0, feature, 0)
    value = np.asarray(state["value"], dtype=float)
    T = int(state["n_trees"])
    depth = int(state["depth"])
    m, d = X.shape
    Xf = np.ascontiguousarray(X, dtype=float).ravel()
    roots = np.arange(T)
    out = np.empty((m, value.shape[1]))
    step = max(1, chunk // T)
    for s in range(0, m, step):
        e = min(m, s + step)
        offset = (np.arange(s, e) * d)[:, None]
        cur = np.broadcast_to(roots, (e - s, T))
        for _ in range(depth):
            go_right = Xf[offset + feat[cur]] > threshold[cur]
            cur = child[2 * cur + go_right]
        out[s:e] = value[cur].sum(axis=1) / T
    return out
