"""Regression trees, random forest and gradient boosting.

One level-wise numba builder serves all three: greedy MSE splits over
midpoint thresholds, weighted min-leaf, strict-improvement rule with
ties resolved toward the lowest feature index then lowest threshold
(features and thresholds are scanned in ascending order and a split is
only adopted on a strictly larger gain).

Bootstraps enter as per-row weights and the rows are put into a canonical
lexicographic order before fitting, so RF/GBM predictions are invariant
under permutations of the training rows for a fixed seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MIN_LEAF = 5.0
N_TREES = 333
FOREST_DEPTH = 5


def max_nodes(depth: int) -> int:
    return 2 ** (depth + 1) - 1


@njit(cache=True)
def _build_tree(X, sort_idx, targets, w, max_depth, min_leaf, feat_allowed,
                node_feature, node_thresh, node_left, node_right, node_value,
                node_of_row):
    """Level-wise best-split tree builder.

    X: (n, d); sort_idx: (d, n) row order ascending per feature (stable);
    w: per-row weights, 0 excludes a row; feat_allowed: (max_nodes, d)
    feature mask per node slot.  Outputs go into the node_* arrays
    (node_feature == -1 marks a leaf); node_of_row ends as each row's leaf.
    Returns the number of nodes.
    """
    n, d = X.shape
    cap = node_feature.size
    for i in range(cap):
        node_feature[i] = -1
        node_left[i] = -1
        node_right[i] = -1
        node_value[i] = 0.0
    for r in range(n):
        node_of_row[r] = 0 if w[r] > 0.0 else -1

    n_nodes = 1
    level_start = 0
    total_w = np.zeros(cap)
    total_s = np.zeros(cap)
    cum_w = np.zeros(cap)
    cum_s = np.zeros(cap)
    prev_val = np.zeros(cap)
    started = np.zeros(cap, dtype=np.uint8)
    best_gain = np.zeros(cap)
    best_feat = np.full(cap, -1, dtype=np.int64)
    best_thresh = np.zeros(cap)

    for _level in range(max_depth):
        level_end = n_nodes
        if level_start >= level_end:
            break
        for nid in range(level_start, level_end):
            total_w[nid] = 0.0
            total_s[nid] = 0.0
        for r in range(n):
            nid = node_of_row[r]
            if nid >= level_start:
                total_w[nid] += w[r]
                total_s[nid] += w[r] * targets[r]
        for nid in range(level_start, level_end):
            if total_w[nid] > 0.0:
                best_gain[nid] = total_s[nid] * total_s[nid] / total_w[nid]
            else:
                best_gain[nid] = 0.0
            best_feat[nid] = -1

        for f in range(d):
            for nid in range(level_start, level_end):
                cum_w[nid] = 0.0
                cum_s[nid] = 0.0
                started[nid] = 0
            for pos in range(n):
                r = sort_idx[f, pos]
                nid = node_of_row[r]
                if nid < level_start or w[r] == 0.0:
                    continue
                if not feat_allowed[nid, f]:
                    continue
                v = X[r, f]
                if started[nid] == 1 and v > prev_val[nid]:
                    wl = cum_w[nid]
                    wr = total_w[nid] - wl
                    if wl >= min_leaf and wr >= min_leaf:
                        sl = cum_s[nid]
                        sr = total_s[nid] - sl
                        gain = sl * sl / wl + sr * sr / wr
                        if gain > best_gain[nid]:
                            best_gain[nid] = gain
                            best_feat[nid] = f
                            best_thresh[nid] = 0.5 * (prev_val[nid] + v)
                cum_w[nid] += w[r]
                cum_s[nid] += w[r] * targets[r]
                prev_val[nid] = v
                started[nid] = 1

        any_split = False
        for nid in range(level_start, level_end):
            if best_feat[nid] >= 0:
                node_feature[nid] = best_feat[nid]
                node_thresh[nid] = best_thresh[nid]
                node_left[nid] = n_nodes
                node_right[nid] = n_nodes + 1
                n_nodes += 2
                any_split = True
        for r in range(n):
            nid = node_of_row[r]
            if nid >= level_start and node_feature[nid] >= 0:
                if X[r, node_feature[nid]] <= node_thresh[nid]:
                    node_of_row[r] = node_left[nid]
                else:
                    node_of_row[r] = node_right[nid]
        level_start = level_end
        if not any_split:
            break

    for nid in range(n_nodes):
        total_w[nid] = 0.0
        total_s[nid] = 0.0
    for r in range(n):
        nid = node_of_row[r]
        if nid >= 0:
            total_w[nid] += w[r]
            total_s[nid] += w[r] * targets[r]
    for nid in range(n_nodes):
        if node_feature[nid] < 0 and total_w[nid] > 0.0:
            node_value[nid] = total_s[nid] / total_w[nid]
    return n_nodes


@njit(cache=True)
def _predict_tree(X, node_feature, node_thresh, node_left, node_right,
                  node_value, out):
    for r in range(X.shape[0]):
        nid = 0
        while node_feature[nid] >= 0:
            if X[r, node_feature[nid]] <= node_thresh[nid]:
                nid = node_left[nid]
            else:
                nid = node_right[nid]
        out[r] = node_value[nid]


@njit(cache=True)
def _predict_forest(X, features, threshs, lefts, rights, values, scale, init, out):
    n_trees = features.shape[0]
    for r in range(X.shape[0]):
        acc = init
        for t in range(n_trees):
            nid = 0
            while features[t, nid] >= 0:
                if X[r, features[t, nid]] <= threshs[t, nid]:
                    nid = lefts[t, nid]
                else:
                    nid = rights[t, nid]
            acc += scale * values[t, nid]
        out[r] = acc


@njit(cache=True)
def _fit_gbm_trees(X, sort_idx, y, n_trees, max_depth, min_leaf, lr,
                   feat_allowed, features, threshs, lefts, rights, values):
    n = X.shape[0]
    w = np.ones(n)
    resid = y.copy()
    node_of_row = np.zeros(n, dtype=np.int64)
    for t in range(n_trees):
        _build_tree(X, sort_idx, resid, w, max_depth, min_leaf, feat_allowed,
                    features[t], threshs[t], lefts[t], rights[t], values[t],
                    node_of_row)
        for r in range(n):
            resid[r] -= lr * values[t, node_of_row[r]]


@njit(cache=True)
def _fit_rf_trees(X, sort_idx, y, boot_w, feat_allowed, max_depth, min_leaf,
                  features, threshs, lefts, rights, values):
    n = X.shape[0]
    node_of_row = np.zeros(n, dtype=np.int64)
    for t in range(boot_w.shape[0]):
        _build_tree(X, sort_idx, y, boot_w[t], max_depth, min_leaf,
                    feat_allowed[t], features[t], threshs[t], lefts[t],
                    rights[t], values[t], node_of_row)


def _presort(X: np.ndarray) -> np.ndarray:
    return np.argsort(X.T, axis=1, kind="stable").astype(np.int64)


def canonical_order(Xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Lexicographic row order over (features, label): makes bootstrap draws
    a function of row content rather than row position."""
    # np.lexsort treats the last key as primary; order by col 0, col 1, ..., y
    keys = (ys,) + tuple(Xs[:, j] for j in range(Xs.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


def _alloc_trees(n_trees: int, depth: int):
    cap = max_nodes(depth)
    return (np.empty((n_trees, cap), dtype=np.int64),
            np.empty((n_trees, cap)),
            np.empty((n_trees, cap), dtype=np.int64),
            np.empty((n_trees, cap), dtype=np.int64),
            np.empty((n_trees, cap)))


def draw_bootstrap_counts(rng: np.random.Generator, n_trees: int, n: int) -> np.ndarray:
    out = np.empty((n_trees, n))
    for t in range(n_trees):
        out[t] = np.bincount(rng.integers(0, n, n), minlength=n)
    return out


def draw_feature_masks(rng: np.random.Generator, n_trees: int, depth: int,
                       d: int, k: int) -> np.ndarray:
    cap = max_nodes(depth)
    scores = rng.random((n_trees, cap, d))
    keep = np.argsort(scores, axis=2, kind="stable")[:, :, :k]
    masks = np.zeros((n_trees, cap, d), dtype=np.bool_)
    rows = np.arange(n_trees)[:, None, None]
    slots = np.arange(cap)[None, :, None]
    masks[rows, slots, keep] = True
    return masks


def fit_cart(Xs, ys, hyper, seed):
    depth = int(hyper["max_depth"])
    X = np.ascontiguousarray(Xs)
    features, threshs, lefts, rights, values = _alloc_trees(1, depth)
    allowed = np.ones((max_nodes(depth), X.shape[1]), dtype=np.bool_)
    node_of_row = np.zeros(X.shape[0], dtype=np.int64)
    _build_tree(X, _presort(X), np.ascontiguousarray(ys), np.ones(X.shape[0]),
                depth, MIN_LEAF, allowed, features[0], threshs[0], lefts[0],
                rights[0], values[0], node_of_row)
    return {"features": features, "threshs": threshs, "lefts": lefts,
            "rights": rights, "values": values, "scale": 1.0, "init": 0.0,
            "depth": depth}


def fit_rf(Xs, ys, hyper, seed):
    order = canonical_order(Xs, ys)
    X = np.ascontiguousarray(Xs[order])
    y = np.ascontiguousarray(ys[order])
    n, d = X.shape
    k = int(np.ceil(d / 3.0))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, n)))
    boot = draw_bootstrap_counts(rng, N_TREES, n)
    masks = draw_feature_masks(rng, N_TREES, FOREST_DEPTH, d, k)
    features, threshs, lefts, rights, values = _alloc_trees(N_TREES, FOREST_DEPTH)
    _fit_rf_trees(X, _presort(X), y, boot, masks, FOREST_DEPTH, MIN_LEAF,
                  features, threshs, lefts, rights, values)
    return {"features": features, "threshs": threshs, "lefts": lefts,
            "rights": rights, "values": values, "scale": 1.0 / N_TREES,
            "init": 0.0, "depth": FOREST_DEPTH}


def fit_gbm(Xs, ys, hyper, seed):
    order = canonical_order(Xs, ys)
    X = np.ascontiguousarray(Xs[order])
    y = np.ascontiguousarray(ys[order])
    lr = float(hyper["lr"])
    init = float(y.mean())
    allowed = np.ones((max_nodes(FOREST_DEPTH), X.shape[1]), dtype=np.bool_)
    features, threshs, lefts, rights, values = _alloc_trees(N_TREES, FOREST_DEPTH)
    _fit_gbm_trees(X, _presort(X), y - init, N_TREES, FOREST_DEPTH, MIN_LEAF,
                   lr, allowed, features, threshs, lefts, rights, values)
    return {"features": features, "threshs": threshs, "lefts": lefts,
            "rights": rights, "values": values, "scale": lr, "init": init,
            "depth": FOREST_DEPTH}


def predict_trees(params, Xs):
    out = np.empty(Xs.shape[0])
    _predict_forest(np.ascontiguousarray(Xs), params["features"],
                    params["threshs"], params["lefts"], params["rights"],
                    params["values"], params["scale"], params["init"], out)
    return out
