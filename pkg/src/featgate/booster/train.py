"""Training loop for the gbdt / dart / goss boosting variants."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..errors import (
    DegenerateTarget,
    InvalidRates,
    NonFiniteInput,
    ShapeMismatch,
    TooFewRows,
)
from .kernel import grow_tree, predict_trees
from .model import BoostedModel, Tree
from .params import (
    DART_DROP_RATE,
    GOSS_OTHER_RATE,
    GOSS_TOP_RATE,
    N_BINS,
    HyperParams,
)

_QLEVELS = np.arange(1, N_BINS) / N_BINS


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@njit(cache=True)
def _weighted_sum(P, w, base, out):
    """out = base + w @ P with a fixed accumulation order (no BLAS)."""
    n = P.shape[1]
    for i in range(n):
        out[i] = base
    for t in range(P.shape[0]):
        wt = w[t]
        if wt != 0.0:
            for i in range(n):
                out[i] += wt * P[t, i]


def sample_rows_goss(gradients: np.ndarray, top_rate: float, other_rate: float,
                     seed) -> tuple[np.ndarray, np.ndarray]:
    """Gradient-based one-side sampling.

    Keeps the ceil(top_rate*n) largest-|gradient| rows (ties: lowest index
    first), uniformly samples ceil(other_rate*n) of the remainder, and
    amplifies the sampled rows' gradients/hessians by
    (1 - top_rate) / other_rate.  Returns (ascending indices, weights).
    """
    if top_rate <= 0.0 or other_rate <= 0.0:
        raise InvalidRates("top_rate and other_rate must both be positive")
    if top_rate + other_rate > 1.0:
        raise InvalidRates("top_rate + other_rate must not exceed 1")
    gen = _as_generator(seed)
    g = np.asarray(gradients, dtype=np.float64)
    n = len(g)
    n_top = min(math.ceil(top_rate * n), n)
    n_other = math.ceil(other_rate * n)
    order = np.argsort(-np.abs(g), kind="stable")
    top = order[:n_top]
    rest = order[n_top:]
    n_other = min(n_other, len(rest))
    if n_other:
        others = rest[gen.choice(len(rest), size=n_other, replace=False)]
    else:
        others = rest[:0]
    amplified = np.zeros(n, dtype=bool)
    amplified[others] = True
    idx = np.sort(np.concatenate([top, others]))
    weights = np.where(amplified[idx], (1.0 - top_rate) / other_rate, 1.0)
    return idx, weights


def dart_drop(trees_so_far: int, drop_rate: float,
              seed) -> tuple[np.ndarray, float, float]:
    """Independent Bernoulli drop of each prior tree.

    Returns (dropped indices, rescale factor k/(k+1) for the dropped trees,
    weight factor 1/(k+1) for the incoming tree).  k = 0 degenerates to a
    plain gbdt step: nothing rescaled, new factor 1.
    """
    gen = _as_generator(seed)
    u = gen.random(trees_so_far)
    dropped = np.flatnonzero(u < drop_rate)
    k = len(dropped)
    return dropped, k / (k + 1.0), 1.0 / (k + 1.0)


def _bin_columns(Xc: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Equal-frequency bin edges per feature; bin b holds x <= edges[b]."""
    n, p = Xc.shape
    binned = np.zeros((n, p), dtype=np.uint8)
    nbins = np.ones(p, dtype=np.int64)
    edges_list: list[np.ndarray] = []
    for j in range(p):
        edges = np.unique(np.quantile(Xc[:, j], _QLEVELS))
        edges_list.append(edges)
        binned[:, j] = np.searchsorted(edges, Xc[:, j], side="left").astype(np.uint8)
        nbins[j] = len(edges) + 1
    return binned, nbins, edges_list


def _single_tree_output(tree: Tree, Xc: np.ndarray) -> np.ndarray:
    out = np.empty(Xc.shape[0], dtype=np.float64)
    offsets = np.array([0, len(tree.feat)], dtype=np.int64)
    predict_trees(Xc, tree.feat, tree.thr, tree.left, tree.right, tree.value,
                  offsets, np.ones(1), 0.0, out)
    return out


def fit(X: np.ndarray, y: np.ndarray, hp: HyperParams, seed,
        feature_names: list[str] | None = None,
        n_jobs: int | None = None) -> BoostedModel:
    """Train a boosted ensemble; deterministic in (X, y, hp, seed).

    Rows are reordered internally into a canonical lexicographic order
    before any histogram is built, so shuffling the training rows cannot
    change the model.  n_jobs is an interface hint only; the computation
    is single-threaded and its output never depends on available cores.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X {X.shape} does not align with y {y.shape}")
    if y.size == 0:
        raise DegenerateTarget("empty target")
    if not np.isfinite(X).all():
        raise NonFiniteInput("X contains NaN or infinite cells")
    if not np.isfinite(y).all():
        raise NonFiniteInput("y contains NaN or infinite values")
    n, p = X.shape
    needed = max(2 * hp.min_child_samples, 20)
    if n < needed:
        raise TooFewRows(f"{n} rows; need at least {needed}")
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(p)]
    if len(feature_names) != p:
        raise ShapeMismatch("feature_names length mismatch")

    # canonical row order: lexicographic by (X[:,0], ..., X[:,p-1], y)
    keys = (y,) + tuple(X[:, j] for j in range(p - 1, -1, -1))
    order = np.lexsort(keys)
    Xc = np.ascontiguousarray(X[order])
    yc = y[order]

    base = float(yc.mean())
    binned, nbins, edges_list = _bin_columns(Xc)
    gen = _as_generator(seed)

    is_dart = hp.boosting_type == "dart"
    is_goss = hp.boosting_type == "goss"
    subsample = 1.0 if is_goss else hp.subsample

    cap = max(2 * hp.num_leaves - 1, 1)
    feat_buf = np.full(cap, -1, np.int64)
    bin_buf = np.full(cap, -1, np.int64)
    left_buf = np.full(cap, -1, np.int64)
    right_buf = np.full(cap, -1, np.int64)
    value_buf = np.zeros(cap, np.float64)

    trees: list[Tree] = []
    weights: list[float] = []
    losses = np.empty(hp.n_estimators, dtype=np.float64)
    pred = np.full(n, base)
    P = np.empty((hp.n_estimators, n)) if is_dart else None
    scratch = np.empty(n) if is_dart else None

    for t in range(hp.n_estimators):
        if is_dart:
            dropped, f_old, f_new = dart_drop(len(trees), DART_DROP_RATE, gen)
            w_arr = np.asarray(weights, dtype=np.float64)
            if len(dropped):
                w_arr = w_arr.copy()
                w_arr[dropped] = 0.0
            _weighted_sum(P[:t], w_arr, base, scratch)
            grad_pred = scratch
        else:
            grad_pred = pred
        g = grad_pred - yc

        if is_goss:
            idx, w_sel = sample_rows_goss(g, GOSS_TOP_RATE, GOSS_OTHER_RATE, gen)
            g_sub = g[idx] * w_sel
            h_sub = w_sel.copy()
        elif subsample < 1.0:
            m = min(math.ceil(subsample * n), n)
            idx = np.sort(gen.choice(n, size=m, replace=False))
            g_sub = g[idx]
            h_sub = np.ones(m)
        else:
            idx = None
            g_sub = g
            h_sub = np.ones(n)

        if hp.colsample_bytree < 1.0 and p > 0:
            m_f = min(math.ceil(hp.colsample_bytree * p), p)
            feats = np.sort(gen.choice(p, size=m_f, replace=False))
        else:
            feats = np.arange(p)

        b_sub = binned[:, feats] if idx is None else binned[idx][:, feats]
        b_sub = np.ascontiguousarray(b_sub)
        feat_buf[:] = -1
        n_nodes = grow_tree(
            b_sub, nbins[feats], g_sub, h_sub,
            hp.num_leaves, hp.max_depth, hp.min_child_samples,
            hp.reg_lambda, hp.reg_alpha,
            feat_buf, bin_buf, left_buf, right_buf, value_buf,
        )
        feat_local = feat_buf[:n_nodes]
        internal_idx = np.flatnonzero(feat_local >= 0)
        feat_global = np.full(n_nodes, -1, np.int64)
        if internal_idx.size:
            feat_global[internal_idx] = feats[feat_local[internal_idx]]
        thr = np.zeros(n_nodes, np.float64)
        for node in internal_idx:
            thr[node] = edges_list[feat_global[node]][bin_buf[node]]
        tree = Tree(
            feat=feat_global.astype(np.int64),
            thr=thr,
            left=left_buf[:n_nodes].copy(),
            right=right_buf[:n_nodes].copy(),
            value=value_buf[:n_nodes].copy(),
        )
        out = _single_tree_output(tree, Xc)

        if is_dart:
            if len(dropped):
                for j in dropped:
                    weights[j] *= f_old
            weights.append(hp.learning_rate * f_new)
            trees.append(tree)
            P[t] = out
            _weighted_sum(P[: t + 1], np.asarray(weights), base, pred)
        else:
            weights.append(hp.learning_rate)
            trees.append(tree)
            pred += hp.learning_rate * out
        diff = pred - yc
        losses[t] = float(np.sum(diff * diff)) / n

    return BoostedModel(
        trees=trees,
        tree_weights=np.asarray(weights, dtype=np.float64),
        base_score=base,
        params=hp,
        feature_names=list(feature_names),
        train_loss_curve=losses,
    )
