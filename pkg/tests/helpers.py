"""Shared test oracles, independent of the package's own implementations."""

from __future__ import annotations

import itertools

import numpy as np


def naive_boost_train_predictions(
    X: np.ndarray,
    y: np.ndarray,
    *,
    num_leaves: int,
    learning_rate: float,
    n_estimators: int,
    min_child_samples: int,
    reg_lambda: float = 0.0,
) -> np.ndarray:
    """Exact-split (non-histogram) leaf-wise gbdt: train-set predictions.

    Same loss, gain formula, and leaf-wise policy as the package learner but
    with split candidates at every distinct feature value instead of
    quantile bins.  Slow and simple on purpose.
    """
    n, p = X.shape
    pred = np.full(n, y.mean())

    def best_split(rows, g):
        G = g[rows].sum()
        H = float(len(rows))
        parent = G * G / (H + reg_lambda)
        bg, bf, bt = 0.0, -1, 0.0
        for f in range(p):
            o = np.argsort(X[rows, f], kind="stable")
            xs = X[rows[o], f]
            cg = np.cumsum(g[rows[o]])
            cut = np.flatnonzero(xs[:-1] < xs[1:])  # split after position i
            for i in cut:
                nl = i + 1
                nr = len(rows) - nl
                if nl < min_child_samples or nr < min_child_samples:
                    continue
                gl = cg[i]
                gr = G - gl
                gain = (gl * gl / (nl + reg_lambda)
                        + gr * gr / (nr + reg_lambda) - parent)
                if gain > bg:
                    bg, bf, bt = gain, f, xs[i]
        return bg, bf, bt

    for _ in range(n_estimators):
        g = pred - y
        leaves = [np.arange(n)]
        bests = [best_split(leaves[0], g)]
        while len(leaves) < num_leaves:
            pick, pick_gain = -1, 0.0
            for i, (bg, _, _) in enumerate(bests):
                if bg > pick_gain:
                    pick, pick_gain = i, bg
            if pick < 0:
                break
            rows = leaves[pick]
            _, f, thr = bests[pick]
            lmask = X[rows, f] <= thr
            lrows, rrows = rows[lmask], rows[~lmask]
            leaves[pick: pick + 1] = []
            bests[pick: pick + 1] = []
            leaves += [lrows, rrows]
            bests += [best_split(lrows, g), best_split(rrows, g)]
        for rows in leaves:
            G = g[rows].sum()
            pred[rows] += learning_rate * (-G / (len(rows) + reg_lambda))
    return pred


def route_rows(tree, X: np.ndarray) -> np.ndarray:
    """Leaf node index reached by each row, by direct per-row traversal."""
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while tree.feat[node] != -1:
            if X[i, tree.feat[node]] <= tree.thr[node]:
                node = int(tree.left[node])
            else:
                node = int(tree.right[node])
        out[i] = node
    return out


def r2_of(y, pred) -> float:
    y = np.asarray(y, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    return 1.0 - float(np.sum((y - pred) ** 2)) / float(np.sum((y - y.mean()) ** 2))


def u_pairwise(a, b) -> float:
    """U of the first sample by direct concordance counting.

    U = #{(i, j): a_i > b_j} + 0.5 * #{a_i == b_j}; no rank arithmetic, so
    this is an independent check of the rank-sum implementation.
    """
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def exact_u_p(a, b) -> tuple[float, float]:
    """(U, exact two-sided p) by enumerating assignments, counting pairwise.

    Every C(n1+n2, n1) way of labelling the pooled values is scored with
    u_pairwise; p = 2 * min(lower tail, upper tail) capped at 1.
    """
    pooled = list(a) + list(b)
    n1 = len(a)
    u_obs = u_pairwise(a, b)
    lo = hi = total = 0
    for combo in itertools.combinations(range(len(pooled)), n1):
        chosen = set(combo)
        ga = [pooled[i] for i in combo]
        gb = [pooled[i] for i in range(len(pooled)) if i not in chosen]
        u = u_pairwise(ga, gb)
        total += 1
        if u <= u_obs:
            lo += 1
        if u >= u_obs:
            hi += 1
    return u_obs, min(1.0, 2.0 * min(lo, hi) / total)
