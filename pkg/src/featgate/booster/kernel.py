"""Compiled inner loops: leaf-wise tree growth over binned data, prediction.

Everything here is deliberately single-threaded and free of fastmath so
that float accumulation order is fixed and results are bit-reproducible.
Callers guarantee canonical row order; the kernels never reorder inputs
except by the documented stable partitions.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1
NO_SPLIT = -1.0


@njit(cache=True)
def grow_tree(binned, nbins, g, h, num_leaves, max_depth, min_child, lam, alpha,
              feat_out, bin_out, left_out, right_out, value_out):
    """Grow one regression tree leaf-wise; returns the node count.

    binned: (n, p) uint8 bin indices of the rows this tree trains on.
    g, h:   per-row gradient / hessian (already weighted where applicable).
    Node arrays are caller-allocated with capacity 2*num_leaves - 1.
    Split semantics: bin <= b goes left.  Ties in gain resolve to the
    lowest feature index, then the lowest bin, then the earliest leaf.
    """
    n, p = binned.shape
    depth_cap = max_depth if max_depth >= 0 else 1 << 30

    max_slots = 2 * num_leaves
    s_node = np.empty(max_slots, np.int64)
    s_start = np.empty(max_slots, np.int64)
    s_end = np.empty(max_slots, np.int64)
    s_depth = np.empty(max_slots, np.int64)
    s_g = np.empty(max_slots, np.float64)
    s_h = np.empty(max_slots, np.float64)
    s_gain = np.full(max_slots, NO_SPLIT, np.float64)
    s_feat = np.full(max_slots, -1, np.int64)
    s_bin = np.full(max_slots, -1, np.int64)
    s_alive = np.zeros(max_slots, np.bool_)

    order = np.arange(n)
    tmp = np.empty(n, np.int64)
    hist_cnt = np.empty(256, np.int64)
    hist_g = np.empty(256, np.float64)
    hist_h = np.empty(256, np.float64)

    g_tot = 0.0
    h_tot = 0.0
    for i in range(n):
        g_tot += g[i]
        h_tot += h[i]

    s_node[0] = 0
    s_start[0] = 0
    s_end[0] = n
    s_depth[0] = 0
    s_g[0] = g_tot
    s_h[0] = h_tot
    s_alive[0] = True
    n_slots = 1
    n_nodes = 1
    n_leaves_now = 1

    # best-split evaluation for a slot
    def _eval(si):
        s_gain[si] = NO_SPLIT
        s_feat[si] = -1
        s_bin[si] = -1
        start = s_start[si]
        end = s_end[si]
        cnt_total = end - start
        if cnt_total < 2 * min_child or s_depth[si] >= depth_cap:
            return
        G = s_g[si]
        H = s_h[si]
        parent_term = G * G / (H + lam)
        best_gain = 0.0
        best_f = -1
        best_b = -1
        for f in range(p):
            nb = nbins[f]
            if nb < 2:
                continue
            for b in range(nb):
                hist_cnt[b] = 0
                hist_g[b] = 0.0
                hist_h[b] = 0.0
            for i in range(start, end):
                r = order[i]
                b = binned[r, f]
                hist_cnt[b] += 1
                hist_g[b] += g[r]
                hist_h[b] += h[r]
            cl = 0
            gl = 0.0
            hl = 0.0
            for b in range(nb - 1):
                cl += hist_cnt[b]
                gl += hist_g[b]
                hl += hist_h[b]
                if cl < min_child:
                    continue
                cr = cnt_total - cl
                if cr < min_child:
                    break
                gr = G - gl
                hr = H - hl
                gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_term
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_b = b
        if best_f >= 0:
            s_gain[si] = best_gain
            s_feat[si] = best_f
            s_bin[si] = best_b

    _eval(0)

    while n_leaves_now < num_leaves:
        pick = -1
        pick_gain = 0.0
        for si in range(n_slots):
            if s_alive[si] and s_gain[si] > pick_gain:
                pick = si
                pick_gain = s_gain[si]
        if pick < 0:
            break

        node = s_node[pick]
        f = s_feat[pick]
        b = s_bin[pick]
        start = s_start[pick]
        end = s_end[pick]

        # stable partition: left block (bin <= b) then right block
        nl = 0
        nr = 0
        for i in range(start, end):
            r = order[i]
            if binned[r, f] <= b:
                order[start + nl] = r
                nl += 1
            else:
                tmp[nr] = r
                nr += 1
        for i in range(nr):
            order[start + nl + i] = tmp[i]

        gl = 0.0
        hl = 0.0
        for i in range(start, start + nl):
            r = order[i]
            gl += g[r]
            hl += h[r]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feat_out[node] = f
        bin_out[node] = b
        left_out[node] = lid
        right_out[node] = rid

        s_alive[pick] = False
        ls = n_slots
        rs = n_slots + 1
        n_slots += 2
        s_node[ls] = lid
        s_start[ls] = start
        s_end[ls] = start + nl
        s_depth[ls] = s_depth[pick] + 1
        s_g[ls] = gl
        s_h[ls] = hl
        s_alive[ls] = True
        s_node[rs] = rid
        s_start[rs] = start + nl
        s_end[rs] = end
        s_depth[rs] = s_depth[pick] + 1
        s_g[rs] = s_g[pick] - gl
        s_h[rs] = s_h[pick] - hl
        s_alive[rs] = True
        _eval(ls)
        _eval(rs)
        n_leaves_now += 1

    for si in range(n_slots):
        if not s_alive[si]:
            continue
        node = s_node[si]
        G = s_g[si]
        H = s_h[si]
        a = abs(G) - alpha
        if a <= 0.0:
            v = 0.0
        elif G > 0.0:
            v = -a / (H + lam)
        else:
            v = a / (H + lam)
        feat_out[node] = LEAF
        value_out[node] = v

    return n_nodes


@njit(cache=True)
def predict_trees(X, feat, thr, left, right, value, offsets, weights, base, out):
    """out[i] = base + sum_t weights[t] * tree_t(X[i]) over packed trees."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    for i in range(n):
        s = base
        for t in range(n_trees):
            node = offsets[t]
            while feat[node] != LEAF:
                if X[i, feat[node]] <= thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            s += weights[t] * value[node]
        out[i] = s
