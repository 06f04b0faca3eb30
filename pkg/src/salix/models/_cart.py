"""Compiled CART kernels (build and traverse) shared by tree, forest and GBT.

A tree is stored as flat arrays indexed by node id, root at 0:
``feature`` (-1 marks a leaf), ``threshold``, ``left``, ``right``, ``value``
and ``gain`` (weighted squared-error reduction of the split).  Rows with
``x <= threshold`` go left.
"""

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True)
def presort(X):
    """Per-feature row order, shape (p, n)."""
    n, p = X.shape
    out = np.empty((p, n), dtype=np.int64)
    for f in range(p):
        out[f] = np.argsort(X[:, f], kind="mergesort")
    return out


@njit(cache=True)
def build_tree(X, y, sw, cnt, order, max_depth, min_samples_leaf, min_weight_split,
               n_sub_features, lam, seed):
    """Grow one tree over the rows with ``cnt > 0``.

    ``order`` is ``presort(X)``.  Each feature keeps its rows sorted within
    node segments; splitting stably partitions every segment, so no sorting
    happens below the root.
    """
    n, p = X.shape
    m = 0
    for i in range(n):
        if cnt[i] > 0:
            m += 1
    srt = np.empty((p, m), dtype=np.int64)
    for f in range(p):
        k = 0
        for i in range(n):
            r = order[f, i]
            if cnt[r] > 0:
                srt[f, k] = r
                k += 1
    Xt = np.ascontiguousarray(X.T)
    buf = np.empty(m, dtype=np.int64)
    goes_left = np.zeros(n, dtype=np.bool_)

    cap = 2 * m + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    gain = np.zeros(cap)

    # pending nodes: id, start, end, depth
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    np.random.seed(seed)
    feats = np.arange(p)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]

        W = 0.0
        S = 0.0
        C = 0
        for k in range(start, end):
            r = srt[0, k]
            W += sw[r]
            S += sw[r] * y[r]
            C += cnt[r]
        value[node] = S / (W + lam) if W + lam > 0 else 0.0
        if depth >= max_depth or C < 2 * min_samples_leaf or W < min_weight_split or W <= 0:
            continue
        mean = S / W
        sse = 0.0
        for k in range(start, end):
            r = srt[0, k]
            d = y[r] - mean
            sse += sw[r] * d * d
        if sse <= 1e-14 * W * (1.0 + mean * mean):
            continue

        # partial Fisher-Yates draw of the candidate features
        k_feats = n_sub_features if n_sub_features < p else p
        if k_feats < p:
            for a in range(k_feats):
                b = a + np.random.randint(0, p - a)
                t = feats[a]
                feats[a] = feats[b]
                feats[b] = t
        cand = feats[:k_feats].copy()
        cand.sort()

        base = S * S / (W + lam)
        best_gain = 1e-10 * sse
        best_f = -1
        best_thr = 0.0
        best_sse_gain = 0.0
        for fi in range(k_feats):
            f = cand[fi]
            wl = 0.0
            sl = 0.0
            cl = 0
            for k in range(start, end - 1):
                r = srt[f, k]
                wl += sw[r]
                sl += sw[r] * y[r]
                cl += cnt[r]
                v0 = Xt[f, r]
                v1 = Xt[f, srt[f, k + 1]]
                if v0 == v1:
                    continue
                if cl < min_samples_leaf or C - cl < min_samples_leaf:
                    continue
                wr = W - wl
                sr = S - sl
                if wl + lam <= 0 or wr + lam <= 0:
                    continue
                g = sl * sl / (wl + lam) + sr * sr / (wr + lam) - base
                if g > best_gain:
                    best_gain = g
                    best_f = f
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1:
                        thr = v0
                    best_thr = thr
                    if wl > 0 and wr > 0:
                        best_sse_gain = sl * sl / wl + sr * sr / wr - S * S / W
                    else:
                        best_sse_gain = 0.0
        if best_f < 0:
            continue

        n_left = 0
        for k in range(start, end):
            r = srt[0, k]
            gl = Xt[best_f, r] <= best_thr
            goes_left[r] = gl
            if gl:
                n_left += 1
        for f in range(p):
            lo = 0
            hi = n_left
            for k in range(start, end):
                r = srt[f, k]
                if goes_left[r]:
                    buf[lo] = r
                    lo += 1
                else:
                    buf[hi] = r
                    hi += 1
            for k in range(end - start):
                srt[f, start + k] = buf[k]

        feature[node] = best_f
        threshold[node] = best_thr
        gain[node] = best_sse_gain if best_sse_gain > 0 else 0.0
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        # right pushed first so the left subtree is expanded first
        stack[top, 0] = rid
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), gain[:n_nodes].copy())


@njit(cache=True)
def predict_tree(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True)
def pack_ensemble(offsets, feature, threshold, left, right, value):
    """Re-lay trees breadth first so siblings are adjacent.

    Returns ``(offsets, feature, thr, child)`` where a split node's children
    sit at ``child`` and ``child + 1`` (tree-local) and a leaf keeps its
    value in ``thr``.
    """
    n_trees = offsets.size - 1
    total = offsets[-1]
    f_out = np.empty(total, dtype=np.int32)
    t_out = np.empty(total)
    c_out = np.zeros(total, dtype=np.int32)
    queue = np.empty(total, dtype=np.int64)
    for t in range(n_trees):
        o = offsets[t]
        queue[o] = 0
        tail = 1
        head = 0
        while head < tail:
            nd = queue[o + head]
            k = o + head
            head += 1
            if feature[o + nd] == LEAF:
                f_out[k] = LEAF
                t_out[k] = value[o + nd]
            else:
                f_out[k] = feature[o + nd]
                t_out[k] = threshold[o + nd]
                c_out[k] = tail
                queue[o + tail] = left[o + nd]
                queue[o + tail + 1] = right[o + nd]
                tail += 2
    return offsets, f_out, t_out, c_out


@njit(cache=True)
def predict_ensemble(X, offsets, feature, thr, child):
    """Sum of tree outputs over a packed ensemble (see :func:`pack_ensemble`).

    Rows are processed in blocks so one tree stays cache-resident across
    the block.
    """
    n = X.shape[0]
    n_trees = offsets.size - 1
    out = np.zeros(n)
    block = 1024
    for s in range(0, n, block):
        e = min(n, s + block)
        for t in range(n_trees):
            o = offsets[t]
            for i in range(s, e):
                node = o
                f = feature[node]
                while f >= 0:
                    node = o + child[node] + (X[i, f] > thr[node])
                    f = feature[node]
                out[i] += thr[node]
    return out
