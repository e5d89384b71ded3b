"""Flat-array CART forest kernel, numba-jitted.

Feature columns are argsorted once per fit.  A node keeps a compact list
of its distinct rows plus per-row bootstrap multiplicities; candidate
splits walk the global sorted order and skip rows outside the node via
a stamp array, so nothing is ever re-sorted while a tree grows.
Randomness comes from an internal splitmix64 stream seeded per tree, so
a tree depends only on its own seed, never on scheduling.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U64 = np.uint64
_GAMMA = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _next_u64(state):
    s = state[0] + _GAMMA
    state[0] = s
    z = (s ^ (s >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


@njit(cache=True, inline="always")
def _rand_below(state, k):
    z = _next_u64(state)
    return int(float(z >> _U64(11)) * _INV53 * k)


@njit(cache=True)
def grow_forest(XT, y, n_classes, n_trees, max_depth, min_split, min_leaf,
                mtry, bootstrap, tree_seeds):
    """Grow a forest over XT (features x rows) and label codes y.

    max_depth < 0 means unlimited.  Returns flat node arrays
    (feature, threshold, left, right, leaf) plus per-tree offsets;
    leaf[i] holds the majority class code at leaves and -1 inside.
    """
    d, n = XT.shape

    order = np.empty((d, n), np.int32)
    for f in range(d):
        order[f, :] = np.argsort(XT[f, :], kind="mergesort").astype(np.int32)

    cap = n_trees * (2 * n + 1)
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    leaf = np.full(cap, -1, np.int32)
    offsets = np.zeros(n_trees + 1, np.int32)

    rows = np.empty(n, np.int32)       # distinct rows, grouped per node
    tmp = np.empty(n, np.int32)
    cnt = np.empty(n, np.int32)        # bootstrap multiplicity per row
    in_node = np.full(n, -1, np.int64)
    node_counts = np.empty(n_classes, np.int64)
    left_counts = np.empty(n_classes, np.int64)
    perm = np.empty(d, np.int32)
    state = np.empty(1, np.uint64)

    smax = 2 * n + 8
    st_start = np.empty(smax, np.int32)
    st_end = np.empty(smax, np.int32)
    st_depth = np.empty(smax, np.int32)
    st_parent = np.empty(smax, np.int32)
    st_isleft = np.empty(smax, np.int32)

    n_nodes = 0
    for t in range(n_trees):
        offsets[t] = n_nodes
        state[0] = tree_seeds[t]

        if bootstrap:
            for i in range(n):
                cnt[i] = 0
            for _ in range(n):
                cnt[_rand_below(state, n)] += 1
        else:
            for i in range(n):
                cnt[i] = 1
        nd = 0
        for i in range(n):
            if cnt[i] > 0:
                rows[nd] = i
                nd += 1

        st_start[0] = 0
        st_end[0] = nd
        st_depth[0] = 0
        st_parent[0] = -1
        st_isleft[0] = 0
        top = 1
        while top > 0:
            top -= 1
            lo = st_start[top]
            hi = st_end[top]
            depth = st_depth[top]
            parent = st_parent[top]
            isleft = st_isleft[top]

            idx = n_nodes
            n_nodes += 1
            if parent >= 0:
                if isleft == 1:
                    left[parent] = idx
                else:
                    right[parent] = idx

            for c in range(n_classes):
                node_counts[c] = 0
            for j in range(lo, hi):
                r = rows[j]
                in_node[r] = idx
                node_counts[y[r]] += cnt[r]
            m_node = 0
            for c in range(n_classes):
                m_node += node_counts[c]

            maj = 0
            for c in range(1, n_classes):
                if node_counts[c] > node_counts[maj]:
                    maj = c

            stop = m_node < min_split or node_counts[maj] == m_node
            if max_depth >= 0 and depth >= max_depth:
                stop = True

            best_feat = -1
            best_thr = 0.0
            if not stop:
                best_proxy = -1.0
                for i in range(d):
                    perm[i] = i
                for jj in range(mtry):
                    u = jj + _rand_below(state, d - jj)
                    pf = perm[u]
                    perm[u] = perm[jj]
                    perm[jj] = pf
                    f = pf
                    for c in range(n_classes):
                        left_counts[c] = 0
                    nl = 0
                    prev_v = 0.0
                    seen = False
                    for j in range(n):
                        r = order[f, j]
                        if in_node[r] != idx:
                            continue
                        v = XT[f, r]
                        if seen and v > prev_v:
                            if nl >= min_leaf and (m_node - nl) >= min_leaf:
                                sl = 0.0
                                sr = 0.0
                                for c in range(n_classes):
                                    cl = left_counts[c]
                                    cr = node_counts[c] - cl
                                    sl += cl * cl
                                    sr += cr * cr
                                proxy = sl / nl + sr / (m_node - nl)
                                if proxy > best_proxy:
                                    thr = 0.5 * (prev_v + v)
                                    if thr >= v:
                                        thr = prev_v
                                    best_proxy = proxy
                                    best_feat = f
                                    best_thr = thr
                        left_counts[y[r]] += cnt[r]
                        nl += cnt[r]
                        prev_v = v
                        seen = True
                if best_feat < 0:
                    stop = True

            if stop:
                leaf[idx] = maj
                continue

            feature[idx] = best_feat
            threshold[idx] = best_thr

            k = 0
            for j in range(lo, hi):
                tmp[k] = rows[j]
                k += 1
            wl = lo
            nl_rows = 0
            for j in range(k):
                r = tmp[j]
                if XT[best_feat, r] <= best_thr:
                    rows[wl] = r
                    wl += 1
                    nl_rows += 1
            wr = wl
            for j in range(k):
                r = tmp[j]
                if XT[best_feat, r] > best_thr:
                    rows[wr] = r
                    wr += 1

            st_start[top] = lo + nl_rows
            st_end[top] = hi
            st_depth[top] = depth + 1
            st_parent[top] = idx
            st_isleft[top] = 0
            top += 1
            st_start[top] = lo
            st_end[top] = lo + nl_rows
            st_depth[top] = depth + 1
            st_parent[top] = idx
            st_isleft[top] = 1
            top += 1

    offsets[n_trees] = n_nodes
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
            left[:n_nodes].copy(), right[:n_nodes].copy(),
            leaf[:n_nodes].copy(), offsets)


@njit(cache=True)
def forest_votes(feature, threshold, left, right, leaf, offsets, X, n_classes):
    """Per-row class vote counts across all trees."""
    n_rows = X.shape[0]
    n_trees = offsets.shape[0] - 1
    votes = np.zeros((n_rows, n_classes), np.int64)
    for t in range(n_trees):
        root = offsets[t]
        for i in range(n_rows):
            node = root
            while leaf[node] < 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            votes[i, leaf[node]] += 1
    return votes
