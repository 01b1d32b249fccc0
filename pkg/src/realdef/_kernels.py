"""Hot table kernels: reachability, SCCs, synchronized products.

Transition tables are dense ``int32[n_states, n_labels]`` arrays.  Each
kernel has a numba ``@njit`` version and a pure-numpy/python fallback;
set ``REALDEF_PURE_PY=1`` to force the fallback path (see
``benchmarks/bench_kernels.py`` for a comparison of the two).
"""

from __future__ import annotations

import os

import numpy as np

PURE_PY = os.environ.get("REALDEF_PURE_PY", "") not in ("", "0")

if not PURE_PY:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        PURE_PY = True

_GROW = 4096


def _py_bfs_reachable(delta, init):
    n = delta.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    seen[init] = True
    frontier = np.array([init], dtype=np.int32)
    while frontier.size:
        nxt = np.unique(delta[frontier].ravel())
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    return seen


def _py_tarjan_scc(delta):
    # Iterative Tarjan; returns component ids in reverse topological order
    # (every edge goes from a component to one with a smaller or equal id).
    n, L = delta.shape
    index = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    on_stack = np.zeros(n, dtype=np.bool_)
    comp = np.full(n, -1, dtype=np.int32)
    stack = []
    next_index = 0
    n_comp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, li = work[-1]
            if li == 0:
                index[v] = low[v] = next_index
                next_index += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while li < L:
                w = delta[v, li]
                li += 1
                if index[w] == -1:
                    work[-1] = (v, li)
                    work.append((w, 0))
                    advanced = True
                    break
                elif on_stack[w]:
                    if index[w] < low[v]:
                        low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = n_comp
                    if w == v:
                        break
                n_comp += 1
            if work:
                p = work[-1][0]
                if low[v] < low[p]:
                    low[p] = low[v]
    return comp, n_comp


def _py_product_explore(d1, d2, q1, q2, max_states):
    n2 = d2.shape[0]
    L = d1.shape[1]
    seen = {}
    pairs = []

    def intern(a, b):
        key = a * n2 + b
        s = seen.get(key)
        if s is None:
            s = len(pairs)
            seen[key] = s
            pairs.append((a, b))
        return s

    intern(q1, q2)
    rows = []
    i = 0
    while i < len(pairs):
        if len(pairs) > max_states:
            return None
        a, b = pairs[i]
        ra, rb = d1[a], d2[b]
        rows.append([intern(ra[l], rb[l]) for l in range(L)])
        i += 1
    out1 = np.fromiter((p[0] for p in pairs), dtype=np.int32, count=len(pairs))
    out2 = np.fromiter((p[1] for p in pairs), dtype=np.int32, count=len(pairs))
    return np.asarray(rows, dtype=np.int32), out1, out2


if not PURE_PY:

    @njit(cache=True)
    def _nb_bfs_reachable(delta, init):
        n = delta.shape[0]
        L = delta.shape[1]
        seen = np.zeros(n, dtype=np.bool_)
        stack = np.empty(n, dtype=np.int32)
        top = 0
        seen[init] = True
        stack[top] = init
        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for l in range(L):
                w = delta[v, l]
                if not seen[w]:
                    seen[w] = True
                    stack[top] = w
                    top += 1
        return seen

    @njit(cache=True)
    def _nb_tarjan_scc(delta):
        n = delta.shape[0]
        L = delta.shape[1]
        index = np.full(n, -1, dtype=np.int64)
        low = np.zeros(n, dtype=np.int64)
        on_stack = np.zeros(n, dtype=np.bool_)
        comp = np.full(n, -1, dtype=np.int32)
        stack = np.empty(n, dtype=np.int32)
        sp = 0
        work_v = np.empty(n + 1, dtype=np.int32)
        work_l = np.empty(n + 1, dtype=np.int64)
        next_index = 0
        n_comp = 0
        for root in range(n):
            if index[root] != -1:
                continue
            wp = 0
            work_v[wp] = root
            work_l[wp] = 0
            wp += 1
            while wp > 0:
                v = work_v[wp - 1]
                li = work_l[wp - 1]
                if li == 0:
                    index[v] = next_index
                    low[v] = next_index
                    next_index += 1
                    stack[sp] = v
                    sp += 1
                    on_stack[v] = True
                advanced = False
                while li < L:
                    w = delta[v, li]
                    li += 1
                    if index[w] == -1:
                        work_l[wp - 1] = li
                        work_v[wp] = w
                        work_l[wp] = 0
                        wp += 1
                        advanced = True
                        break
                    elif on_stack[w]:
                        if index[w] < low[v]:
                            low[v] = index[w]
                if advanced:
                    continue
                wp -= 1
                if low[v] == index[v]:
                    while True:
                        sp -= 1
                        w = stack[sp]
                        on_stack[w] = False
                        comp[w] = n_comp
                        if w == v:
                            break
                    n_comp += 1
                if wp > 0:
                    p = work_v[wp - 1]
                    if low[v] < low[p]:
                        low[p] = low[v]
        return comp, n_comp

    @njit(cache=True)
    def _nb_product_dense(d1, d2, q1, q2, max_states):
        n2 = d2.shape[0]
        L = d1.shape[1]
        total = d1.shape[0] * n2
        idx = np.full(total, -1, dtype=np.int32)
        cap = 1024
        pair1 = np.empty(cap, dtype=np.int32)
        pair2 = np.empty(cap, dtype=np.int32)
        rows = np.empty((cap, L), dtype=np.int32)
        pair1[0] = q1
        pair2[0] = q2
        idx[q1 * n2 + q2] = 0
        count = 1
        i = 0
        while i < count:
            a = pair1[i]
            b = pair2[i]
            for l in range(L):
                ta = d1[a, l]
                tb = d2[b, l]
                key = np.int64(ta) * n2 + tb
                s = idx[key]
                if s == -1:
                    if count >= max_states:
                        return rows[:0], pair1[:0], pair2[:0], False
                    if count >= cap:
                        cap *= 2
                        np1 = np.empty(cap, dtype=np.int32)
                        np1[:count] = pair1[:count]
                        pair1 = np1
                        np2 = np.empty(cap, dtype=np.int32)
                        np2[:count] = pair2[:count]
                        pair2 = np2
                        nr = np.empty((cap, L), dtype=np.int32)
                        nr[:count] = rows[:count]
                        rows = nr
                    s = count
                    idx[key] = s
                    pair1[s] = ta
                    pair2[s] = tb
                    count += 1
                rows[i, l] = s
            i += 1
        return rows[:count], pair1[:count], pair2[:count], True

    @njit(cache=True)
    def _nb_run_transitions(delta, state, labels):
        out = np.empty(labels.shape[0], dtype=np.int32)
        q = state
        for i in range(labels.shape[0]):
            q = delta[q, labels[i]]
            out[i] = q
        return out


# Dense pair index only pays off while the pair space fits comfortably.
_DENSE_LIMIT = 1 << 25


def bfs_reachable(delta, init):
    if PURE_PY:
        return _py_bfs_reachable(delta, init)
    return _nb_bfs_reachable(delta, np.int32(init))


def tarjan_scc(delta):
    """Component ids, numbered so edges never go to a larger id."""
    if PURE_PY:
        return _py_tarjan_scc(delta)
    return _nb_tarjan_scc(delta)


def product_explore(d1, d2, q1, q2, max_states):
    """Reachable synchronized product; returns (rows, pair1, pair2) or None."""
    if not PURE_PY and d1.shape[0] * d2.shape[0] <= _DENSE_LIMIT:
        rows, p1, p2, ok = _nb_product_dense(
            d1, d2, np.int32(q1), np.int32(q2), np.int64(max_states)
        )
        if not ok:
            return None
        return rows, p1, p2
    return _py_product_explore(d1, d2, q1, q2, max_states)


def run_transitions(delta, state, labels):
    labels = np.asarray(labels, dtype=np.int32)
    if PURE_PY or labels.size < 64:
        out = np.empty(labels.size, dtype=np.int32)
        q = state
        for i, l in enumerate(labels):
            q = delta[q, l]
            out[i] = q
        return out
    return _nb_run_transitions(delta, np.int32(state), labels)


def moore_refine(delta, colors):
    """Refine ``colors`` until each class is closed under the signature
    (color, colors of successors).  Returns stable class ids."""
    colors = np.asarray(colors, dtype=np.int64)
    n_classes = np.unique(colors).size
    while True:
        sig = np.concatenate([colors[:, None], colors[delta]], axis=1)
        uniq, new = np.unique(sig, axis=0, return_inverse=True)
        # each new class refines an old one, so equal counts = stable partition
        if uniq.shape[0] == n_classes:
            return new
        colors = new
        n_classes = uniq.shape[0]
