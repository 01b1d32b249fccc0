"""State-space reduction and acceptance classification.

Weak-recognizable languages get the canonical minimal wdba (rank
normalization over the SCC condensation, then Moore minimization, so
language-equivalent inputs minimize to isomorphic automata).  Genuinely
non-weak parity automata are bisimulation-reduced with compacted
priorities.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .automaton import RelationAutomaton, canonical_order, make_automaton


def _scc_partition(delta):
    comp, n_comp = K.tarjan_scc(delta)
    return np.asarray(comp), n_comp


def _comp_adjacency(delta, members):
    """Internal adjacency lists of one strongly connected block."""
    inside = set(members)
    adj = {}
    for q in members:
        adj[q] = sorted({int(t) for t in delta[q] if int(t) in inside})
    return adj


def _sub_sccs(adj, nodes):
    index, low, on = {}, {}, set()
    out, stack = [], []
    counter = [0]
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in adj:
                    continue
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                elif w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                c = []
                while True:
                    w = stack.pop()
                    on.remove(w)
                    c.append(w)
                    if w == v:
                        break
                out.append(c)
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[v])
    return out


def _has_cycle_of_parity(adj, nodes, prio, want_even):
    """Does the strongly connected block contain a cycle whose minimal
    priority has the requested parity?"""
    has_edge = any(w in nodes for q in nodes for w in adj[q])
    if not has_edge:
        return False
    m = min(int(prio[q]) for q in nodes)
    if (m % 2 == 0) == want_even:
        return True
    rest = [q for q in nodes if int(prio[q]) != m]
    sub_adj = {q: [w for w in adj[q] if w in set(rest)] for q in rest}
    for comp in _sub_sccs(sub_adj, rest):
        if len(comp) > 1 or comp[0] in sub_adj[comp[0]]:
            if _has_cycle_of_parity(sub_adj, set(comp), prio, want_even):
                return True
    return False


def scc_cycle_classes(a: RelationAutomaton):
    """Per-SCC pair (has accepting cycle, has rejecting cycle)."""
    comp, n_comp = _scc_partition(a.delta)
    members = [[] for _ in range(n_comp)]
    for q in range(a.n_states):
        members[comp[q]].append(q)
    classes = []
    for mem in members:
        adj = _comp_adjacency(a.delta, mem)
        nodes = set(mem)
        classes.append(
            (
                _has_cycle_of_parity(adj, nodes, a.prio, True),
                _has_cycle_of_parity(adj, nodes, a.prio, False),
            )
        )
    return comp, classes


def inherently_weak(a: RelationAutomaton) -> bool:
    _, classes = scc_cycle_classes(a)
    return all(not (e and o) for e, o in classes)


def _weak_minimize(a: RelationAutomaton) -> RelationAutomaton:
    """Canonical minimal wdba; requires an inherently weak input."""
    comp, classes = scc_cycle_classes(a)
    n_comp = len(classes)
    # condensation successors; tarjan ids already reverse-topological
    succ = [set() for _ in range(n_comp)]
    for q in range(a.n_states):
        for t in np.unique(a.delta[q]):
            if comp[q] != comp[t]:
                succ[comp[q]].add(int(comp[t]))
    rank = np.zeros(n_comp, dtype=np.int64)
    for c in range(n_comp):
        floor_ = max((rank[s] for s in succ[c]), default=0)
        has_even, has_odd = classes[c]
        if not has_even and not has_odd:
            rank[c] = floor_  # transient: parity free
        elif has_even:
            rank[c] = floor_ + (floor_ % 2)
        else:
            rank[c] = floor_ + 1 - (floor_ % 2)
    colors = rank[comp]
    classes_of = K.moore_refine(a.delta, colors)
    n_cls = int(classes_of.max()) + 1
    rep = np.zeros(n_cls, dtype=np.int64)
    rep[classes_of] = np.arange(a.n_states)
    delta = classes_of[a.delta[rep]]
    prio = (colors[rep] % 2).astype(np.int32)
    out = make_automaton(
        a.base, a.arity, int(classes_of[a.initial]), delta, prio,
        kind="wdba", saturated=a.saturated, check=False,
    )
    return canonical_order(out)


def _compact_priorities(prio: np.ndarray) -> np.ndarray:
    vals = np.unique(prio)
    out_vals = []
    for p in vals:
        if not out_vals:
            out_vals.append(int(p) & 1)
        else:
            prev = out_vals[-1]
            out_vals.append(prev + 1 if (int(p) & 1) != (prev & 1) else prev + 2)
    mapping = dict(zip(vals.tolist(), out_vals))
    return np.array([mapping[int(p)] for p in prio], dtype=np.int32)


def bisim_reduce(a: RelationAutomaton) -> RelationAutomaton:
    """Quotient by priority-sensitive bisimulation (language-preserving)."""
    classes_of = K.moore_refine(a.delta, a.prio.astype(np.int64))
    n_cls = int(classes_of.max()) + 1
    if n_cls == a.n_states:
        return a
    rep = np.zeros(n_cls, dtype=np.int64)
    rep[classes_of] = np.arange(a.n_states)
    delta = classes_of[a.delta[rep]]
    prio = a.prio[rep]
    return make_automaton(
        a.base, a.arity, int(classes_of[a.initial]), delta, prio,
        kind=a.kind, saturated=a.saturated, check=False,
    )


def minimize_and_classify(a: RelationAutomaton) -> RelationAutomaton:
    """Canonical minimal wdba when the language is weak-recognizable via
    the automaton's cycle structure, else a reduced parity automaton."""
    a = canonical_order(a)  # trims unreachable states
    a = bisim_reduce(a)
    if inherently_weak(a):
        return _weak_minimize(a)
    out = make_automaton(
        a.base, a.arity, a.initial, a.delta, _compact_priorities(a.prio),
        kind="parity", saturated=a.saturated, check=False,
    )
    return canonical_order(out)
