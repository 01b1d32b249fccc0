"""Nondeterministic Buchi intermediates: projection, saturation closures,
and determinization back to deterministic parity.

Used only inside omega-level pipelines (never exposed as a result type).
State sets are Python int bitmasks.  Two determinizations: the breakpoint
construction, exact for inherently weak inputs after closing the
acceptance set under accepting SCCs, and the compact-Safra-tree
construction to parity for everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .automaton import RelationAutomaton, alphabet, make_automaton
from .budget import EngineLimit, charge


def bits(mask: int):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


@dataclass
class Nba:
    base: int
    arity: int
    trans: list  # trans[q][lid] -> target bitmask
    initial: int  # bitmask
    acc: int  # bitmask (Buchi)

    @property
    def n_states(self):
        return len(self.trans)

    @property
    def alpha(self):
        return alphabet(self.base, self.arity)

    def step_set(self, mask: int, lid: int) -> int:
        out = 0
        for q in bits(mask):
            out |= self.trans[q][lid]
        return out


def from_deterministic(a: RelationAutomaton) -> Nba:
    """Language-preserving NBA; wdba stays structurally identical."""
    L = a.delta.shape[1]
    if a.kind == "wdba":
        trans = [[1 << int(a.delta[q, l]) for l in range(L)] for q in range(a.n_states)]
        return Nba(a.base, a.arity, trans, 1 << a.initial, _mask(a.prio == 0))
    # parity -> Buchi: guess the even priority p that is the eventual
    # minimum, then stay above p and hit p infinitely often
    evens = sorted({int(p) for p in a.prio if p % 2 == 0})
    n = a.n_states
    idx = {}
    for i, p in enumerate(evens):
        for q in range(n):
            idx[(q, p)] = n + i * n + q
    total = n + len(evens) * n
    trans = [[0] * L for _ in range(total)]
    acc = 0
    for q in range(n):
        for l in range(L):
            t = int(a.delta[q, l])
            m = 1 << t
            for p in evens:
                if a.prio[t] >= p:
                    m |= 1 << idx[(t, p)]
            trans[q][l] = m
    for p in evens:
        for q in range(n):
            s = idx[(q, p)]
            if a.prio[q] == p:
                acc |= 1 << s
            for l in range(L):
                t = int(a.delta[q, l])
                trans[s][l] = (1 << idx[(t, p)]) if a.prio[t] >= p else 0
    return Nba(a.base, a.arity, trans, 1 << a.initial, acc)


def _mask(flags) -> int:
    out = 0
    for i, f in enumerate(flags):
        if f:
            out |= 1 << i
    return out


def nba_apply_tracks(n: Nba, positions, new_arity: int) -> Nba:
    """Read the NBA off the listed tracks of a wider tape."""
    rmap = alphabet(n.base, new_arity).read_map(positions)
    trans = [[row[rmap[l]] for l in range(len(rmap))] for row in n.trans]
    return Nba(n.base, new_arity, trans, n.initial, n.acc)


def nba_erase(n: Nba, track: int) -> Nba:
    """Existentially erase one track from the labels."""
    small = alphabet(n.base, n.arity - 1)
    emap = n.alpha.erase_map(track)
    trans = []
    for row in n.trans:
        new = [0] * small.n_labels
        for lid, m in enumerate(row):
            new[emap[lid]] |= m
        trans.append(new)
    return Nba(n.base, n.arity - 1, trans, n.initial, n.acc)


def nba_product_and(n1: Nba, n2: Nba) -> Nba:
    """Intersection with the two-phase Buchi flag."""
    L = n1.alpha.n_labels
    ids = {}
    order = []

    def intern(key):
        s = ids.get(key)
        if s is None:
            s = len(order)
            ids[key] = s
            order.append(key)
        return s

    start = [intern((q1, q2, 0)) for q1 in bits(n1.initial) for q2 in bits(n2.initial)]
    trans = []
    i = 0
    while i < len(order):
        q1, q2, f = order[i]
        row = [0] * L
        for l in range(L):
            m = 0
            for t1 in bits(n1.trans[q1][l]):
                for t2 in bits(n2.trans[q2][l]):
                    if f in (0, 2):
                        nf = 1 if (n1.acc >> t1) & 1 else 0
                    else:
                        nf = 2 if (n2.acc >> t2) & 1 else 1
                    m |= 1 << intern((t1, t2, nf))
            row[l] = m
        trans.append(row)
        i += 1
        charge(len(order), "nba product")
    acc = _mask([key[2] == 2 for key in order])
    init = 0
    for s in start:
        init |= 1 << s
    return Nba(n1.base, n1.arity, trans, init, acc)


def nba_union(n1: Nba, n2: Nba) -> Nba:
    off = n1.n_states
    trans = [list(row) for row in n1.trans]
    for row in n2.trans:
        trans.append([_shift(m, off) for m in row])
    return Nba(
        n1.base,
        n1.arity,
        trans,
        n1.initial | _shift(n2.initial, off),
        n1.acc | _shift(n2.acc, off),
    )


def _shift(mask: int, off: int) -> int:
    return mask << off


def pad_closure(n: Nba) -> Nba:
    """Close the language under adding/removing redundant sign columns."""
    alpha = n.alpha
    k = n.base
    sign_labels = [
        lid
        for lid, digs in alpha.labels()
        if digs is not None and all(d in (0, k - 1) for d in digs)
    ]
    base_n = n.n_states
    init2 = base_n
    wait = {lid: base_n + 1 + i for i, lid in enumerate(sign_labels)}
    total = base_n + 1 + len(sign_labels)
    trans = [list(row) + [] for row in n.trans]
    # reach sets after reading the sign column sigma at least once
    closures = {}
    for lid in sign_labels:
        cur = n.step_set(n.initial, lid)
        while True:
            nxt = cur | n.step_set(cur, lid)
            if nxt == cur:
                break
            cur = nxt
        closures[lid] = cur
    init_row = [n.step_set(n.initial, l) for l in range(alpha.n_labels)]
    for lid in sign_labels:
        init_row[lid] |= 1 << wait[lid]
    trans.append(init_row)
    for lid in sign_labels:
        row = [n.step_set(closures[lid], l) for l in range(alpha.n_labels)]
        row[lid] |= 1 << wait[lid]
        trans.append(row)
    return Nba(n.base, n.arity, trans, 1 << init2, n.acc)


# ---------------------------------------------------------------------------
# cycle structure of an NBA


def _nba_adjacency(n: Nba):
    adj = []
    for q in range(n.n_states):
        m = 0
        for l in range(n.alpha.n_labels):
            m |= n.trans[q][l]
        adj.append(m)
    return adj


def _nba_sccs(n: Nba):
    adj = _nba_adjacency(n)
    index, low, on = {}, {}, set()
    comps, stack = [], []
    counter = [0]
    for root in range(n.n_states):
        if root in index:
            continue
        work = [(root, iter(list(bits(adj[root]))))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(list(bits(adj[w])))))
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
                comps.append(c)
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[v])
    return comps, adj


def _nba_cycle_classes(n: Nba):
    """Per SCC: (has accepting cycle, has rejecting cycle)."""
    from .minimize import _has_cycle_of_parity

    comps, adj = _nba_sccs(n)
    prio = np.array([0 if (n.acc >> q) & 1 else 1 for q in range(n.n_states)])
    out = []
    for comp in comps:
        inside = set(comp)
        a = {q: [w for w in bits(adj[q]) if w in inside] for q in comp}
        out.append(
            (
                _has_cycle_of_parity(a, inside, prio, True),
                _has_cycle_of_parity(a, inside, prio, False),
            )
        )
    return comps, out


def nba_inherently_weak(n: Nba):
    """(is weak, acceptance closed under accepting SCCs) for breakpointing."""
    comps, classes = _nba_cycle_classes(n)
    fstar = 0
    for comp, (e, o) in zip(comps, classes):
        if e and o:
            return False, 0
        if e:
            for q in comp:
                fstar |= 1 << q
    return True, fstar


# ---------------------------------------------------------------------------
# determinization


def _breakpoint_determinize(n: Nba, fstar: int) -> RelationAutomaton:
    """Exact for runs whose acceptance is 'eventually always in fstar'."""
    L = n.alpha.n_labels
    ids = {}
    order = []

    def intern(key):
        s = ids.get(key)
        if s is None:
            s = len(order)
            ids[key] = s
            order.append(key)
            charge(s, "breakpoint determinization")
        return s

    s0 = n.initial
    intern((s0, s0 & fstar, False))
    rows = []
    i = 0
    while i < len(order):
        S, O, _ = order[i]
        row = np.empty(L, dtype=np.int32)
        for l in range(L):
            S2 = n.step_set(S, l)
            O2 = n.step_set(O, l) & fstar
            if O2 == 0:
                row[l] = intern((S2, S2 & fstar, True))
            else:
                row[l] = intern((S2, O2, False))
        rows.append(row)
        i += 1
    prio = np.array([1 if bp else 2 for _, _, bp in order], dtype=np.int32)
    return make_automaton(
        n.base, n.arity, 0, np.vstack(rows), prio, kind="parity", check=False
    )


class _Tree:
    __slots__ = ("name", "label", "children")

    def __init__(self, name, label, children=None):
        self.name = name
        self.label = label
        self.children = children if children is not None else []

    def encode(self):
        return (self.name, self.label, tuple(c.encode() for c in self.children))

    @staticmethod
    def decode(enc):
        name, label, children = enc
        return _Tree(name, label, [_Tree.decode(c) for c in children])

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()


def _piterman_step(root: _Tree, next_name, n: Nba, lid: int):
    """One compact-Safra-tree transition; returns (new root or None, prio).

    Events use node names: death of name e has priority 2e-1, a vertical
    merge of name f has priority 2f; the strongest (smallest) event wins.
    """
    # 1. spawn a youngest child holding the accepting part of each label
    for v in list(root.nodes()):
        m = v.label & n.acc
        if m:
            v.children.append(_Tree(next_name[0], m))
            next_name[0] += 1

    # 2. subset transitions
    for v in root.nodes():
        v.label = n.step_set(v.label, lid)

    # 3. horizontal merge: a state survives only in the oldest sibling branch
    def strip(v, m):
        v.label &= ~m
        for c in v.children:
            strip(c, m)

    def horiz(v):
        claimed = 0
        for c in v.children:
            strip(c, claimed)
            claimed |= c.label
        for c in v.children:
            horiz(c)

    horiz(root)

    removed = []
    greened = []

    def bury(v):
        removed.append(v.name)
        for c in v.children:
            bury(c)

    if root.label == 0:
        bury(root)
        return None, 2 * min(removed) - 1

    # 4. drop empty nodes (their subtrees are empty by label nesting)
    def sweep(v):
        kept = []
        for c in v.children:
            if c.label == 0:
                bury(c)
            else:
                sweep(c)
                kept.append(c)
        v.children = kept

    sweep(root)

    # 5. vertical merge: children covering the parent turn it green
    def vert(v):
        union = 0
        for c in v.children:
            union |= c.label
        if v.children and union == v.label:
            for c in v.children:
                bury(c)
            v.children = []
            greened.append(v.name)
        else:
            for c in v.children:
                vert(c)

    vert(root)

    events = [2 * f for f in greened] + [2 * e - 1 for e in removed]
    prio = min(events) if events else None
    return root, prio


def _piterman_determinize(n: Nba) -> RelationAutomaton:
    L = n.alpha.n_labels
    neutral = 2 * (n.n_states + 2) + 1

    def canonical(root):
        # compact names to 1..m preserving order
        nodes = list(root.nodes())
        remap = {o: i + 1 for i, o in enumerate(sorted(v.name for v in nodes))}
        for v in nodes:
            v.name = remap[v.name]
        return root.encode()

    DEAD = ("dead",)
    if n.initial == 0:
        return make_automaton(
            n.base, n.arity, 0,
            np.zeros((1, L), dtype=np.int32), np.array([1], dtype=np.int32),
            kind="wdba", check=False,
        )
    enc0 = _Tree(1, n.initial).encode()
    ids = {(enc0, neutral): 0}
    order = [(enc0, neutral)]
    rows = []
    i = 0
    while i < len(order):
        enc, _ = order[i]
        row = np.empty(L, dtype=np.int32)
        for l in range(L):
            if enc == DEAD:
                key = (DEAD, 1)
            else:
                root = _Tree.decode(enc)
                next_name = [max(v.name for v in root.nodes()) + 1]
                new_root, prio = _piterman_step(root, next_name, n, l)
                if new_root is None:
                    key = (DEAD, prio)
                else:
                    key = (canonical(new_root), neutral if prio is None else prio)
            s = ids.get(key)
            if s is None:
                s = len(order)
                ids[key] = s
                order.append(key)
                charge(s, "safra determinization")
            row[l] = s
        rows.append(row)
        i += 1
    prio = np.array([p for _, p in order], dtype=np.int32)
    return make_automaton(
        n.base, n.arity, 0, np.vstack(rows), prio, kind="parity", check=False
    )


def determinize(n: Nba) -> RelationAutomaton:
    weak, fstar = nba_inherently_weak(n)
    if weak:
        return _breakpoint_determinize(n, fstar)
    return _piterman_determinize(n)


# ---------------------------------------------------------------------------
# omega-level pipelines


def saturate(a: RelationAutomaton) -> RelationAutomaton:
    """Close the language over every encoding of every accepted point."""
    from .automaton import equal_value
    from .minimize import minimize_and_classify

    if a.saturated:
        return a
    n = pad_closure(from_deterministic(a))
    E = from_deterministic(equal_value(a.base))
    for track in range(a.arity):
        wide = a.arity + 1
        n1 = nba_apply_tracks(
            n, [t if t != track else a.arity for t in range(a.arity)], wide
        )
        e1 = nba_apply_tracks(E, [a.arity, track], wide)
        n = nba_erase(nba_product_and(n1, e1), a.arity)
    out = determinize(n)
    out = make_automaton(
        out.base, out.arity, out.initial, out.delta, out.prio,
        kind=out.kind, saturated=True, check=False,
    )
    return minimize_and_classify(out)


def project_exists(a: RelationAutomaton, track: int) -> RelationAutomaton:
    """Existential projection of one track, result saturated."""
    if a.arity < 2:
        raise ValueError("projection needs arity >= 2")
    if not 0 <= track < a.arity:
        raise ValueError("track out of range")
    if not a.saturated:
        a = saturate(a)
    # erasing one track of a saturated automaton only loses padding
    # variants, recovered by the pad closure
    n = pad_closure(nba_erase(from_deterministic(a), track))
    out = determinize(n)
    out = make_automaton(
        out.base, out.arity, out.initial, out.delta, out.prio,
        kind=out.kind, saturated=True, check=False,
    )
    from .minimize import minimize_and_classify

    return minimize_and_classify(out)


def parity_product(a: RelationAutomaton, b: RelationAutomaton, mode: str, saturated=False):
    """Fallback product through NBAs when both operands are parity."""
    from .minimize import minimize_and_classify

    na, nb = from_deterministic(a), from_deterministic(b)
    n = nba_product_and(na, nb) if mode == "and" else nba_union(na, nb)
    out = determinize(n)
    out = make_automaton(
        out.base, out.arity, out.initial, out.delta, out.prio,
        kind=out.kind, saturated=saturated, check=False,
    )
    return minimize_and_classify(out)


def nba_accepts_lasso(n: Nba, prefix, period) -> bool:
    """Test oracle: does the NBA accept prefix . period^w."""
    S = n.initial
    for l in prefix:
        S = n.step_set(S, l)
    if S == 0:
        return False
    P = len(period)
    # nodes (q, position); find a reachable cycle through an accepting state
    nodes = {}
    stack = [(q, 0) for q in bits(S)]
    for node in stack:
        nodes[node] = set()
    while stack:
        q, pos = stack.pop()
        for t in bits(n.trans[q][period[pos]]):
            node = (t, (pos + 1) % P)
            nodes[(q, pos)].add(node)
            if node not in nodes:
                nodes[node] = set()
                stack.append(node)
    # tarjan over nodes
    index, low, on = {}, {}, set()
    st = []
    counter = [0]
    for root in list(nodes):
        if root in index:
            continue
        work = [(root, iter(nodes[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        st.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    st.append(w)
                    on.add(w)
                    work.append((w, iter(nodes[w])))
                    advanced = True
                    break
                elif w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = st.pop()
                    on.remove(w)
                    comp.append(w)
                    if w == v:
                        break
                cs = set(comp)
                has_edge = any(w in cs for u in comp for w in nodes[u])
                if has_edge and any((n.acc >> q) & 1 for q, _ in comp):
                    return True
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[v])
    return False
