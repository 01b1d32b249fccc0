"""Deterministic omega-automata over n-track base-k encodings of R^n.

A word encodes a point of R^n as synchronized digit tracks: one or more
sign columns (digit 0 on nonnegative tracks, k-1 on negative ones, k's
complement), then integer digit columns most-significant first, a single
radix column ``*`` shared by all tracks, and an infinite fractional tail.
Every real has infinitely many encodings (left padding, dual digit
tails); an automaton is *saturated* when it accepts all encodings of
each point it accepts under one of them.

Acceptance is uniformly min-even parity; ``kind == "wdba"`` marks weak
automata (priorities in {0, 1}, SCC-homogeneous), which admit canonical
minimization and O(1) complementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm

import numpy as np

from . import _kernels as K
from .budget import EngineLimit, charge

RationalVector = tuple  # n exact Fractions

STAR = None  # sentinel for the radix column in digit-tuple form


class Alphabet:
    """Label indexing for (base, arity): digit tuples, then the star column."""

    def __init__(self, base: int, arity: int):
        if base < 2:
            raise ValueError("base must be >= 2")
        if arity < 1:
            raise ValueError("arity must be >= 1")
        self.base = base
        self.arity = arity
        self.star = base**arity
        self.n_labels = self.star + 1
        shifts = base ** np.arange(arity - 1, -1, -1, dtype=np.int64)
        grid = np.indices((base,) * arity).reshape(arity, -1).T
        self.digits = np.ascontiguousarray(grid, dtype=np.int8)
        self._shifts = shifts

    def id_of(self, digits) -> int:
        if digits is STAR:
            return self.star
        return int(np.dot(np.asarray(digits, dtype=np.int64), self._shifts))

    def digits_of(self, lid: int):
        if lid == self.star:
            return STAR
        return tuple(int(d) for d in self.digits[lid])

    def labels(self):
        """Iterate (label id, digit tuple or STAR)."""
        for lid in range(self.star):
            yield lid, tuple(int(d) for d in self.digits[lid])
        yield self.star, STAR

    def read_map(self, positions) -> np.ndarray:
        """Map each label of this alphabet to the label of the
        (base, len(positions)) alphabet read off the given tracks."""
        small = alphabet(self.base, len(positions))
        sel = self.digits[:, list(positions)].astype(np.int64)
        ids = sel @ small._shifts
        out = np.empty(self.n_labels, dtype=np.int32)
        out[: self.star] = ids
        out[self.star] = small.star
        return out

    def erase_map(self, track: int) -> np.ndarray:
        keep = [t for t in range(self.arity) if t != track]
        return self.read_map(keep)

    def label_str(self, lid: int) -> str:
        if lid == self.star:
            return "*" * self.arity
        return "".join(str(int(d)) for d in self.digits[lid])


@lru_cache(maxsize=None)
def alphabet(base: int, arity: int) -> Alphabet:
    return Alphabet(base, arity)


@dataclass(frozen=True, eq=False)
class RelationAutomaton:
    """Deterministic, complete automaton denoting a subset of R^arity."""

    base: int
    arity: int
    kind: str  # "wdba" | "parity"
    initial: int
    delta: np.ndarray  # int32 [n_states, n_labels]
    prio: np.ndarray  # int32 [n_states]; min-even parity, wdba uses {0,1}
    saturated: bool = False

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    @property
    def alpha(self) -> Alphabet:
        return alphabet(self.base, self.arity)

    def __repr__(self):
        sat = ", saturated" if self.saturated else ""
        return (
            f"<RelationAutomaton base={self.base} arity={self.arity} "
            f"{self.kind} states={self.n_states}{sat}>"
        )


def make_automaton(
    base,
    arity,
    initial,
    delta,
    prio,
    kind=None,
    saturated=False,
    check=True,
) -> RelationAutomaton:
    delta = np.ascontiguousarray(delta, dtype=np.int32)
    prio = np.ascontiguousarray(prio, dtype=np.int32)
    n, L = delta.shape
    if L != base**arity + 1:
        raise ValueError("transition table does not match alphabet size")
    if check:
        if delta.min() < 0 or delta.max() >= n:
            raise ValueError("transition target out of range")
        if prio.min() < 0:
            raise ValueError("negative priority")
    if kind is None:
        kind = "wdba" if prio.max(initial=0) <= 1 and _scc_homogeneous(delta, prio) else "parity"
    elif kind == "wdba" and check:
        if prio.max(initial=0) > 1:
            raise ValueError("wdba priorities must be 0/1")
        if not _scc_homogeneous(delta, prio):
            raise ValueError("SCC-inhomogeneity: automaton is not weak")
    delta.setflags(write=False)
    prio.setflags(write=False)
    return RelationAutomaton(base, arity, kind, int(initial), delta, prio, bool(saturated))


def _scc_homogeneous(delta, prio) -> bool:
    comp, n_comp = K.tarjan_scc(delta)
    flags = np.full(n_comp, -1, dtype=np.int64)
    for q in range(delta.shape[0]):
        c = comp[q]
        if flags[c] == -1:
            flags[c] = prio[q]
        elif flags[c] != prio[q]:
            return False
    return True


# ---------------------------------------------------------------------------
# explicit small machines


def build_deterministic(
    base, arity, start_key, step, prio_of, kind="wdba", saturated=False
) -> RelationAutomaton:
    """Materialize a machine given by key-level ``step``/``prio_of``.

    ``step(key, digits_or_STAR)`` returns the successor key or None for
    the dead sink; ``prio_of(key)`` assigns the min-even priority.
    """
    alpha = alphabet(base, arity)
    ids = {start_key: 0}
    order = [start_key]
    rows = []
    i = 0
    while i < len(order):
        key = order[i]
        row = np.empty(alpha.n_labels, dtype=np.int32)
        for lid, digs in alpha.labels():
            nxt = step(key, digs)
            if nxt is None:
                row[lid] = -1
            else:
                s = ids.get(nxt)
                if s is None:
                    s = len(order)
                    ids[nxt] = s
                    order.append(nxt)
                    charge(s, "build_deterministic")
                row[lid] = s
        rows.append(row)
        i += 1
    n = len(order)
    delta = np.vstack(rows)
    dead = n
    delta[delta == -1] = dead
    delta = np.vstack([delta, np.full((1, alpha.n_labels), dead, dtype=np.int32)])
    prio = np.array([prio_of(key) for key in order] + [1], dtype=np.int32)
    return make_automaton(base, arity, 0, delta, prio, kind=kind, saturated=saturated)


def well_formed(base: int, arity: int) -> RelationAutomaton:
    """All well-formed encodings: sign column(s), digits, one star, tail."""

    def step(key, digs):
        if key == "sign":
            if digs is STAR:
                return None
            return "int" if all(d in (0, base - 1) for d in digs) else None
        if key == "int":
            return "frac" if digs is STAR else "int"
        # frac
        return None if digs is STAR else "frac"

    return build_deterministic(
        base, arity, "sign", step, lambda k: 0 if k == "frac" else 1, saturated=True
    )


def equal_value(base: int) -> RelationAutomaton:
    """Binary relation: both tracks encode the same real (same star column).

    Tracks the scaled prefix difference D; D stays in {-1, 0, 1} exactly on
    pairs that can still agree, which absorbs the dual-tail pairs
    d(k-1)^w ~ (d+1)0^w including flips across the sign digit.
    """
    k = base

    def head(d):
        return {0: 0, k - 1: -1}.get(d)

    def step(key, digs):
        phase, D = key
        if phase == "sign":
            if digs is STAR:
                return None
            a, b = head(digs[0]), head(digs[1])
            if a is None or b is None:
                return None
            return ("int", a - b)
        if digs is STAR:
            return ("frac", D) if phase == "int" else None
        D2 = k * D + (digs[0] - digs[1])
        return (phase, D2) if -1 <= D2 <= 1 else None

    def prio_of(key):
        return 0 if key[0] == "frac" else 1

    return build_deterministic(base, 2, ("sign", 0), step, prio_of, saturated=True)


# ---------------------------------------------------------------------------
# boolean algebra


def _check_compatible(a: RelationAutomaton, b: RelationAutomaton):
    if a.base != b.base:
        raise ValueError(f"base mismatch: {a.base} vs {b.base}")
    if a.arity != b.arity:
        raise ValueError(f"arity mismatch: {a.arity} vs {b.arity}")


def product(a: RelationAutomaton, b: RelationAutomaton, mode: str) -> RelationAutomaton:
    """Synchronized product; mode "and" or "or"."""
    _check_compatible(a, b)
    if mode not in ("and", "or"):
        raise ValueError("mode must be 'and' or 'or'")
    sat = a.saturated and b.saturated
    if a.kind == "wdba" and b.kind == "wdba":
        res = K.product_explore(a.delta, b.delta, a.initial, b.initial, _pair_budget())
        if res is None:
            raise EngineLimit("product: state budget exceeded")
        rows, p1, p2 = res
        pa, pb = a.prio[p1], b.prio[p2]
        prio = np.maximum(pa, pb) if mode == "and" else np.minimum(pa, pb)
        return make_automaton(
            a.base, a.arity, 0, rows, prio, kind="wdba", saturated=sat, check=False
        )
    if a.kind == "wdba":
        a, b = b, a
    if b.kind == "wdba":
        # weak side settles in a homogeneous SCC; mask its verdict in
        res = K.product_explore(a.delta, b.delta, a.initial, b.initial, _pair_budget())
        if res is None:
            raise EngineLimit("product: state budget exceeded")
        rows, p1, p2 = res
        pa = a.prio[p1].astype(np.int64)
        top = int(pa.max(initial=0)) + 1
        if mode == "and":
            odd_big = top | 1
            prio = np.where(b.prio[p2] == 0, pa, odd_big)
        else:
            even_big = top + (top & 1)
            prio = np.where(b.prio[p2] == 0, even_big, pa)
        return make_automaton(
            a.base, a.arity, 0, rows, prio, kind="parity", saturated=sat, check=False
        )
    from . import nba  # lazy: nba imports this module

    return nba.parity_product(a, b, mode, saturated=sat)


def _pair_budget():
    from .budget import max_states

    return max_states()


def complement(a: RelationAutomaton) -> RelationAutomaton:
    """Complement relative to the set of well-formed encodings."""
    if a.kind == "wdba":
        flipped = make_automaton(
            a.base, a.arity, a.initial, a.delta, a.prio ^ 1,
            kind="wdba", saturated=a.saturated, check=False,
        )
    else:
        flipped = make_automaton(
            a.base, a.arity, a.initial, a.delta, a.prio + 1,
            kind="parity", saturated=a.saturated, check=False,
        )
    out = product(flipped, well_formed(a.base, a.arity), "and")
    return make_automaton(
        out.base, out.arity, out.initial, out.delta, out.prio,
        kind=out.kind, saturated=a.saturated, check=False,
    )


def restrict_well_formed(a: RelationAutomaton) -> RelationAutomaton:
    out = product(a, well_formed(a.base, a.arity), "and")
    return make_automaton(
        out.base, out.arity, out.initial, out.delta, out.prio,
        kind=out.kind, saturated=a.saturated, check=False,
    )


def cylindrify(a: RelationAutomaton, track: int, new_arity: int | None = None) -> RelationAutomaton:
    """Insert a fresh unconstrained track at position ``track``."""
    n = a.arity + 1
    big = alphabet(a.base, n)
    emap = big.erase_map(track)
    out = make_automaton(
        a.base, n, a.initial, a.delta[:, emap], a.prio,
        kind=a.kind, saturated=False, check=False,
    )
    out = restrict_well_formed(out)
    return make_automaton(
        out.base, out.arity, out.initial, out.delta, out.prio,
        kind=out.kind, saturated=a.saturated, check=False,
    )


def apply_tracks(a: RelationAutomaton, positions, new_arity: int) -> RelationAutomaton:
    """Read automaton ``a`` off the listed tracks of a wider tape.

    Realizes X(v_{p_1}, ..., v_{p_m}) over ``new_arity`` tracks; repeated
    positions are allowed (diagonal reading).
    """
    if len(positions) != a.arity:
        raise ValueError("positions must match automaton arity")
    big = alphabet(a.base, new_arity)
    rmap = big.read_map(positions)
    out = make_automaton(
        a.base, new_arity, a.initial, a.delta[:, rmap], a.prio,
        kind=a.kind, saturated=False, check=False,
    )
    out = restrict_well_formed(out)
    return make_automaton(
        out.base, out.arity, out.initial, out.delta, out.prio,
        kind=out.kind, saturated=a.saturated, check=False,
    )


# ---------------------------------------------------------------------------
# ultimately periodic words, emptiness, membership


@dataclass(frozen=True)
class UPWord:
    """Lasso witness prefix . period^w, stored as label ids."""

    base: int
    arity: int
    prefix: tuple
    period: tuple

    def __str__(self):
        alpha = alphabet(self.base, self.arity)
        pre = " ".join(alpha.label_str(l) for l in self.prefix)
        per = " ".join(alpha.label_str(l) for l in self.period)
        return f"{pre} ({per})^w"


def decode(word: UPWord) -> RationalVector:
    """Decode a well-formed ultimately periodic encoding to Q^n."""
    alpha = alphabet(word.base, word.arity)
    k = word.base
    labels = list(word.prefix)
    if alpha.star not in labels:
        raise ValueError("star column must lie in the witness prefix")
    split = labels.index(alpha.star)
    int_cols = labels[:split]
    frac_cols = labels[split + 1 :]
    per_cols = list(word.period)
    out = []
    for t in range(word.arity):
        ints = [alpha.digits_of(l)[t] for l in int_cols]
        pre = [alpha.digits_of(l)[t] for l in frac_cols]
        per = [alpha.digits_of(l)[t] for l in per_cols]
        val = Fraction(0)
        for d in ints:
            val = val * k + d
        if ints and ints[0] == k - 1:
            val -= Fraction(k) ** len(ints)
        f = Fraction(0)
        for j, d in enumerate(pre):
            f += Fraction(d, k ** (j + 1))
        pval = Fraction(0)
        for j, d in enumerate(per):
            pval += Fraction(d, k ** (j + 1))
        f += pval / (1 - Fraction(1, k ** len(per))) / k ** len(pre)
        out.append(val + f)
    return tuple(out)


def _masked_sccs(adj, nodes):
    # Tarjan over an explicit adjacency dict restricted to ``nodes``.
    index, low, on, comp = {}, {}, set(), []
    stack, counter = [], [0]
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
                comp.append(c)
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[v])
    return comp


def _find_even_cycle(a: RelationAutomaton, allowed):
    """A cycle (anchor, labels) with even minimal priority, or None."""
    delta, prio = a.delta, a.prio
    L = delta.shape[1]

    def adj_of(nodes):
        ns = set(nodes)
        return {q: [int(delta[q, l]) for l in range(L) if int(delta[q, l]) in ns] for q in nodes}

    def search(nodes):
        adj = adj_of(nodes)
        for comp in _masked_sccs(adj, nodes):
            cs = set(comp)
            has_edge = any(w in cs for q in comp for w in adj[q])
            if not has_edge:
                continue
            m = min(int(prio[q]) for q in comp)
            if m % 2 == 0:
                anchor = next(q for q in comp if prio[q] == m)
                return anchor, cs
            sub = [q for q in comp if prio[q] != m]
            got = search(sub)
            if got is not None:
                return got
        return None

    got = search(list(allowed))
    if got is None:
        return None
    anchor, cs = got
    # shortest cycle anchor -> anchor inside cs
    parent = {}
    frontier = []
    for l in range(L):
        t = int(a.delta[anchor, l])
        if t in cs and (t not in parent):
            parent[t] = (anchor, l)
            frontier.append(t)
            if t == anchor:
                return anchor, [l]
    while frontier:
        nxt = []
        for q in frontier:
            for l in range(L):
                t = int(a.delta[q, l])
                if t == anchor:
                    labels = [l]
                    cur = q
                    while cur != anchor:
                        p, pl = parent[cur]
                        labels.append(pl)
                        cur = p
                    labels.reverse()
                    return anchor, labels
                if t in cs and t not in parent:
                    parent[t] = (q, l)
                    nxt.append(t)
        frontier = nxt
    raise AssertionError("strongly connected component without a cycle")


def emptiness_witness(a: RelationAutomaton) -> UPWord | None:
    """None iff the denoted relation is empty, else an accepted lasso."""
    reach = K.bfs_reachable(a.delta, a.initial)
    allowed = np.flatnonzero(reach).tolist()
    got = _find_even_cycle(a, allowed)
    if got is None:
        return None
    anchor, cycle_labels = got
    # shortest path initial -> anchor
    if anchor == a.initial:
        path_labels = []
    else:
        parent = {a.initial: None}
        frontier = [a.initial]
        L = a.delta.shape[1]
        while anchor not in parent:
            nxt = []
            for q in frontier:
                for l in range(L):
                    t = int(a.delta[q, l])
                    if t not in parent:
                        parent[t] = (q, l)
                        nxt.append(t)
            frontier = nxt
        path_labels = []
        cur = anchor
        while parent[cur] is not None:
            p, l = parent[cur]
            path_labels.append(l)
            cur = p
        path_labels.reverse()
    prefix = list(path_labels)
    period = list(cycle_labels)
    alpha = a.alpha
    # rotate star out of the period: an accepted lasso has exactly one star
    if alpha.star in period:
        i = period.index(alpha.star)
        prefix += period[: i + 1]
        period = period[i + 1 :] + period[: i + 1]
        period = [l for l in period if l != alpha.star]
        if not period:
            raise AssertionError("accepted lasso without digit period")
    return UPWord(a.base, a.arity, tuple(prefix), tuple(period))


def is_empty(a: RelationAutomaton) -> bool:
    return emptiness_witness(a) is None


def equivalent(a: RelationAutomaton, b: RelationAutomaton) -> bool:
    """Language equality via symmetric-difference emptiness."""
    return is_empty(product(a, complement(b), "and")) and is_empty(
        product(b, complement(a), "and")
    )


# ---------------------------------------------------------------------------
# encodings of rational points and membership


def _frac_digits(f: Fraction, k: int):
    """Eventually periodic base-k expansion of f in [0, 1): (pre, cycle)."""
    num, den = f.numerator, f.denominator
    seen = {}
    digits = []
    r = num
    while r not in seen:
        seen[r] = len(digits)
        r *= k
        digits.append(r // den)
        r -= den * (r // den)
    cut = seen[r]
    return digits[:cut], digits[cut:]


def _int_digits(i: int, k: int):
    """Minimal k's-complement digit string (sign digit included)."""
    if i >= 0:
        digs = []
        v = i
        while v:
            digs.append(v % k)
            v //= k
        digs.reverse()
        return [0] + digs
    m = 1
    while i < -(k ** (m - 1)):
        m += 1
    v = i + k**m
    digs = []
    for _ in range(m):
        digs.append(v % k)
        v //= k
    digs.reverse()
    return digs


def _track_streams(x: Fraction, k: int, with_duals: bool):
    """Digit streams (int_digits, frac_pre, frac_cycle) encoding x."""
    ip = math.floor(x)
    fp = x - ip
    ints = _int_digits(ip, k)
    pre, cyc = _frac_digits(fp, k)
    streams = [(ints, pre, cyc)]
    if not with_duals:
        return streams
    if all(d == 0 for d in cyc):
        # terminating expansion: the dual flips the last nonzero digit
        digs = ints + pre
        n_int = len(ints)
        nz = [i for i, d in enumerate(digs) if d != 0]
        if not nz:
            streams.append(([k - 1], [], [k - 1]))  # the all-(k-1) zero
        else:
            j = nz[-1]
            if j == 0:
                # sign digit is the last nonzero: pad before borrowing
                digs = [digs[0]] + digs
                n_int += 1
                j = 1
            digs = list(digs)
            digs[j] -= 1
            digs = digs[: j + 1] + [k - 1] * (len(digs) - j - 1)
            streams.append((digs[:n_int], digs[n_int:], [k - 1]))
    return streams


def encodings(point, base: int, with_duals: bool):
    """Label sequences (prefix, period) encoding the rational point."""
    point = tuple(Fraction(x) for x in point)
    per_track = [_track_streams(x, base, with_duals) for x in point]
    alpha = alphabet(base, len(point))
    combos = [[]]
    for opts in per_track:
        combos = [c + [o] for c in combos for o in opts]
    out = []
    for combo in combos:
        n_int = max(len(ints) for ints, _, _ in combo)
        pre_len = max(len(pre) for _, pre, _ in combo)
        cyc_len = lcm(*[len(cyc) for _, _, cyc in combo])
        cols = []
        for j in range(n_int):
            col = []
            for ints, _, _ in combo:
                pad = n_int - len(ints)
                col.append(ints[0] if j < pad else ints[j - pad])
            cols.append(alpha.id_of(col))
        cols.append(alpha.star)

        def frac_digit(stream, j):
            _, pre, cyc = stream
            if j < len(pre):
                return pre[j]
            return cyc[(j - len(pre)) % len(cyc)]

        for j in range(pre_len):
            cols.append(alpha.id_of([frac_digit(s, j) for s in combo]))
        period = []
        for j in range(pre_len, pre_len + cyc_len):
            period.append(alpha.id_of([frac_digit(s, j) for s in combo]))
        out.append((tuple(cols), tuple(period)))
    return out


def accepts_lasso(a: RelationAutomaton, prefix, period) -> bool:
    """Run the deterministic automaton on prefix . period^w."""
    q = a.initial
    for l in prefix:
        q = int(a.delta[q, l])
    seen = {q: 0}
    hops = [q]
    mins = []
    while True:
        m = int(a.prio[q])
        for l in period:
            q = int(a.delta[q, l])
            m = min(m, int(a.prio[q]))
        mins.append(m)
        if q in seen:
            start = seen[q]
            cyc = mins[start:]
            return min(cyc) % 2 == 0
        seen[q] = len(hops)
        hops.append(q)


def member(a: RelationAutomaton, point) -> bool:
    """Exact membership of a rational point."""
    if len(point) != a.arity:
        raise ValueError("point arity mismatch")
    for prefix, period in encodings(point, a.base, with_duals=not a.saturated):
        if accepts_lasso(a, prefix, period):
            return True
    return False


# ---------------------------------------------------------------------------
# canonical form / isomorphism


def canonical_order(a: RelationAutomaton) -> RelationAutomaton:
    """Renumber states in BFS order from the initial state (label-sorted)."""
    n = a.n_states
    order = np.full(n, -1, dtype=np.int64)
    order[a.initial] = 0
    queue = [a.initial]
    count = 1
    i = 0
    while i < len(queue):
        q = queue[i]
        i += 1
        for t in a.delta[q]:
            t = int(t)
            if order[t] == -1:
                order[t] = count
                count += 1
                queue.append(t)
    # unreachable states are dropped
    keep = np.flatnonzero(order != -1)
    inv = np.empty(count, dtype=np.int64)
    inv[order[keep]] = keep
    delta = order[a.delta[inv]]
    prio = a.prio[inv]
    return make_automaton(
        a.base, a.arity, 0, delta, prio, kind=a.kind, saturated=a.saturated, check=False
    )


def isomorphic(a: RelationAutomaton, b: RelationAutomaton) -> bool:
    ca, cb = canonical_order(a), canonical_order(b)
    return (
        ca.base == cb.base
        and ca.arity == cb.arity
        and ca.n_states == cb.n_states
        and np.array_equal(ca.delta, cb.delta)
        and np.array_equal(ca.prio, cb.prio)
    )
