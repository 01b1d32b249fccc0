"""Presburger definability of integer relations extracted from the
omega-automata (condition on the integer parts of the decomposition).

The n = 1 case is the classical exact criterion: a set of integers is
definable in (Z, +, <) iff it is ultimately periodic in both directions.
For n >= 2 the pinned criterion is recursive: every axis section must be
definable, and beyond a threshold every point must admit a nonzero
period vector of bounded norm that leaves the relation unchanged on a
bounded box around the point.  Both parts are evaluated as sentences of
(R, Z, +, <, Y) by the engine itself, with the relation symbol bound to
the omega-lifting of the integer set; see the module docs in the README
for the exact sentences.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .automaton import (
    RelationAutomaton,
    accepts_lasso,
    alphabet,
    decode,
    emptiness_witness,
    is_empty,
    make_automaton,
    product,
)
from .logic import (
    And,
    Cmp,
    Exists,
    Forall,
    Iff,
    Implies,
    IntP,
    Not,
    Rel,
    conj,
    disj,
    eval_sentence,
    exists,
    forall,
    num,
    var,
)
from . import _kernels as K

REL = "Y"


@dataclass(frozen=True)
class IntegerRelationDfa:
    """Finite-word DFA over integer digit columns (msd first, sign digit
    included); accepts exactly the encodings of the members of a subset
    of Z^n."""

    base: int
    arity: int
    initial: int
    delta: np.ndarray  # int32 [n_states, base**arity]
    accepting: np.ndarray  # bool [n_states]

    @property
    def n_states(self):
        return self.delta.shape[0]


def integer_restrict_to_dfa(sigma: RelationAutomaton) -> IntegerRelationDfa:
    """Integer-phase DFA of an omega-automaton denoting a subset of Z^n.

    A prefix is accepted iff followed by the star and the all-zero tail
    the omega-word is accepted, so the DFA language is value-faithful.
    """
    n = sigma.arity
    alpha = sigma.alpha
    from .arith import int_atom
    from .automaton import complement

    ints = None
    for t in range(n):
        a = int_atom(sigma.base, n, t)
        ints = a if ints is None else product(ints, a, "and")
    stray = product(sigma, complement(ints), "and")
    w = emptiness_witness(stray)
    if w is not None:
        raise ValueError(
            f"relation contains a non-integer point: {decode(w)}"
        )
    zero_tail = alpha.id_of([0] * n)
    acc = np.zeros(sigma.n_states, dtype=np.bool_)
    for q in range(sigma.n_states):
        q2 = int(sigma.delta[q, alpha.star])
        acc[q] = _lasso_from(sigma, q2, zero_tail)
    delta = np.ascontiguousarray(sigma.delta[:, : alpha.star])
    return _minimize_dfa(
        IntegerRelationDfa(sigma.base, n, sigma.initial, delta, acc)
    )


def _lasso_from(a: RelationAutomaton, state: int, label: int) -> bool:
    seen = {}
    q = state
    trace = [q]
    while q not in seen:
        seen[q] = len(trace) - 1
        q = int(a.delta[q, label])
        trace.append(q)
    cyc = trace[seen[q] : ]
    return min(int(a.prio[s]) for s in cyc) % 2 == 0


def _minimize_dfa(d: IntegerRelationDfa) -> IntegerRelationDfa:
    # reachable trim + Moore minimization, canonical BFS numbering
    reach = K.bfs_reachable(d.delta, d.initial)
    idx = np.full(d.n_states, -1, dtype=np.int64)
    keep = np.flatnonzero(reach)
    idx[keep] = np.arange(keep.size)
    delta = idx[d.delta[keep]]
    acc = d.accepting[keep]
    classes = K.moore_refine(delta, acc.astype(np.int64))
    n_cls = int(classes.max()) + 1
    rep = np.zeros(n_cls, dtype=np.int64)
    rep[classes] = np.arange(keep.size)
    delta2 = classes[delta[rep]]
    acc2 = acc[rep]
    init2 = int(classes[idx[d.initial]])
    order = np.full(n_cls, -1, dtype=np.int64)
    order[init2] = 0
    queue = [init2]
    cnt = 1
    i = 0
    while i < len(queue):
        q = queue[i]
        i += 1
        for t in delta2[q]:
            t = int(t)
            if order[t] == -1:
                order[t] = cnt
                cnt += 1
                queue.append(t)
    keep2 = np.flatnonzero(order != -1)
    inv = np.empty(cnt, dtype=np.int64)
    inv[order[keep2]] = keep2
    delta3 = order[delta2[inv]].astype(np.int32)
    acc3 = acc2[inv]
    return IntegerRelationDfa(d.base, d.arity, 0, delta3, acc3)


def dfa_to_omega(d: IntegerRelationDfa) -> RelationAutomaton:
    """Saturated omega-lifting: all encodings of the DFA's integer set."""
    from .nba import saturate

    alpha = alphabet(d.base, d.arity)
    m = d.n_states
    # states: DFA part, per-state zero-tail checker, dead sink
    dead = 2 * m
    delta = np.full((2 * m + 1, alpha.n_labels), dead, dtype=np.int32)
    zero = alpha.id_of([0] * d.arity)
    for q in range(m):
        delta[q, : alpha.star] = d.delta[q]
        delta[q, alpha.star] = m + q if d.accepting[q] else dead
        delta[m + q, zero] = m + q
    prio = np.ones(2 * m + 1, dtype=np.int32)
    prio[m : 2 * m] = 0
    raw = make_automaton(d.base, d.arity, d.initial, delta, prio, kind="wdba")
    return saturate(raw)


def _dfa_key(d: IntegerRelationDfa):
    return (
        d.base,
        d.arity,
        d.initial,
        d.delta.tobytes(),
        d.accepting.tobytes(),
    )


_PRESBURGER_CACHE = {}


def presburger_definable(d: IntegerRelationDfa) -> bool:
    """Is the denoted subset of Z^n definable in (Z, +, <)?"""
    key = _dfa_key(_minimize_dfa(d))
    hit = _PRESBURGER_CACHE.get(key)
    if hit is None:
        y = dfa_to_omega(d)
        hit = _presburger_definable_rel(y, d.arity)
        _PRESBURGER_CACHE[key] = hit
    return hit


def _presburger_definable_rel(y: RelationAutomaton, n: int) -> bool:
    sent = periodicity_sentence(n)
    return eval_sentence(sent, y.base, {REL: y})


def periodicity_sentence(n: int, args_template=None):
    """The pinned definability criterion as a closed formula over the
    relation symbol Y, quantifiers relativized to the integers.

    n = 1: ultimate periodicity in both directions.
    n >= 2: all axis sections satisfy the (n-1)-criterion, and there are
    p, t such that every integer point x with |x| > t has a nonzero
    integer period v, |v| <= p, with Y invariant under v on the box of
    radius p around x.
    """
    if args_template is None:
        args_template = [None] * n  # None marks an open position

    def apply(terms):
        it = iter(terms)
        return Rel(REL, tuple(t if t is not None else next(it) for t in args_template))

    open_count = sum(1 for t in args_template if t is None)
    assert open_count == n

    if n == 1:
        a, p, t = "pa", "pp", "pt"
        body = Implies(
            conj(
                [
                    IntP(var(a)),
                    disj([Cmp(var(a), ">", var(t)), Cmp(var(a), "<", num(0) - var(t))]),
                ]
            ),
            Iff(apply([var(a)]), apply([var(a) + var(p)])),
        )
        return exists(
            [p, t],
            conj(
                [
                    IntP(var(p)),
                    Cmp(var(p), ">", num(0)),
                    Cmp(var(t), ">", num(0)),
                    Forall(a, body),
                ]
            ),
        )

    parts = []
    # every axis section satisfies the lower-arity criterion
    for axis in range(n):
        c = f"sc{n}_{axis}"
        sub_template = list(args_template)
        opens = [i for i, t in enumerate(sub_template) if t is None]
        sub_template[opens[axis]] = var(c)
        section = periodicity_sentence(n - 1, sub_template)
        parts.append(Forall(c, Implies(IntP(var(c)), section)))
    # eventual local periodicity at a bounded scale
    p, t = f"lp{n}", f"lt{n}"
    xs = [f"lx{n}_{i}" for i in range(n)]
    vs = [f"lv{n}_{i}" for i in range(n)]
    ys = [f"ly{n}_{i}" for i in range(n)]
    box = conj(
        [
            And(
                Cmp(var(y) - var(x), "<=", var(p)),
                Cmp(var(x) - var(y), "<=", var(p)),
            )
            for x, y in zip(xs, ys)
        ]
    )
    invariant = forall(
        ys,
        Implies(
            conj([IntP(var(y)) for y in ys] + [box]),
            Iff(
                apply([var(y) for y in ys]),
                apply([var(y) + var(v) for y, v in zip(ys, vs)]),
            ),
        ),
    )
    good_v = conj(
        [IntP(var(v)) for v in vs]
        + [disj([Cmp(var(v), "!=", num(0)) for v in vs])]
        + [
            And(Cmp(var(v), "<=", var(p)), Cmp(num(0) - var(p), "<=", var(v)))
            for v in vs
        ]
        + [invariant]
    )
    far = disj(
        [
            disj([Cmp(var(x), ">", var(t)), Cmp(var(x), "<", num(0) - var(t))])
            for x in xs
        ]
    )
    local = forall(
        xs,
        Implies(conj([IntP(var(x)) for x in xs] + [far]), exists(vs, good_v)),
    )
    parts.append(
        exists(
            [p, t],
            conj(
                [
                    IntP(var(p)),
                    Cmp(var(p), ">", num(0)),
                    Cmp(var(t), ">", num(0)),
                    local,
                ]
            ),
        )
    )
    return conj(parts)


def ultimately_periodic_oracle(d: IntegerRelationDfa, horizon=4096, max_period=64):
    """Independent sampled ultimate-periodicity check for n = 1 (test
    oracle: scans the characteristic word on both sides)."""
    assert d.arity == 1
    y = dfa_to_omega(d)
    from .automaton import member

    bits_pos = [member(y, (i,)) for i in range(horizon)]
    bits_neg = [member(y, (-i,)) for i in range(horizon)]

    def side_ok(bits):
        for p in range(1, max_period + 1):
            tail = bits[horizon // 2 :]
            if all(
                tail[i] == tail[i + p] for i in range(len(tail) - p)
            ):
                return True
        return False

    return side_ok(bits_pos) and side_ok(bits_neg)
