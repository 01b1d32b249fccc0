"""Self-definable sentences deciding definability of a bound relation in
real addition, plus the staged decomposition pipeline for the variant
with the integer predicate.

The local-invariance predicate speaks about translation vectors that
leave the relation unchanged inside a ball; a point is quasi-singular
when no ball admits a nonempty, halving-stable, limit-closed set of such
vectors.  A relation is additively definable iff every way of freezing a
subset of coordinates leaves only a uniformly bounded, uniformly
separated set of quasi-singular points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .automaton import RelationAutomaton, decode, emptiness_witness
from .budget import EngineLimit
from .logic import (
    And,
    Cmp,
    Exists,
    FFalse,
    Forall,
    Iff,
    Implies,
    IntP,
    Not,
    Or,
    Rel,
    compile_formula,
    conj,
    disj,
    eval_sentence,
    exists,
    forall,
    num,
    var,
)

REL = "X"


@dataclass(frozen=True)
class FrozenPattern:
    """Arity n with live tracks I (1-based); the rest carry parameters."""

    n: int
    live: tuple

    def __post_init__(self):
        if not self.live:
            raise ValueError("at least one live track is required")
        if not all(1 <= i <= self.n for i in self.live):
            raise ValueError("live tracks out of range")

    @property
    def frozen(self):
        return tuple(j for j in range(1, self.n + 1) if j not in self.live)


def _lt_all(names, bound):
    """max_i |name_i| < bound (componentwise box)."""
    return conj(
        [
            And(Cmp(num(0) - bound, "<", t), Cmp(t, "<", bound))
            for t in names
        ]
    )


def _some_nonzero(terms):
    return disj([Cmp(t, "!=", num(0)) for t in terms])


def _rel_args(pat: FrozenPattern, live_terms, xi_names):
    """Assemble the n arguments of the bound relation: live positions get
    the given terms, frozen positions the parameter variables."""
    args = []
    live = {i: t for i, t in zip(pat.live, live_terms)}
    xi = {j: var(x) for j, x in zip(pat.frozen, xi_names)}
    for pos in range(1, pat.n + 1):
        args.append(live[pos] if pos in live else xi[pos])
    return tuple(args)


def _phi(pat, xi, xs, r, s, vterms):
    """Local invariance: 0 < |v| < s and translation by v preserves the
    relation on the ball of radius r around x (frozen tracks fixed)."""
    ys = [f"y{i}" for i in pat.live]
    ball_y = _lt_all([var(y) - var(x) for y, x in zip(ys, xs)], var(r))
    ball_yv = _lt_all(
        [var(y) + t - var(x) for y, t, x in zip(ys, vterms, xs)], var(r)
    )
    inside = Implies(
        And(ball_y, ball_yv),
        Iff(
            Rel(REL, _rel_args(pat, [var(y) for y in ys], xi)),
            Rel(REL, _rel_args(pat, [var(y) + t for y, t in zip(ys, vterms)], xi)),
        ),
    )
    return conj(
        [
            _some_nonzero(vterms),
            _lt_all(vterms, var(s)),
            forall(ys, inside),
        ]
    )


def _qs(pat, xi, xs):
    """Quasi-singularity of the live point x under frozen parameters."""
    r, s = "r", "s"
    vs = [f"v{i}" for i in pat.live]
    ws = [f"w{i}" for i in pat.live]
    us = [f"u{i}" for i in pat.live]
    phi_v = _phi(pat, xi, xs, r, s, [var(v) for v in vs])
    phi_half = exists(
        ws,
        conj(
            [Cmp(var(w) + var(w), "=", var(v)) for w, v in zip(ws, vs)]
            + [_phi(pat, xi, xs, r, s, [var(w) for w in ws])]
        ),
    )
    phi_u = _phi(pat, xi, xs, r, s, [var(u) for u in us])
    phi_v_near_u = _phi(pat, xi, xs, r, s, [var(v) for v in vs])
    near = conj(
        [
            phi_v_near_u,
            _lt_all([var(v) - var(u) for v, u in zip(vs, us)], var("eps")),
        ]
    )
    # limit closure restricted to nonzero vectors: with the displayed
    # local-invariance predicate the zero vector can never qualify, so
    # admitting it as a limit point would make the matrix unsatisfiable
    closure = forall(
        us,
        Implies(
            conj(
                [
                    _some_nonzero([var(u) for u in us]),
                    _lt_all([var(u) for u in us], var(s)),
                    Forall(
                        "eps",
                        Implies(Cmp(num(0), "<", var("eps")), exists(vs, near)),
                    ),
                ]
            ),
            phi_u,
        ),
    )
    matrix = conj(
        [
            Cmp(num(0), "<", var(s)),
            Cmp(var(s), "<", var(r)),
            exists(vs, phi_v),
            forall(vs, Implies(phi_v, phi_half)),
            closure,
        ]
    )
    return Not(Exists(r, Exists(s, matrix)))


def _fs(pat, xi):
    """Finitely many quasi-singular live points: bounded and separated."""
    xs = [f"x{i}" for i in pat.live]
    ys = [f"x'{i}" for i in pat.live]
    qs_x = _qs(pat, xi, xs)
    qs_y = _qs(pat, xi, ys)
    bounded = Exists(
        "t",
        And(
            Cmp(num(0), "<", var("t")),
            forall(xs, Implies(qs_x, _lt_all([var(x) for x in xs], var("t")))),
        ),
    )
    apart = disj(
        [
            Or(
                Cmp(var(x) - var(y), ">", var("sep")),
                Cmp(var(y) - var(x), ">", var("sep")),
            )
            for x, y in zip(xs, ys)
        ]
    )
    separated = Exists(
        "sep",
        And(
            Cmp(num(0), "<", var("sep")),
            forall(
                xs + ys,
                Implies(
                    conj(
                        [qs_x, qs_y]
                        + [_some_nonzero([var(x) - var(y) for x, y in zip(xs, ys)])]
                    ),
                    apart,
                ),
            ),
        ),
    )
    return And(bounded, separated)


def build_local_formulas(n: int, live):
    """The (invariance, quasi-singular, finiteness) formulas for one
    frozen pattern; free variables as displayed, relation symbol X free."""
    pat = FrozenPattern(n, tuple(sorted(live)))
    xi = [f"xi{j}" for j in pat.frozen]
    xs = [f"x{i}" for i in pat.live]
    vs = [f"v{i}" for i in pat.live]
    phi = _phi(pat, xi, xs, "r", "s", [var(v) for v in vs])
    qs = _qs(pat, xi, xs)
    fs = _fs(pat, xi)
    return phi, qs, fs


def _fs_conjunct(n, live):
    pat = FrozenPattern(n, tuple(live))
    xi = [f"xi{j}" for j in pat.frozen]
    return forall(xi, _fs(pat, xi))


def nonempty_subsets(n):
    items = list(range(1, n + 1))
    for size in range(1, n + 1):
        yield from itertools.combinations(items, size)


def build_phi_n(n: int):
    """The closed definability sentence: every generalized projection has
    finitely many quasi-singular points (empty pattern dropped: it has no
    nonzero vectors at all and holds vacuously)."""
    return conj([_fs_conjunct(n, live) for live in nonempty_subsets(n)])


def build_approx(n: int):
    """Same-unit-cube-pattern equivalence on integer points."""
    xs = [f"x{i}" for i in range(1, n + 1)]
    ys = [f"y{i}" for i in range(1, n + 1)]
    return _approx(n, [var(x) for x in xs], [var(y) for y in ys])


def _approx(n, xterms, yterms):
    zs = [f"z{i}" for i in range(1, n + 1)]
    cube = conj(
        [And(Cmp(num(0), "<=", var(z)), Cmp(var(z), "<", num(1))) for z in zs]
    )
    same = Iff(
        Rel(REL, tuple(x + var(z) for x, z in zip(xterms, zs))),
        Rel(REL, tuple(y + var(z) for y, z in zip(yterms, zs))),
    )
    ints = [IntP(t) for t in xterms] + [IntP(t) for t in yterms]
    return conj(ints + [forall(zs, Implies(cube, same))])


# ---------------------------------------------------------------------------
# reports and decision procedures


@dataclass
class DefinabilityReport:
    verdict: str  # "Definable" | "NotDefinable"
    failing: str | None = None
    witness: tuple | None = None
    details: dict = field(default_factory=dict)

    @property
    def definable(self):
        return self.verdict == "Definable"


@dataclass
class DecompositionReport:
    fu_holds: bool
    bound: int | None = None
    classes: list = field(default_factory=list)  # (rep, sigma_aut, delta_aut)


def _require_saturated(x: RelationAutomaton):
    if not x.saturated:
        raise ValueError("input relation must be saturated")


def decide_s_definable(x: RelationAutomaton) -> DefinabilityReport:
    """Is the denoted relation definable in real addition with order and 1?"""
    _require_saturated(x)
    n = x.arity
    details = {}
    for live in nonempty_subsets(n):
        sent = _fs_conjunct(n, live)
        ok = eval_sentence(sent, x.base, {REL: x})
        details[f"I={set(live)}"] = "holds" if ok else "fails"
        if not ok:
            witness = _qs_witness(x)
            return DefinabilityReport(
                "NotDefinable",
                failing=f"FS fails for I={set(live)}",
                witness=witness,
                details=details,
            )
    return DefinabilityReport("Definable", details=details)


def _qs_witness(x: RelationAutomaton):
    """A concrete quasi-singular point of the full pattern, if any."""
    n = x.arity
    pat = FrozenPattern(n, tuple(range(1, n + 1)))
    xs = [f"x{i}" for i in pat.live]
    qs = _qs(pat, [], xs)
    try:
        aut = compile_formula(qs, x.base, xs, {REL: x})
    except EngineLimit:
        return None
    w = emptiness_witness(aut)
    return decode(w) if w is not None else None


def quasi_singular_automaton(x: RelationAutomaton) -> RelationAutomaton:
    """Automaton of the quasi-singular points of the full live pattern."""
    _require_saturated(x)
    n = x.arity
    pat = FrozenPattern(n, tuple(range(1, n + 1)))
    xs = [f"x{i}" for i in pat.live]
    return compile_formula(_qs(pat, [], xs), x.base, xs, {REL: x})


FU_BOUND_CAP = 2**16


def _fu_sentence(n):
    xs = [f"x{i}" for i in range(1, n + 1)]
    ys = [f"y{i}" for i in range(1, n + 1)]
    body = _approx(n, [var(y) for y in ys], [var(x) for x in xs])
    inner = exists(
        ys, conj([_lt_all([var(y) for y in ys], var("N")), body])
    )
    return Exists(
        "N",
        And(
            Cmp(num(0), "<", var("N")),
            forall(xs, Implies(conj([IntP(var(x)) for x in xs]), inner)),
        ),
    )


def _fu_bound_sentence(n, bound):
    xs = [f"x{i}" for i in range(1, n + 1)]
    ys = [f"y{i}" for i in range(1, n + 1)]
    body = _approx(n, [var(y) for y in ys], [var(x) for x in xs])
    inner = exists(
        ys, conj([_lt_all([var(y) for y in ys], num(bound)), body])
    )
    return forall(xs, Implies(conj([IntP(var(x)) for x in xs]), inner))


def decompose(x: RelationAutomaton) -> DecompositionReport:
    """Split into integer-part classes and unit-cube patterns."""
    _require_saturated(x)
    n = x.arity
    base = x.base
    if not eval_sentence(_fu_sentence(n), base, {REL: x}):
        return DecompositionReport(fu_holds=False)
    bound = 1
    while not eval_sentence(_fu_bound_sentence(n, bound), base, {REL: x}):
        bound *= 2
        if bound > FU_BOUND_CAP:
            raise EngineLimit(
                "cube-pattern bound search exceeded the cap although "
                "finiteness holds"
            )
    points = sorted(
        itertools.product(range(-bound + 1, bound), repeat=n)
    )
    reps = []
    for a in points:
        placed = False
        for rep, members in reps:
            if _approx_points(x, a, rep):
                members.append(a)
                placed = True
                break
        if not placed:
            reps.append((a, [a]))
    classes = []
    for rep, _members in reps:
        classes.append((rep, _sigma_automaton(x, rep), _delta_automaton(x, rep)))
    return DecompositionReport(fu_holds=True, bound=bound, classes=classes)


def _approx_points(x, a, b) -> bool:
    n = x.arity
    f = _approx(n, [num(v) for v in a], [num(v) for v in b])
    return eval_sentence(f, x.base, {REL: x})


def _sigma_automaton(x, rep) -> RelationAutomaton:
    """Integer points whose cube pattern matches the representative's."""
    n = x.arity
    xs = [f"x{i}" for i in range(1, n + 1)]
    f = conj(
        [IntP(var(v)) for v in xs]
        + [_approx(n, [var(v) for v in xs], [num(c) for c in rep])]
    )
    return compile_formula(f, x.base, xs, {REL: x})


def _delta_automaton(x, rep) -> RelationAutomaton:
    """The unit-cube pattern anchored at the representative."""
    n = x.arity
    zs = [f"z{i}" for i in range(1, n + 1)]
    f = conj(
        [
            And(Cmp(num(0), "<=", var(z)), Cmp(var(z), "<", num(1)))
            for z in zs
        ]
        + [Rel(REL, tuple(var(z) + num(c) for z, c in zip(zs, rep)))]
    )
    return compile_formula(f, x.base, zs, {REL: x})


def decide_l_definable(x: RelationAutomaton) -> DefinabilityReport:
    """Is the denoted relation definable with the integer predicate added?

    Staged: finitely many cube patterns, then integer parts decided in
    Presburger arithmetic, then each cube pattern decided additively.
    """
    from . import intdef

    _require_saturated(x)
    rep = decompose(x)
    if not rep.fu_holds:
        return DefinabilityReport("NotDefinable", failing="FU")
    table = []
    verdict = None
    for class_rep, sigma, delta in rep.classes:
        dfa = intdef.integer_restrict_to_dfa(sigma)
        ip_ok = intdef.presburger_definable(dfa)
        fp_ok = None
        if ip_ok:
            fp_ok = decide_s_definable(delta).definable
        table.append((class_rep, ip_ok, fp_ok))
        if not ip_ok:
            verdict = DefinabilityReport(
                "NotDefinable", failing="IP", witness=class_rep,
                details={"classes": table, "bound": rep.bound},
            )
            break
        if not fp_ok:
            verdict = DefinabilityReport(
                "NotDefinable", failing="FP", witness=class_rep,
                details={"classes": table, "bound": rep.bound},
            )
            break
    if verdict is None:
        verdict = DefinabilityReport(
            "Definable", details={"classes": table, "bound": rep.bound}
        )
    return verdict
