"""First-order formulas over (R, +, <, 1, Int, bound relation symbols):
AST, concrete-syntax parser, and the formula-to-automaton compiler.

Compilation is structural: atoms come from :mod:`realdef.arith`, negation
is complementation, conjunction/disjunction are synchronized products,
and quantifiers are existential track projection (the quantified
variable always occupies the last track).  Every intermediate automaton
is saturated and minimized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .arith import LinearAtom, int_atom, linear_atom
from .automaton import (
    RelationAutomaton,
    apply_tracks,
    complement,
    is_empty,
    product,
    well_formed,
)
from .minimize import minimize_and_classify
from .nba import project_exists


class FormulaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# terms and AST


@dataclass(frozen=True)
class Term:
    """Integer-or-rational linear combination of variables plus a constant."""

    coeffs: tuple  # sorted ((var, Fraction), ...)
    const: Fraction

    @staticmethod
    def of(*pairs, const=0):
        acc = {}
        for coeff, name in pairs:
            acc[name] = acc.get(name, Fraction(0)) + Fraction(coeff)
        return Term(
            tuple(sorted((n, c) for n, c in acc.items() if c != 0)),
            Fraction(const),
        )

    def __add__(self, other):
        acc = dict(self.coeffs)
        for n, c in other.coeffs:
            acc[n] = acc.get(n, Fraction(0)) + c
        return Term(
            tuple(sorted((n, c) for n, c in acc.items() if c != 0)),
            self.const + other.const,
        )

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, q):
        q = Fraction(q)
        return Term(tuple((n, c * q) for n, c in self.coeffs), self.const * q)

    def single_var(self):
        if self.const == 0 and len(self.coeffs) == 1 and self.coeffs[0][1] == 1:
            return self.coeffs[0][0]
        return None

    def variables(self):
        return [n for n, _ in self.coeffs]


def var(name: str) -> Term:
    return Term(((name, Fraction(1)),), Fraction(0))


def num(q) -> Term:
    return Term((), Fraction(q))


@dataclass(frozen=True)
class FTrue:
    pass


@dataclass(frozen=True)
class FFalse:
    pass


@dataclass(frozen=True)
class Cmp:
    left: Term
    op: str
    right: Term


@dataclass(frozen=True)
class IntP:
    term: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple


@dataclass(frozen=True)
class Not:
    sub: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Iff:
    left: object
    right: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    body: object


def conj(parts):
    parts = list(parts)
    if not parts:
        return FTrue()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts):
    parts = list(parts)
    if not parts:
        return FFalse()
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def exists(names, body):
    for n in reversed(list(names)):
        body = Exists(n, body)
    return body


def forall(names, body):
    for n in reversed(list(names)):
        body = Forall(n, body)
    return body


def free_variables(f):
    out = []

    def walk(f, bound):
        if isinstance(f, (FTrue, FFalse)):
            return
        if isinstance(f, Cmp):
            for t in (f.left, f.right):
                for n in t.variables():
                    if n not in bound and n not in out:
                        out.append(n)
        elif isinstance(f, IntP):
            for n in f.term.variables():
                if n not in bound and n not in out:
                    out.append(n)
        elif isinstance(f, Rel):
            for t in f.args:
                for n in t.variables():
                    if n not in bound and n not in out:
                        out.append(n)
        elif isinstance(f, Not):
            walk(f.sub, bound)
        elif isinstance(f, (And, Or, Implies, Iff)):
            walk(f.left, bound)
            walk(f.right, bound)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, bound | {f.var})
        else:
            raise TypeError(f"not a formula node: {f!r}")

    walk(f, set())
    return out


def relation_names(f):
    out = set()

    def walk(f):
        if isinstance(f, Rel):
            out.add(f.name)
        elif isinstance(f, Not):
            walk(f.sub)
        elif isinstance(f, (And, Or, Implies, Iff)):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body)

    walk(f)
    return out


# ---------------------------------------------------------------------------
# parser


_SYMBOLS = ["<->", "->", "<=", ">=", "!=", "<", ">", "=", "!", "&", "|",
            "(", ")", ".", ",", "*", "/", "+", "-"]


def _tokenize(text):
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("ident", text[i:j], i))
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(("int", text[i:j], i))
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(("sym", sym, i))
                i += len(sym)
                break
        else:
            raise FormulaError(f"syntax error at column {i + 1}: unexpected {ch!r}")
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind, value=None):
        t = self.next()
        if t[0] != kind or (value is not None and t[1] != value):
            raise FormulaError(
                f"syntax error at column {t[2] + 1}: expected {value or kind}"
            )
        return t

    def fail(self, msg=None):
        t = self.peek()
        raise FormulaError(
            f"syntax error at column {t[2] + 1}" + (f": {msg}" if msg else "")
        )

    # formula levels, loosest binding first
    def formula(self):
        f = self.impl()
        while self.peek()[:2] == ("sym", "<->"):
            self.next()
            f = Iff(f, self.impl())
        return f

    def impl(self):
        f = self.disj()
        if self.peek()[:2] == ("sym", "->"):
            self.next()
            return Implies(f, self.impl())
        return f

    def disj(self):
        f = self.conj()
        while self.peek()[:2] == ("sym", "|"):
            self.next()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[:2] == ("sym", "&"):
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self):
        t = self.peek()
        if t[:2] == ("sym", "!"):
            self.next()
            return Not(self.unary())
        if t[0] == "ident" and t[1] in ("E", "A"):
            nxt = self.toks[self.pos + 1]
            if nxt[0] == "ident":
                self.next()
                name = self.next()[1]
                self.expect("sym", ".")
                body = self.formula()  # quantifier scope extends maximally
                return Exists(name, body) if t[1] == "E" else Forall(name, body)
        return self.primary()

    def primary(self):
        t = self.peek()
        if t[:2] == ("sym", "("):
            self.next()
            f = self.formula()
            self.expect("sym", ")")
            return f
        if t[0] == "ident" and t[1] == "true":
            self.next()
            return FTrue()
        if t[0] == "ident" and t[1] == "false":
            self.next()
            return FFalse()
        if t[0] == "ident" and t[1] == "int":
            if self.toks[self.pos + 1][:2] == ("sym", "("):
                self.next()
                self.next()
                term = self.term()
                self.expect("sym", ")")
                return IntP(term)
        if t[0] == "ident":
            nxt = self.toks[self.pos + 1]
            if nxt[:2] == ("sym", "("):
                name = self.next()[1]
                self.next()
                args = [self.term()]
                while self.peek()[:2] == ("sym", ","):
                    self.next()
                    args.append(self.term())
                self.expect("sym", ")")
                return Rel(name, tuple(args))
        left = self.term()
        op = self.peek()
        if op[0] != "sym" or op[1] not in ("<", "<=", "=", "!=", ">", ">="):
            self.fail("expected comparison operator")
        self.next()
        right = self.term()
        return Cmp(left, op[1], right)

    def term(self):
        neg = False
        if self.peek()[:2] == ("sym", "-"):
            self.next()
            neg = True
        t = self.addend()
        if neg:
            t = t.scale(-1)
        while self.peek()[0] == "sym" and self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            nxt = self.addend()
            t = t + nxt if op == "+" else t - nxt
        return t

    def addend(self):
        t = self.peek()
        if t[0] == "int":
            self.next()
            q = Fraction(int(t[1]))
            if self.peek()[:2] == ("sym", "/"):
                self.next()
                d = self.expect("int")
                q = q / int(d[1])
            if self.peek()[:2] == ("sym", "*"):
                self.next()
                name = self.expect("ident")[1]
                return var(name).scale(q)
            return num(q)
        if t[0] == "ident":
            self.next()
            return var(t[1])
        self.fail("expected a term")


def parse_formula(text: str):
    """Parse concrete syntax into an alpha-renamed AST."""
    p = _Parser(text)
    f = p.formula()
    if p.peek()[0] != "eof":
        p.fail("trailing input")
    return _alpha_rename(f)


def _alpha_rename(f):
    counter = itertools.count(1)

    def sub_term(t, env):
        return Term(tuple((env.get(n, n), c) for n, c in t.coeffs), t.const)

    def walk(f, env):
        if isinstance(f, (FTrue, FFalse)):
            return f
        if isinstance(f, Cmp):
            return Cmp(sub_term(f.left, env), f.op, sub_term(f.right, env))
        if isinstance(f, IntP):
            return IntP(sub_term(f.term, env))
        if isinstance(f, Rel):
            return Rel(f.name, tuple(sub_term(t, env) for t in f.args))
        if isinstance(f, Not):
            return Not(walk(f.sub, env))
        if isinstance(f, (And, Or, Implies, Iff)):
            return type(f)(walk(f.left, env), walk(f.right, env))
        if isinstance(f, (Exists, Forall)):
            fresh = f"{f.var}'{next(counter)}"
            env2 = dict(env)
            env2[f.var] = fresh
            return type(f)(fresh, walk(f.body, env2))
        raise TypeError(f"not a formula node: {f!r}")

    return walk(f, {})


# ---------------------------------------------------------------------------
# compiler


def _lower(f):
    """Rewrite -> and <-> into the not/and/or core."""
    if isinstance(f, (FTrue, FFalse, Cmp, IntP, Rel)):
        return f
    if isinstance(f, Not):
        return Not(_lower(f.sub))
    if isinstance(f, And):
        return And(_lower(f.left), _lower(f.right))
    if isinstance(f, Or):
        return Or(_lower(f.left), _lower(f.right))
    if isinstance(f, Implies):
        return Or(Not(_lower(f.left)), _lower(f.right))
    if isinstance(f, Iff):
        a, b = _lower(f.left), _lower(f.right)
        return And(Or(Not(a), b), Or(Not(b), a))
    if isinstance(f, Exists):
        return Exists(f.var, _lower(f.body))
    if isinstance(f, Forall):
        return Not(Exists(f.var, Not(_lower(f.body))))
    raise TypeError(f"not a formula node: {f!r}")


def _canon_key(f, order, depth_env):
    def term_key(t):
        parts = []
        for n, c in t.coeffs:
            if n in depth_env:
                parts.append(("b", depth_env[n], str(c)))
            elif n in order:
                parts.append(("f", order.index(n), str(c)))
            else:
                raise FormulaError(f"unbound variable {n!r}")
        return (tuple(sorted(parts)), str(t.const))

    if isinstance(f, (FTrue, FFalse)):
        return type(f).__name__
    if isinstance(f, Cmp):
        return ("cmp", term_key(f.left), f.op, term_key(f.right))
    if isinstance(f, IntP):
        return ("int", term_key(f.term))
    if isinstance(f, Rel):
        return ("rel", f.name, tuple(term_key(t) for t in f.args))
    if isinstance(f, Not):
        return ("not", _canon_key(f.sub, order, depth_env))
    if isinstance(f, (And, Or)):
        return (
            type(f).__name__,
            _canon_key(f.left, order, depth_env),
            _canon_key(f.right, order, depth_env),
        )
    if isinstance(f, Exists):
        env2 = dict(depth_env)
        env2[f.var] = len(order) + len(depth_env)
        return ("ex", _canon_key(f.body, order, env2))
    raise TypeError(f"unexpected node in core form: {f!r}")


_COMPILE_CACHE = {}
_fresh_counter = itertools.count(1)


def clear_cache():
    _COMPILE_CACHE.clear()


def _fresh(prefix="w"):
    return f"{prefix}${next(_fresh_counter)}"


def compile_formula(f, base, free_order, binding=None) -> RelationAutomaton:
    """Automaton over the free_order tracks denoting f's satisfying tuples."""
    binding = binding or {}
    free_order = list(free_order)
    if len(set(free_order)) != len(free_order):
        raise FormulaError("duplicate variables in free order")
    core = _lower(f)
    for v in free_variables(core):
        if v not in free_order:
            raise FormulaError(f"unbound variable {v!r}")
    for name in relation_names(core):
        if name not in binding:
            raise FormulaError(f"unbound relation symbol {name!r}")
        if binding[name].base != base:
            raise ValueError(f"relation {name!r} has base {binding[name].base}, not {base}")
        if not binding[name].saturated:
            raise ValueError(f"relation {name!r} must be saturated")
    return _compile(core, base, tuple(free_order), binding)


def _compile(f, base, order, binding):
    # compile over the variables actually used, then embed: keeps every
    # intermediate automaton at its minimal arity and makes the cache hit
    # across different track layouts
    used = set(free_variables(f))
    support = tuple(v for v in order if v in used)
    if not support:
        support = order[:1]
    if len(support) < len(order):
        sub = _compile(f, base, support, binding)
        positions = [order.index(v) for v in support]
        return minimize_and_classify(apply_tracks(sub, positions, len(order)))
    key = (_canon_key(f, order, {}), base, len(order),
           tuple(sorted((n, id(a)) for n, a in binding.items())))
    hit = _COMPILE_CACHE.get(key)
    if hit is not None:
        return hit
    out = _compile_inner(f, base, order, binding)
    if not out.saturated:
        raise AssertionError("compiler produced an unsaturated automaton")
    _COMPILE_CACHE[key] = out
    return out


def _mk_empty(base, arity):
    full = well_formed(base, arity)
    empty = minimize_and_classify(complement(full))
    from .automaton import make_automaton

    return make_automaton(
        empty.base, empty.arity, empty.initial, empty.delta, empty.prio,
        kind=empty.kind, saturated=True, check=False,
    )


def _compile_inner(f, base, order, binding):
    n = len(order)
    if isinstance(f, FTrue):
        return well_formed(base, n)
    if isinstance(f, FFalse):
        return _mk_empty(base, n)
    if isinstance(f, Cmp):
        d = f.left - f.right
        coeffs = dict(d.coeffs)
        atom = LinearAtom.from_rational(
            [coeffs.get(v, Fraction(0)) for v in order], f.op, -d.const
        )
        return minimize_and_classify(linear_atom(atom, base, n))
    if isinstance(f, IntP):
        v = f.term.single_var()
        if v is not None:
            return minimize_and_classify(int_atom(base, n, order.index(v)))
        w = _fresh()
        return _compile(
            Exists(w, And(Cmp(var(w), "=", f.term), IntP(var(w)))),
            base, order, binding,
        )
    if isinstance(f, Rel):
        aut = binding[f.name]
        if len(f.args) != aut.arity:
            raise FormulaError(
                f"relation {f.name!r} expects {aut.arity} arguments, got {len(f.args)}"
            )
        simple = [t.single_var() for t in f.args]
        if all(v is not None for v in simple):
            positions = [order.index(v) for v in simple]
            return minimize_and_classify(apply_tracks(aut, positions, n))
        fresh = [_fresh() for _ in f.args]
        body = conj(
            [Cmp(var(w), "=", t) for w, t in zip(fresh, f.args)]
            + [Rel(f.name, tuple(var(w) for w in fresh))]
        )
        return _compile(_lower(exists(fresh, body)), base, order, binding)
    if isinstance(f, Not):
        return minimize_and_classify(complement(_compile(f.sub, base, order, binding)))
    if isinstance(f, (And, Or)):
        mode = "and" if isinstance(f, And) else "or"
        a = _compile(f.left, base, order, binding)
        b = _compile(f.right, base, order, binding)
        return minimize_and_classify(product(a, b, mode))
    if isinstance(f, Exists):
        if f.var in order:
            raise FormulaError(f"quantifier shadows variable {f.var!r}")
        inner = _compile(f.body, base, order + (f.var,), binding)
        return project_exists(inner, n)
    raise TypeError(f"unexpected node in core form: {f!r}")


def eval_sentence(f, base, binding=None) -> bool:
    """Truth of a closed formula over (R, Z, +, <, 1, binding)."""
    fv = free_variables(f)
    if fv:
        raise FormulaError(f"sentence has free variables: {fv}")
    dummy = "_$dummy"
    aut = compile_formula(f, base, [dummy], binding)
    return not is_empty(aut)
