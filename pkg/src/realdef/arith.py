"""Automata for the atomic predicates: linear (in)equalities, the integer
predicate, and the base-dependent digit predicate.

All constructions are value-based (most-significant digit first, running
threshold in the integer phase, residual interval in the fractional
phase), so every atom automaton is saturated by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .automaton import RelationAutomaton, STAR, build_deterministic

_FLIP = {">": "<", ">=": "<="}


@dataclass(frozen=True)
class LinearAtom:
    """sum(coeffs[i] * x_i) cmp const with integer data."""

    coeffs: tuple
    cmp: str  # < <= = != >= >
    const: int

    @staticmethod
    def from_rational(coeffs, cmp, const) -> "LinearAtom":
        """Clear denominators of a rational-coefficient comparison."""
        coeffs = [Fraction(c) for c in coeffs]
        const = Fraction(const)
        mult = lcm(*[f.denominator for f in coeffs + [const]])
        return LinearAtom(
            tuple(int(c * mult) for c in coeffs), cmp, int(const * mult)
        )


def linear_atom(atom: LinearAtom, base: int, arity: int) -> RelationAutomaton:
    if len(atom.coeffs) != arity:
        raise ValueError("coefficient count must match arity")
    if atom.cmp in _FLIP:
        flipped = LinearAtom(
            tuple(-c for c in atom.coeffs), _FLIP[atom.cmp], -atom.const
        )
        return linear_atom(flipped, base, arity)
    if atom.cmp == "!=":
        from .automaton import complement
        from .minimize import minimize_and_classify

        eq = linear_atom(LinearAtom(atom.coeffs, "=", atom.const), base, arity)
        return minimize_and_classify(complement(eq))
    if atom.cmp not in ("<", "<=", "="):
        raise ValueError(f"unknown comparator {atom.cmp!r}")

    k = base
    a = atom.coeffs
    c = atom.const
    cmp = atom.cmp
    a_pos = sum(x for x in a if x > 0)
    a_neg = -sum(x for x in a if x < 0)

    def classify_int(g):
        # determined outcomes over every continuation (any number of
        # remaining integer columns, then an arbitrary fractional part)
        if cmp == "<":
            if g + a_pos <= 0 and g + a_pos < c:
                return ("T", "int")
            if g - a_neg >= 0 and g - a_neg >= c:
                return None
        elif cmp == "<=":
            if g + a_pos <= 0 and g + a_pos <= c:
                return ("T", "int")
            if g - a_neg >= 0 and g - a_neg > c:
                return None
        else:
            if g - a_neg > c and g - a_neg >= 0:
                return None
            if g + a_pos < c and g + a_pos <= 0:
                return None
        return ("int", g)

    def classify_frac(b):
        # residual constraint: sum a_i frac_i cmp b with frac_i in [0, 1];
        # staying live forever realizes the residual exactly
        if cmp == "<":
            if b > a_pos:
                return ("T", "frac")
            if b <= -a_neg:
                return None
        elif cmp == "<=":
            if b >= a_pos:
                return ("T", "frac")
            if b < -a_neg:
                return None
        else:
            if not (-a_neg <= b <= a_pos):
                return None
        return ("frac", b)

    def step(key, digs):
        if key == "sign":
            if digs is STAR:
                return None
            if any(d not in (0, k - 1) for d in digs):
                return None
            g = sum(ai * (-1 if d == k - 1 else 0) for ai, d in zip(a, digs))
            return classify_int(g)
        tag = key[0]
        if tag == "int":
            g = key[1]
            if digs is STAR:
                return classify_frac(c - g)
            return classify_int(k * g + sum(ai * d for ai, d in zip(a, digs)))
        if tag == "frac":
            b = key[1]
            if digs is STAR:
                return None
            return classify_frac(k * b - sum(ai * d for ai, d in zip(a, digs)))
        # true sink still checks well-formedness
        if key == ("T", "int"):
            return ("T", "frac") if digs is STAR else ("T", "int")
        return None if digs is STAR else ("T", "frac")

    def prio_of(key):
        if key == ("T", "frac"):
            return 0
        if key[0] == "frac":
            return 0 if cmp in ("<=", "=") else 1
        return 1

    return build_deterministic(base, arity, "sign", step, prio_of, saturated=True)


def int_atom(base: int, arity: int, track: int) -> RelationAutomaton:
    """The unary predicate x_track in Z (both digit tails accepted)."""
    if not 0 <= track < arity:
        raise ValueError("track out of range")
    k = base

    def step(key, digs):
        if key == "sign":
            if digs is STAR or any(d not in (0, k - 1) for d in digs):
                return None
            return "int"
        if key == "int":
            return "fstart" if digs is STAR else "int"
        if digs is STAR:
            return None
        if key == "fstart":
            if digs[track] == 0:
                return "f0"
            if digs[track] == k - 1:
                return "f9"
            return None
        if key == "f0":
            return "f0" if digs[track] == 0 else None
        return "f9" if digs[track] == k - 1 else None

    def prio_of(key):
        return 0 if key in ("f0", "f9") else 1

    return build_deterministic(base, arity, "sign", step, prio_of, saturated=True)


def xk_atom(base: int) -> RelationAutomaton:
    """X_k(x, y, z): y = k^i for some integer i, z in {0,...,k-1}, and some
    k-encoding of x carries digit z at position i.

    Built as a deterministic acceptor of canonically shaped witnesses
    (y and z in canonical form, x read literally), then saturated.
    """
    k = base

    def step(key, digs):
        if key == "sign":
            if digs is STAR:
                return None
            sx, sy, sz = digs
            if sx not in (0, k - 1) or sy != 0 or sz != 0:
                return None
            return ("i", False, None, 0)
        tag = key[0]
        if tag == "i":
            _, seen, d, zprev = key
            if digs is STAR:
                zval = zprev
                if seen:
                    return ("f", True) if d == zval else None
                return ("f", False, zval)
            dx, dy, dz = digs
            if zprev != 0:
                return None  # a nonzero z digit anywhere but position 0
            if dy == 1:
                if seen:
                    return None
                return ("i", True, dx, dz)
            if dy != 0:
                return None
            return ("i", seen, d, dz)
        # fractional phase
        if digs is STAR:
            return None
        dx, dy, dz = digs
        if dz != 0:
            return None
        if tag == "f" and key[1] is True:
            return ("f", True) if dy == 0 else None
        zval = key[2]
        if dy == 0:
            return ("f", False, zval)
        if dy == 1:
            return ("f", True) if dx == zval else None
        return None

    def prio_of(key):
        return 0 if key == ("f", True) else 1

    raw = build_deterministic(base, 3, "sign", step, prio_of, saturated=False)
    from .nba import saturate

    return saturate(raw)
