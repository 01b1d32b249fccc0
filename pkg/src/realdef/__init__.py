"""Relations over R^n as deterministic omega-automata on base-k digit
encodings, with decision procedures for first-order definability in real
addition (with and without the integer predicate)."""

from .automaton import (
    RelationAutomaton,
    UPWord,
    canonical_order,
    complement,
    decode,
    emptiness_witness,
    equivalent,
    is_empty,
    isomorphic,
    member,
    product,
    well_formed,
)
from .arith import LinearAtom, int_atom, linear_atom, xk_atom
from .budget import EngineLimit, limits
from .minimize import minimize_and_classify
from .nba import project_exists, saturate
from .rva_io import dump, dumps, load, loads

__all__ = [
    "EngineLimit",
    "LinearAtom",
    "RelationAutomaton",
    "UPWord",
    "canonical_order",
    "complement",
    "decode",
    "dump",
    "dumps",
    "emptiness_witness",
    "equivalent",
    "int_atom",
    "is_empty",
    "isomorphic",
    "limits",
    "linear_atom",
    "load",
    "loads",
    "member",
    "minimize_and_classify",
    "product",
    "project_exists",
    "saturate",
    "well_formed",
    "xk_atom",
]
