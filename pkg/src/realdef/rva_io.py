"""Text format for relation automata (`rva 1`).

One directive per line, ``#`` comments.  The writer emits states in
canonical BFS order so minimized outputs are byte-stable.
"""

from __future__ import annotations

import numpy as np

from .automaton import (
    RelationAutomaton,
    alphabet,
    canonical_order,
    make_automaton,
)
from .budget import EngineLimit


class ParseError(ValueError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _parse_label(tok, alpha, line_no):
    if len(tok) != alpha.arity:
        raise ParseError(line_no, f"label '{tok}' does not have {alpha.arity} tracks")
    if tok == "*" * alpha.arity:
        return alpha.star
    digs = []
    for ch in tok:
        if ch == "*":
            raise ParseError(line_no, f"label '{tok}': '*' must fill the whole column")
        if not ch.isdigit() or int(ch) >= alpha.base:
            raise ParseError(line_no, f"label '{tok}': digit out of base range")
        digs.append(int(ch))
    return alpha.id_of(digs)


def loads(text: str) -> RelationAutomaton:
    """Parse, validate, and normalize an automaton description."""
    header = {}
    acc = None
    prio_map = {}
    table = None
    trans = []
    lines = text.splitlines()
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        if key == "rva":
            if parts[1:] != ["1"]:
                raise ParseError(no, "unsupported format version")
        elif key in ("base", "arity", "states", "init"):
            if len(parts) != 2 or not parts[1].lstrip("-").isdigit():
                raise ParseError(no, f"{key} expects one integer")
            header[key] = int(parts[1])
        elif key == "kind":
            if len(parts) != 2 or parts[1] not in ("wdba", "parity", "muller"):
                raise ParseError(no, "kind must be wdba, parity or muller")
            header["kind"] = parts[1]
        elif key == "saturated":
            if len(parts) != 2 or parts[1] not in ("true", "false"):
                raise ParseError(no, "saturated expects true|false")
            header["saturated"] = parts[1] == "true"
        elif key == "acc":
            acc = [int(p) for p in parts[1:]]
        elif key == "prio":
            for p in parts[1:]:
                if ":" not in p:
                    raise ParseError(no, "prio entries look like state:priority")
                q, pr = p.split(":", 1)
                prio_map[int(q)] = int(pr)
        elif key == "table":
            body = line[len("table") :].strip()
            table = []
            for grp in body.split(";"):
                grp = grp.strip()
                if not grp:
                    continue
                if not (grp.startswith("{") and grp.endswith("}")):
                    raise ParseError(no, "muller table entries are {q,...} groups")
                inner = grp[1:-1].strip()
                table.append(frozenset(int(x) for x in inner.split(",") if x.strip()))
        elif key == "trans":
            if len(parts) != 4:
                raise ParseError(no, "trans expects: trans <q> <label> <q'>")
            trans.append((no, int(parts[1]), parts[2], int(parts[3])))
        else:
            raise ParseError(no, f"unknown directive '{key}'")

    for field in ("base", "arity", "states", "init", "kind"):
        if field not in header:
            raise ParseError(len(lines), f"missing '{field}' directive")
    base, arity, m = header["base"], header["arity"], header["states"]
    if base < 2:
        raise ParseError(0, "base must be >= 2")
    if base > 10:
        raise ParseError(0, "single-character digit labels limit the base to 10")
    alpha = alphabet(base, arity)
    delta = np.full((m, alpha.n_labels), -1, dtype=np.int64)
    for no, q, tok, q2 in trans:
        if not (0 <= q < m and 0 <= q2 < m):
            raise ParseError(no, "transition state out of range")
        lid = _parse_label(tok, alpha, no)
        if delta[q, lid] not in (-1, q2):
            raise ParseError(no, f"nondeterminism: state {q} label {tok} redefined")
        delta[q, lid] = q2
    missing = np.argwhere(delta < 0)
    if missing.size:
        q, lid = missing[0]
        raise ParseError(
            0,
            f"incomplete: state {int(q)} has no transition on label "
            f"'{alpha.label_str(int(lid))}'",
        )
    if not (0 <= header["init"] < m):
        raise ParseError(0, "initial state out of range")

    kind = header["kind"]
    if kind == "wdba":
        if acc is None:
            raise ParseError(0, "wdba input requires an acc directive")
        prio = np.ones(m, dtype=np.int32)
        prio[np.array(acc, dtype=np.int64)] = 0
        a = make_automaton(base, arity, header["init"], delta, prio, kind="wdba")
    elif kind == "parity":
        if set(prio_map) != set(range(m)):
            raise ParseError(0, "parity input requires a priority for every state")
        prio = np.array([prio_map[q] for q in range(m)], dtype=np.int32)
        a = make_automaton(base, arity, header["init"], delta, prio, kind="parity")
    else:
        if table is None:
            raise ParseError(0, "muller input requires a table directive")
        a = _muller_to_parity(base, arity, header["init"], delta, table)

    _validate_language(a)
    from .minimize import inherently_weak, minimize_and_classify

    if a.kind == "parity" and inherently_weak(a):
        a = minimize_and_classify(a)

    saturated = header.get("saturated", False)
    if not saturated:
        saturated = _saturation_check(a)
    return make_automaton(
        a.base, a.arity, a.initial, a.delta, a.prio,
        kind=a.kind, saturated=saturated, check=False,
    )


def _validate_language(a: RelationAutomaton):
    """Accepted words must all be well-formed encodings."""
    from .automaton import is_empty, product, well_formed

    wf = well_formed(a.base, a.arity)
    # raw flip: complement over all omega-words, not relative to wf
    not_wf = make_automaton(
        wf.base, wf.arity, wf.initial, wf.delta, wf.prio ^ 1, kind="wdba", check=False
    )
    if not is_empty(product(a, not_wf, "and")):
        raise ValueError("automaton accepts ill-formed words")


def _saturation_check(a: RelationAutomaton) -> bool:
    from .automaton import equivalent
    from .nba import saturate

    try:
        return equivalent(a, saturate(a))
    except EngineLimit:
        return False


def _muller_to_parity(base, arity, init, delta, table):
    """Deterministic Muller to parity via the latest appearance record."""
    m = delta.shape[0]
    L = delta.shape[1]
    max_prio = 2 * m + 1

    def succ(key, lid):
        rec, _ = key
        q2 = int(delta[rec[0], lid])
        pos = rec.index(q2) if q2 in rec else len(rec)
        new = (q2,) + tuple(x for x in rec if x != q2)
        return (new, pos)

    start = ((init,), 0)
    ids = {start: 0}
    order = [start]
    rows = []
    i = 0
    while i < len(order):
        row = np.empty(L, dtype=np.int32)
        for l in range(L):
            key = succ(order[i], l)
            s = ids.get(key)
            if s is None:
                s = len(order)
                ids[key] = s
                order.append(key)
            row[l] = s
        rows.append(row)
        i += 1

    # hit position h: the first h+1 record entries are the candidate
    # infinity set; the deepest position hit infinitely often names the
    # true infinity set, so deeper events must dominate (max-parity),
    # flipped here into the min-even convention
    prio = np.empty(len(order), dtype=np.int32)
    for s, (rec, pos) in enumerate(order):
        h = min(pos, len(rec) - 1)
        good = frozenset(rec[: h + 1]) in table
        prio[s] = 2 * (m - h) if good else 2 * (m - h) - 1
    from .minimize import minimize_and_classify

    a = make_automaton(base, arity, 0, np.vstack(rows), prio, kind="parity")
    return minimize_and_classify(a)


def dumps(a: RelationAutomaton) -> str:
    a = canonical_order(a)
    alpha = a.alpha
    out = [
        "rva 1",
        f"base {a.base}",
        f"arity {a.arity}",
        f"kind {a.kind}",
        f"states {a.n_states}",
        f"init {a.initial}",
    ]
    if a.kind == "wdba":
        accs = [str(q) for q in range(a.n_states) if a.prio[q] == 0]
        out.append("acc " + " ".join(accs) if accs else "acc")
    else:
        out.append("prio " + " ".join(f"{q}:{int(a.prio[q])}" for q in range(a.n_states)))
    out.append(f"saturated {'true' if a.saturated else 'false'}")
    for q in range(a.n_states):
        for lid in range(alpha.n_labels):
            out.append(f"trans {q} {alpha.label_str(lid)} {int(a.delta[q, lid])}")
    return "\n".join(out) + "\n"


def load(path) -> RelationAutomaton:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def dump(a: RelationAutomaton, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(a))
