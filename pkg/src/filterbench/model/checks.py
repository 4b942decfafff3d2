"""Validation of partial model presentations."""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations, product

from .core import Model
from .typeexpr import TypeExpr, arrow, atom, inter, inter_all
from .universe import type_universe


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def check_model(m: Model, composite_samples: int = 60, seed: int = 0) -> list[Violation]:
    """Every violated axiom of the presentation; an empty list means valid."""
    out: list[Violation] = []
    out += _semilattice(m)
    out += _ext_entries(m)
    if any(v.kind in ("commutativity", "missing-ext") for v in out):
        return out
    out += _reconstruction(m)
    out += _order_coherence(m)
    out += _arrow_axiom(m)
    out += _distributivity(m, composite_samples, seed)
    return out


def _semilattice(m: Model) -> list[Violation]:
    out = []
    for (a, b), c in m.meets.items():
        if a == b and c != a:
            out.append(Violation("idempotence", f"{a} /\\ {a} = {c}"))
        if (b, a) in m.meets and a < b and m.meets[(b, a)] != c:
            out.append(Violation("commutativity",
                                 f"{a} /\\ {b} = {c} but {b} /\\ {a} = {m.meets[(b, a)]}"))
    for a, b in combinations(m.atoms, 2):
        c = m.atom_meet(a, b)
        if c is not None and not (m.atom_meet(c, a) == c and m.atom_meet(c, b) == c):
            out.append(Violation("lower-bound", f"{a} /\\ {b} = {c} is not below both"))
    for a, b, c in product(m.atoms, repeat=3):
        ab, bc = m.atom_meet(a, b), m.atom_meet(b, c)
        left = m.atom_meet(ab, c) if ab is not None else None
        right = m.atom_meet(a, bc) if bc is not None else None
        if ab is not None and bc is not None and left != right:
            out.append(Violation("associativity", f"({a} /\\ {b}) /\\ {c} = {left} "
                                                  f"but {a} /\\ ({b} /\\ {c}) = {right}"))
    return out


def _ext_entries(m: Model) -> list[Violation]:
    out = []
    for a in m.atoms:
        if not m.ext.get(a):
            out.append(Violation("missing-ext", f"atom {a} has no arrow decomposition"))
    return out


def _reconstruction(m: Model) -> list[Violation]:
    out = []
    for a in m.atoms:
        rebuilt = inter_all(arrow(s, t) for s, t in m.ext[a])
        if not m.eq(atom(a), rebuilt):
            out.append(Violation("ext-reconstruction", f"{a} differs from the meet of its ext arrows"))
    for (a, b), c in sorted(m.arrows.items()):
        if not m.eq(atom(c), arrow(atom(a), atom(b))):
            out.append(Violation("ext-reconstruction",
                                 f"arrow {a} -> {b} = {c} is not what ext({c}) reconstructs"))
    return out


def _order_coherence(m: Model) -> list[Violation]:
    """The table order on atoms must agree with the order of their unfoldings."""
    out = []
    for a, b in product(m.atoms, repeat=2):
        if a == b:
            continue
        table = m.atom_leq(a, b)
        unfolded = m.leq(m.unfold(atom(a)), m.unfold(atom(b)))
        if table != unfolded:
            out.append(Violation("order-coherence",
                                 f"table says {a} <= {b} is {table}, unfoldings say {unfolded}"))
    return out


def _arrow_axiom(m: Model) -> list[Violation]:
    out = []
    by_src: dict[str, list[str]] = {}
    for a, b in m.arrows:
        by_src.setdefault(a, []).append(b)
    for a, tgts in sorted(by_src.items()):
        for b1, b2 in combinations(sorted(tgts), 2):
            c = m.atom_meet(b1, b2)
            joined = inter(atom(m.arrows[(a, b1)]), atom(m.arrows[(a, b2)]))
            if c is not None and (a, c) not in m.arrows:
                out.append(Violation("arrow-axiom", f"{a} -> {b1} and {a} -> {b2} defined "
                                                    f"but {a} -> {c} is not"))
            elif c is not None and not m.eq(atom(m.arrows[(a, c)]), joined):
                out.append(Violation("arrow-axiom", f"{a} -> ({b1} /\\ {b2}) differs from the meet"))
            elif c is None and not m.eq(arrow(atom(a), inter(atom(b1), atom(b2))), joined):
                out.append(Violation("arrow-axiom", f"{a} -> ({b1} /\\ {b2}) differs from the meet"))
    return out


def _distributivity(m: Model, samples: int, seed: int) -> list[Violation]:
    out = []
    cands = [TypeExpr(frozenset())] + [atom(a) for a in m.atoms]
    triples = [(atom(a), atom(b), atom(c)) for a, b, c in product(m.atoms, repeat=3)]
    if samples:
        uni = type_universe(m, 2)
        rng = random.Random(seed)
        triples += [tuple(rng.choice(uni) for _ in range(3)) for _ in range(samples)]
        cands = uni
    for al, be, ga in triples:
        if not m.leq(inter(be, ga), al):
            continue
        ok = any(m.leq(be, b2) and m.leq(ga, g2) and m.eq(inter(b2, g2), al)
                 for b2 in cands for g2 in cands)
        if not ok:
            out.append(Violation("distributivity",
                                 f"{m.show(al)} >= {m.show(be)} /\\ {m.show(ga)} has no split"))
    return out
