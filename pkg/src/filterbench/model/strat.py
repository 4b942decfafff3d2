"""Stratified positivity: rank/polarity certificates, checking and search."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterator

from ..errors import ResourceError
from .checks import Violation
from .core import Model
from .typeexpr import Arrow, Atom, TypeExpr
from .universe import type_universe


@dataclass
class StratWitness:
    rank: dict[str, int]
    polarity: dict[str, bool] = field(default_factory=dict)

    def describe(self) -> str:
        return ", ".join(f"rank {a}={self.rank[a]}" for a in sorted(self.rank)) + ", " + \
            ", ".join(f"V({a})={str(self.polarity[a]).lower()}" for a in sorted(self.polarity))


class _Extension:
    """Rank and polarity lifted from atoms to composite types.

    Ranks are pairs compared lexicographically: atoms sit at ``(rank, 0)``.
    An intersection takes the largest factor rank and the conjunction of the
    polarities found there. An arrow takes the largest rank of its two sides
    and the polarity dictated by them (that of an equal-rank target, or the
    opposite of an equal-rank source); when both sides sit at that rank with
    the same polarity the arrow is lifted one sub-level above them instead.
    """

    def __init__(self, m: Model, w: StratWitness):
        self.m = m
        self.w = w
        self.memo: dict = {}

    def rank(self, t: TypeExpr) -> tuple[int, int]:
        return self.info(t)[0]

    def polarity(self, t: TypeExpr) -> bool | None:
        return self.info(t)[1]

    def info(self, t: TypeExpr) -> tuple[tuple[int, int], bool | None]:
        if t in self.memo:
            return self.memo[t]
        parts = [self._factor(f) for f in t.factors]
        if not parts:
            res: tuple = ((0, 0), None)
        else:
            top = max(r for r, _ in parts)
            pol = all(bool(v) for r, v in parts if r == top) if top > (0, 0) else None
            res = (top, pol)
        self.memo[t] = res
        return res

    def _factor(self, f) -> tuple[tuple[int, int], bool | None]:
        match f:
            case Atom(n):
                if n == self.m.omega:
                    return (0, 0), None
                return (self.w.rank.get(n, 0), 0), self.w.polarity.get(n)
            case Arrow(s, g):
                (rs, vs), (rg, vg) = self.info(s), self.info(g)
                top = max(rs, rg)
                if rg == top and rs == top and vs == vg:
                    return (top[0], top[1] + 1), vg
                if rg == top:
                    return top, vg
                return top, (None if vs is None else not vs)
        raise TypeError(f)


def sp_verify(m: Model, w: StratWitness) -> list[Violation]:
    """All clauses of stratified positivity that the witness violates."""
    out: list[Violation] = []
    for a in m.atoms:
        if a not in w.rank:
            out.append(Violation("witness", f"no rank for {a}"))
        elif w.rank[a] < 1:
            out.append(Violation("bottom", f"rank of {a} must exceed the rank of the top"))
        if a not in w.polarity:
            out.append(Violation("witness", f"no polarity for {a}"))
    if out:
        return out
    ext = _Extension(m, w)
    for g in m.atoms:
        for alpha, beta in m.ext[g]:
            out += _ext_clauses(m, ext, g, TypeExpr(frozenset({Atom(g)})), alpha, beta)
    # formal intersections left by free meets are elements too
    for gamma in free_meets(m):
        for alpha, beta in m.ext_pairs(gamma):
            out += _ext_clauses(m, ext, m.show(gamma), gamma, alpha, beta)
    for a, b in combinations(m.atoms, 2):
        c = m.atom_meet(a, b)
        if c is None:
            continue
        ra, rb, rc = w.rank[a], w.rank[b], w.rank[c]
        if rc > ra and rc > rb:
            out.append(Violation("meet-rank", f"{a} /\\ {b} = {c} ranks above both"))
        if rc < ra and c != b:
            out.append(Violation("meet-strict", f"{a} /\\ {b} = {c} ranks below {a} but is not {b}"))
        if rc < rb and c != a:
            out.append(Violation("meet-strict", f"{a} /\\ {b} = {c} ranks below {b} but is not {a}"))
        if ra == rb and w.polarity[c] != (w.polarity[a] and w.polarity[b]):
            out.append(Violation("meet-polarity",
                                 f"V({c}) must equal V({a}) and V({b}) for equal-rank {a}, {b}"))
    return out


def free_meets(m: Model) -> list[TypeExpr]:
    """Intersections of two or more atoms that no named atom stands for."""
    seen: dict[frozenset, None] = {}
    for r in range(2, len(m.atoms) + 1):
        for group in combinations(m.atoms, r):
            red = m.reduce_atoms(group)
            if len(red) > 1:
                seen.setdefault(red, None)
    return [TypeExpr(frozenset(Atom(a) for a in red)) for red in seen]


def _ext_clauses(m, ext: _Extension, name: str, gamma: TypeExpr, alpha, beta) -> list[Violation]:
    out = []
    rg, vg = ext.rank(gamma), ext.polarity(gamma)
    ra, rb = ext.rank(alpha), ext.rank(beta)
    pair = f"({m.show(alpha)}, {m.show(beta)}) in ext({name})"
    if rb > rg:
        out.append(Violation("target-rank", f"{pair}: target ranks above {name}"))
    elif rb == rg and ext.polarity(beta) != vg:
        out.append(Violation("target-polarity", f"{pair}: equal rank but different polarity"))
    if ra > rg:
        out.append(Violation("source-rank", f"{pair}: source ranks above {name}"))
    elif ra == rg and ext.polarity(alpha) == vg:
        out.append(Violation("source-polarity", f"{pair}: equal rank and equal polarity"))
    return out


def sp_verify_closure(m: Model, w: StratWitness, depth: int = 2) -> list[Violation]:
    """Ext clauses for every composite type of the depth-bounded universe,
    with rank and polarity extended from the atoms."""
    out = sp_verify(m, w)
    ext = _Extension(m, w)
    for t in type_universe(m, depth):
        if t.is_top or all(isinstance(f, Atom) for f in t.factors):
            continue
        for alpha, beta in m.ext_pairs(t):
            out += _ext_clauses(m, ext, m.show(t), t, alpha, beta)
    return out


def _ordered_partitions(items: list[str]) -> Iterator[list[list[str]]]:
    """Ordered set partitions, fewest blocks first."""
    n = len(items)
    for r in range(1, n + 1):
        yield from _partitions_into(items, r)


def _partitions_into(items: list[str], r: int) -> Iterator[list[list[str]]]:
    n = len(items)
    for ranks in product(range(r), repeat=n):
        if len(set(ranks)) != r:
            continue
        blocks: list[list[str]] = [[] for _ in range(r)]
        for it, k in zip(items, ranks):
            blocks[k].append(it)
        yield blocks


def _rank_ok(m: Model, ext: _Extension, rank: dict[str, int]) -> bool:
    for g in m.atoms:
        rg = rank[g]
        for alpha, beta in m.ext[g]:
            if ext.rank(alpha) > (rg, 0) or ext.rank(beta) > (rg, 0):
                return False
    for a, b in combinations(m.atoms, 2):
        c = m.atom_meet(a, b)
        if c is None:
            continue
        if rank[c] > rank[a] and rank[c] > rank[b]:
            return False
        if (rank[c] < rank[a] and c != b) or (rank[c] < rank[b] and c != a):
            return False
    return True


def sp_search(m: Model, max_atoms: int = 8) -> StratWitness | None:
    """First witness, in a fixed order, passing ``sp_verify``.

    Ranks range over ordered partitions of the non-top atoms (fewest levels
    first) and polarities over all assignments (false before true). ``None``
    means no witness exists for this finite presentation.
    """
    atoms = list(m.atoms)
    if len(atoms) > max_atoms:
        raise ResourceError(f"{len(atoms)} atoms exceed the search bound {max_atoms}")
    if not atoms:
        return StratWitness({}, {})
    for blocks in _ordered_partitions(atoms):
        rank = {a: i + 1 for i, blk in enumerate(blocks) for a in blk}
        w = StratWitness(rank, {})
        if not _rank_ok(m, _Extension(m, w), rank):
            continue
        for pols in product((False, True), repeat=len(atoms)):
            w = StratWitness(rank, dict(zip(atoms, pols)))
            if not sp_verify(m, w):
                return w
    return None
