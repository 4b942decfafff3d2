"""Finite type universes and a bounded-unfolding reference order."""

from __future__ import annotations

from .core import Model
from .typeexpr import OMEGA, Arrow, Atom, TypeExpr, arrow, atom, inter_all, sort_key


def type_universe(m: Model, depth: int) -> list[TypeExpr]:
    """Top and atoms at depth 1; each further level adds arrows between
    members of the previous level (arrows into the top are skipped)."""
    level = [OMEGA] + [atom(a) for a in m.atoms]
    seen = set(level)
    for _ in range(depth - 1):
        new = []
        for s in level:
            for t in level:
                if t.is_top:
                    continue
                x = m.norm(arrow(s, t))
                if x not in seen:
                    seen.add(x)
                    new.append(x)
        level = level + new
    return sorted(level, key=lambda t: (t.depth(), sort_key(t)))


def unfolding_leq(m: Model, a: TypeExpr, b: TypeExpr, k: int) -> bool | None:
    """Three-valued reference order: atoms may be replaced by their ext arrows
    at most ``k`` times along any path, after which comparisons needing a
    further unfolding are unknown (``None``).  No assumptions are made about
    cycles, so every definite answer has a finite justification."""
    return _Unfolder(m).rel(m.norm(a), m.norm(b), k)


class _Unfolder:
    def __init__(self, m: Model):
        self.m = m
        self.memo: dict = {}

    def rel(self, a: TypeExpr, b: TypeExpr, k: int) -> bool | None:
        out: bool | None = True
        for f in b.factors:
            r = self.rel_factor(a, f, k)
            if r is False:
                return False
            if r is None:
                out = None
        return out

    def rel_factor(self, a: TypeExpr, f, k: int) -> bool | None:
        key = (a, f, k)
        if key in self.memo:
            return self.memo[key]
        r = self._decide(a, f, k)
        self.memo[key] = r
        return r

    def _arrows_of(self, a: TypeExpr):
        return [(g.src, g.tgt) for g in a.factors if isinstance(g, Arrow)]

    def _decide(self, a: TypeExpr, f, k: int) -> bool | None:
        m = self.m
        names = [g.name for g in a.factors if isinstance(g, Atom)]
        match f:
            case Atom(n):
                for x in m.reduce_atoms(names):
                    if m.atom_leq(x, n):
                        return True
                if len(names) == len(a.factors):
                    return False
                if k == 0:
                    return None
                target = m.unfold(TypeExpr(frozenset({f})))
                return self.rel(a, m.norm(target), k - 1)
            case Arrow(src, tgt):
                if names:
                    if k == 0:
                        return None
                    pairs = list(m.ext_pairs(a))
                    k = k - 1
                else:
                    pairs = self._arrows_of(a)
                sure, maybe = [], []
                for alpha, beta in pairs:
                    r = self.rel(src, alpha, k)
                    if r is True:
                        sure.append(beta)
                        maybe.append(beta)
                    elif r is None:
                        maybe.append(beta)
                # fewer chosen targets give a larger meet, hence a harder goal
                if self.rel(m.norm(inter_all(sure)), tgt, k) is True:
                    return True
                if self.rel(m.norm(inter_all(maybe)), tgt, k) is False:
                    return False
                return None
        raise TypeError(f)


def unfolding_agreement(m: Model, depth: int = 3, unfoldings: tuple[int, ...] = (1, 2, 3)):
    """Compare ``leq`` with the unfolding order on all pairs of the
    universe. Returns (pairs, decided, disagreements)."""
    uni = [m.norm(t) for t in type_universe(m, depth)]
    orc = _Unfolder(m)
    decided, bad = 0, []
    for a in uni:
        for b in uni:
            r = m.leq(a, b)
            for k in unfoldings:
                o = orc.rel(a, b, k)
                if o is None:
                    continue
                decided += 1
                if o != r:
                    bad.append((a, b, k, r))
    return len(uni) ** 2, decided, bad
