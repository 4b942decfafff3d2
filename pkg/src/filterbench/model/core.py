"""Finitely presented partial models and the order on their completion."""

from __future__ import annotations

import threading
from itertools import combinations
from typing import Iterable

from .typeexpr import (
    OMEGA,
    Arrow,
    Atom,
    ModelError,
    ResourceError,
    TypeExpr,
    inter_all,
    show,
    sort_key,
)

Pair = tuple[TypeExpr, TypeExpr]


class Model:
    """A partial model: atoms, a meet table, a partial arrow table, and ext.

    A meet entry of ``None`` marks a free meet: the intersection of the two
    atoms is kept as a two-factor type rather than a named atom.

    The instance doubles as a session: the order caches live here and are
    guarded by a lock, so one model may be shared between threads.
    """

    def __init__(
        self,
        name: str,
        omega: str,
        atoms: Iterable[str],
        meets: dict[tuple[str, str], str | None],
        arrows: dict[tuple[str, str], str],
        ext: dict[str, tuple[Pair, ...]],
        leq_budget: int = 200_000,
    ):
        self.name = name
        self.omega = omega
        self.atoms: tuple[str, ...] = tuple(atoms)
        self.meets = dict(meets)
        self.arrows = dict(arrows)
        self.ext = {a: tuple(ps) for a, ps in ext.items()}
        self.leq_budget = leq_budget
        self._lock = threading.RLock()
        self._cache: dict = {}
        self._local: dict = {}
        self._stack: set = set()
        self._assumed: set = set()
        self._visits = 0
        self._norm_memo: dict = {}
        self._reduce_memo: dict = {}
        self._pairs_memo: dict = {}
        self._top_memo: dict = {}
        self._canon_memo: dict = {}

    # atoms

    def has_atom(self, a: str) -> bool:
        return a == self.omega or a in self.atoms

    def atom_meet(self, a: str, b: str) -> str | None:
        if a == b:
            return a
        if a == self.omega:
            return b
        if b == self.omega:
            return a
        if (a, b) in self.meets:
            return self.meets[(a, b)]
        return self.meets.get((b, a))

    def atom_leq(self, a: str, b: str) -> bool:
        return a == b or b == self.omega or self.atom_meet(a, b) == a

    def reduce_atoms(self, names: Iterable[str]) -> frozenset[str]:
        """Combine atoms whose meet is a named atom until none remain."""
        key = frozenset(names)
        hit = self._reduce_memo.get(key)
        if hit is not None:
            return hit
        s = {n for n in key if n != self.omega}
        changed = True
        while changed:
            changed = False
            for a, b in combinations(sorted(s), 2):
                c = self.atom_meet(a, b)
                if c is not None:
                    s -= {a, b}
                    s.add(c)
                    changed = True
                    break
        out = frozenset(s)
        self._reduce_memo[key] = out
        return out

    # structure

    def _check_atoms(self, t: TypeExpr) -> None:
        for n in t.atoms():
            if not self.has_atom(n):
                raise ModelError(f"unknown atom {n!r} in model {self.name}")

    def norm(self, t: TypeExpr) -> TypeExpr:
        """Cheap structural normal form: no top atoms, no arrows into the top,
        atoms combined through the meet table."""
        hit = self._norm_memo.get(t)
        if hit is not None:
            return hit
        atoms: list[str] = []
        rest: set = set()
        for f in t.factors:
            match f:
                case Atom(n):
                    atoms.append(n)
                case Arrow(s, g):
                    g2 = self.norm(g)
                    if g2.is_top:
                        continue
                    rest.add(Arrow(self.norm(s), g2))
        for n in self.reduce_atoms(atoms):
            rest.add(Atom(n))
        out = TypeExpr(frozenset(rest))
        self._norm_memo[t] = out
        return out

    def ext_pairs(self, t: TypeExpr) -> tuple[Pair, ...]:
        hit = self._pairs_memo.get(t)
        if hit is not None:
            return hit
        out: list[Pair] = []
        for f in sorted(t.factors, key=lambda f: sort_key(TypeExpr(frozenset({f})))):
            match f:
                case Atom(n):
                    if n == self.omega:
                        continue
                    if n not in self.ext:
                        raise ModelError(f"atom {n!r} has no ext entry in model {self.name}")
                    out.extend(self.ext[n])
                case Arrow(s, g):
                    out.append((s, g))
        res = tuple(out)
        self._pairs_memo[t] = res
        return res

    def ext_of(self, t: TypeExpr) -> frozenset[Pair]:
        """Arrow decomposition: union over factors, atoms read from the table."""
        self._check_atoms(t)
        return frozenset(self.ext_pairs(self.norm(t)))

    def unfold(self, t: TypeExpr) -> TypeExpr:
        """Replace every atom factor by the intersection of its ext arrows."""
        return inter_all(TypeExpr(frozenset({Arrow(s, g)})) for s, g in self.ext_pairs(t))

    # order

    def leq(self, a: TypeExpr, b: TypeExpr) -> bool:
        hit = self._top_memo.get((a, b))
        if hit is not None:
            return hit
        self._check_atoms(a)
        self._check_atoms(b)
        key = (a, b)
        a, b = self.norm(a), self.norm(b)
        with self._lock:
            while True:
                self._local, self._stack, self._assumed = {}, set(), set()
                self._visits = 0
                r = self._leq(a, b)
                bad = [p for p in self._assumed if self._local.get(p) is False]
                # negative answers are sound even under optimistic assumptions
                for p, v in self._local.items():
                    if not v:
                        self._cache[p] = False
                if not bad:
                    for p, v in self._local.items():
                        self._cache[p] = v
                    self._top_memo[key] = r
                    return r

    def _leq(self, a: TypeExpr, b: TypeExpr) -> bool:
        return all(self._leq_factor(a, f) for f in b.factors)

    def _leq_factor(self, a: TypeExpr, f) -> bool:
        key = (a, f)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        hit = self._local.get(key)
        if hit is not None:
            return hit
        if key in self._stack:
            self._assumed.add(key)
            return True
        self._visits += 1
        if self._visits > self.leq_budget:
            raise ResourceError(f"subtyping budget {self.leq_budget} exceeded")
        self._stack.add(key)
        try:
            r = self._decide(a, f)
        finally:
            self._stack.discard(key)
        self._local[key] = r
        return r

    def _decide(self, a: TypeExpr, f) -> bool:
        match f:
            case Atom(n):
                names = [g.name for g in a.factors if isinstance(g, Atom)]
                if any(self.atom_leq(x, n) for x in self.reduce_atoms(names)):
                    return True
                if len(names) == len(a.factors):
                    # atom against atom is settled by the table
                    return False
                return self._leq(a, self.unfold(TypeExpr(frozenset({f}))))
            case Arrow(src, tgt):
                chosen = [beta for alpha, beta in self.ext_pairs(a) if self._leq(src, alpha)]
                return self._leq(self.norm(inter_all(chosen)), tgt)
        raise TypeError(f)

    def eq(self, a: TypeExpr, b: TypeExpr) -> bool:
        return self.leq(a, b) and self.leq(b, a)

    def is_top(self, t: TypeExpr) -> bool:
        return self.leq(OMEGA, t)

    def meet(self, a: TypeExpr, b: TypeExpr) -> TypeExpr:
        return self.canon(inter_all((a, b)))

    def meet_all(self, ts: Iterable[TypeExpr]) -> TypeExpr:
        return self.canon(inter_all(ts))

    def canon(self, t: TypeExpr) -> TypeExpr:
        """Canonical representative: normalized, top factors dropped, and
        factors dominated by another factor removed."""
        hit = self._canon_memo.get(t)
        if hit is not None:
            return hit
        self._check_atoms(t)
        out = self._canon(self.norm(t))
        self._canon_memo[t] = out
        return out

    def _canon(self, t: TypeExpr) -> TypeExpr:
        fs: list = []
        for f in t.factors:
            if isinstance(f, Arrow):
                s, g = self.canon(f.src), self.canon(f.tgt)
                if self.is_top(g):
                    continue
                f = Arrow(s, g)
            fs.append(f)
        fs.sort(key=lambda f: sort_key(TypeExpr(frozenset({f}))))
        keep = list(fs)
        for f in fs:
            tf = TypeExpr(frozenset({f}))
            for g in keep:
                if g is f:
                    continue
                tg = TypeExpr(frozenset({g}))
                if self.leq(tg, tf) and (not self.leq(tf, tg) or keep.index(g) < keep.index(f)):
                    keep.remove(f)
                    break
        return TypeExpr(frozenset(keep))

    # presentation

    def show(self, t: TypeExpr) -> str:
        return show(t, "w")

    def parse_type(self, text: str) -> TypeExpr:
        from .dsl import parse_type

        return parse_type(text, self)

    def clear_caches(self) -> None:
        with self._lock:
            for c in (self._cache, self._norm_memo, self._reduce_memo, self._pairs_memo,
                      self._top_memo, self._canon_memo):
                c.clear()

    def __repr__(self) -> str:
        return f"Model({self.name!r}, atoms={self.atoms!r})"
