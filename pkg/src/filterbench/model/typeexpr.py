"""Syntactic elements of a completed filter model.

A type is a finite intersection of factors; a factor is either a named atom
or an arrow between types. The empty intersection is the top element.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from ..errors import ModelError, ResourceError  # noqa: F401


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Arrow:
    src: "TypeExpr"
    tgt: "TypeExpr"


Factor = Union[Atom, Arrow]


@dataclass(frozen=True)
class TypeExpr:
    factors: frozenset

    def __iter__(self):
        return iter(self.factors)

    @property
    def is_top(self) -> bool:
        return not self.factors

    def atoms(self) -> frozenset[str]:
        """Names of atoms occurring anywhere inside."""
        out: set[str] = set()
        for f in self.factors:
            match f:
                case Atom(name):
                    out.add(name)
                case Arrow(s, t):
                    out |= s.atoms()
                    out |= t.atoms()
        return frozenset(out)

    def depth(self) -> int:
        if not self.factors:
            return 1
        best = 1
        for f in self.factors:
            if isinstance(f, Arrow):
                best = max(best, 1 + max(f.src.depth(), f.tgt.depth()))
        return best


OMEGA = TypeExpr(frozenset())


def atom(name: str) -> TypeExpr:
    return TypeExpr(frozenset({Atom(name)}))


def arrow(src: TypeExpr, tgt: TypeExpr) -> TypeExpr:
    # an arrow into the top is the top itself
    if tgt.is_top:
        return OMEGA
    return TypeExpr(frozenset({Arrow(src, tgt)}))


def inter(*parts: TypeExpr) -> TypeExpr:
    return inter_all(parts)


def inter_all(parts: Iterable[TypeExpr]) -> TypeExpr:
    fs: set = set()
    for p in parts:
        fs |= p.factors
    return TypeExpr(frozenset(fs))


def sort_key(t: TypeExpr) -> tuple:
    """Deterministic structural ordering key."""
    return tuple(sorted(_factor_key(f) for f in t.factors))


def _factor_key(f: Factor) -> tuple:
    match f:
        case Atom(name):
            return (0, name)
        case Arrow(s, t):
            return (1, sort_key(s), sort_key(t))
    raise TypeError(f)


def show(t: TypeExpr, omega_name: str = "w") -> str:
    if not t.factors:
        return omega_name
    parts = [_show_factor(f, omega_name) for f in sorted(t.factors, key=_factor_key)]
    if len(parts) == 1:
        return parts[0]
    return " /\\ ".join(p if not _is_arrow_text(f) else f"({p})"
                        for p, f in zip(parts, sorted(t.factors, key=_factor_key)))


def _is_arrow_text(f: Factor) -> bool:
    return isinstance(f, Arrow)


def _show_factor(f: Factor, omega_name: str) -> str:
    match f:
        case Atom(name):
            return name
        case Arrow(s, t):
            left = show(s, omega_name)
            if len(s.factors) > 1 or any(isinstance(g, Arrow) for g in s.factors):
                left = f"({left})"
            right = show(t, omega_name)
            if len(t.factors) > 1:
                right = f"({right})"
            return f"{left} -> {right}"
    raise TypeError(f)
