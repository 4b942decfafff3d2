"""Seeded random terms and tests, exhaustive normal-form enumeration, and
counterexample shrinking."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterator

from .model import Model, TypeExpr
from .model.universe import type_universe
from .syntax import (
    EPS,
    OMEGA_T,
    ZERO,
    App,
    BarSum,
    Lam,
    Node,
    Omega,
    Prod,
    Sum,
    Tau,
    Term,
    Test,
    Var,
    children,
    free_vars,
    mk_barsum,
    mk_prod,
    mk_sum,
    size,
)

FREE_NAMES = ("x", "y")
BOUND_NAMES = ("a", "b", "c", "d", "e", "f", "g", "h")


def label_pool(m: Model, depth: int = 2) -> list[TypeExpr]:
    """Non-top members of the type universe, one per equivalence class."""
    out, seen = [], set()
    for t in type_universe(m, depth):
        c = m.canon(t)
        if not m.is_top(c) and c not in seen:
            seen.add(c)
            out.append(c)
    return out


def value_pool(m: Model, depth: int = 2) -> list[TypeExpr]:
    """Candidate environment values: the top plus the label pool."""
    return [m.canon(type_universe(m, 1)[0])] + label_pool(m, depth)


@dataclass(frozen=True)
class Query:
    term: Term
    env: tuple[tuple[str, TypeExpr], ...]
    target: TypeExpr


class Generator:
    """Size-bounded random syntax over one model's labels."""

    def __init__(self, m: Model, seed: int = 0, depth: int = 2, pure: bool = False):
        self.m = m
        self.rng = random.Random(seed)
        self.labels = label_pool(m, depth)
        self.values = value_pool(m, depth)
        self.pure = pure

    def term(self, budget: int, scope: tuple[str, ...]) -> Term:
        r = self.rng
        if budget <= 1:
            if scope and r.random() < 0.9:
                return Var(r.choice(scope))
            return OMEGA_T if self.pure or r.random() < 0.5 else mk_barsum([(r.choice(self.labels), EPS)])
        kinds = ["lam", "app", "app"]
        if scope:
            kinds.append("var")
        if not self.pure:
            kinds.append("bar")
        match r.choice(kinds):
            case "var":
                return Var(r.choice(scope))
            case "lam":
                x = BOUND_NAMES[len(scope) % len(BOUND_NAMES)]
                return Lam(x, self.term(budget - 1, scope + (x,)))
            case "app":
                left = r.randint(1, budget - 2) if budget > 2 else 1
                return App(self.term(left, scope), self.term(max(budget - 1 - left, 1), scope))
            case _:
                n = 1 if budget < 4 or r.random() < 0.7 else 2
                share = max((budget - 1) // n, 1)
                return mk_barsum([(r.choice(self.labels), self.test(share, scope))
                                  for _ in range(n)])

    def test(self, budget: int, scope: tuple[str, ...]) -> Test:
        r = self.rng
        if budget <= 1:
            return EPS if r.random() < 0.8 else ZERO
        roll = r.random()
        if roll < 0.7 or budget < 4:
            return Tau(r.choice(self.labels), self.term(budget - 1, scope))
        half = (budget - 1) // 2
        parts = [self.test(half, scope), self.test(budget - 1 - half, scope)]
        return mk_prod(parts) if roll < 0.85 else mk_sum(parts)

    def closed_test(self, budget: int) -> Test:
        return self.test(budget, ())

    def query(self, budget: int, max_free: int = 2) -> Query:
        """A term over at most ``max_free`` free variables, values for them,
        and a non-top target."""
        scope = FREE_NAMES[:self.rng.randint(0, max_free)]
        t = self.term(budget, scope)
        env = tuple((x, self.rng.choice(self.values)) for x in sorted(free_vars(t)))
        return Query(t, env, self.rng.choice(self.labels))


# exhaustive enumeration


def normal_forms(max_size: int, free: tuple[str, ...] = FREE_NAMES) -> list[Term]:
    """Every beta-Omega-normal pure term of size at most ``max_size`` over
    the given free variables, bound names chosen canonically."""
    out = []
    for n in range(1, max_size + 1):
        out.extend(_nf(n, free, 0))
    return out


def _nf(n: int, scope: tuple[str, ...], depth: int) -> Iterator[Term]:
    if n == 1:
        yield OMEGA_T
    if n >= 2:
        x = BOUND_NAMES[depth % len(BOUND_NAMES)]
        inner = tuple(v for v in scope if v != x) + (x,)
        for body in _nf(n - 1, inner, depth + 1):
            if not isinstance(body, Omega):  # the abstraction of Omega is Omega
                yield Lam(x, body)
    yield from _neutral(n, scope, depth)


def _neutral(n: int, scope: tuple[str, ...], depth: int) -> Iterator[Term]:
    if n == 1:
        for v in scope:
            yield Var(v)
        return
    for left in range(1, n - 1):
        for f in _neutral(left, scope, depth):
            for a in _nf(n - 1 - left, scope, depth):
                yield App(f, a)


# shrinking


def shrink(t: Node, bad: Callable[[Node], bool], labels: list[TypeExpr] | None = None,
           rounds: int = 200) -> Node:
    """Greedy minimization: replace the whole node by one of its own
    subnodes of the same sort, or a label by an earlier one in ``labels``,
    as long as ``bad`` still holds."""
    for _ in range(rounds):
        for cand in sorted(_candidates(t, labels or []), key=size):
            if size(cand) <= size(t) and cand != t and _holds(bad, cand):
                t = cand
                break
        else:
            return t
    return t


def _holds(bad, cand) -> bool:
    try:
        return bool(bad(cand))
    except Exception:
        return False


def _candidates(t: Node, labels: list[TypeExpr]) -> Iterator[Node]:
    test_node = isinstance(t, (Sum, Prod, Tau))
    for s in _subnodes(t):
        if isinstance(s, (Sum, Prod, Tau)) == test_node and s is not t:
            yield s
    yield from _rewrites(t, labels)


def _subnodes(t: Node) -> Iterator[Node]:
    yield t
    for c in children(t):
        yield from _subnodes(c)


def _rewrites(t: Node, labels: list[TypeExpr]) -> Iterator[Node]:
    """Single-position simplifications, rebuilt bottom-up."""
    match t:
        case Tau(alpha, body):
            for lab in _simpler(alpha, labels):
                yield Tau(lab, body)
            for b in _rewrites(body, labels):
                yield Tau(alpha, b)
        case Lam(x, body):
            yield from (Lam(x, b) for b in _rewrites(body, labels))
        case App(f, a):
            yield OMEGA_T
            yield from (App(g, a) for g in _rewrites(f, labels))
            yield from (App(f, b) for b in _rewrites(a, labels))
        case BarSum(es):
            for i, (alpha, q) in enumerate(es):
                if len(es) > 1:
                    yield mk_barsum(es[:i] + es[i + 1:])
                for lab in _simpler(alpha, labels):
                    yield mk_barsum(es[:i] + ((lab, q),) + es[i + 1:])
                for r in _rewrites(q, labels):
                    yield mk_barsum(es[:i] + ((alpha, r),) + es[i + 1:])
        case Sum(items) | Prod(items):
            build = mk_sum if isinstance(t, Sum) else mk_prod
            for i, q in enumerate(items):
                yield build(items[:i] + items[i + 1:])
                for r in _rewrites(q, labels):
                    yield build(items[:i] + (r,) + items[i + 1:])


def _simpler(alpha: TypeExpr, labels: list[TypeExpr]) -> list[TypeExpr]:
    if alpha not in labels:
        return labels[:2]
    return labels[:labels.index(alpha)]
