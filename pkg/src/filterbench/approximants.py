"""Direct approximants, approximant chains, and the approximant side of
the approximability question."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import islice
from typing import Iterator

from .deep import run_deep
from .model import Model, TypeExpr
from .reduction import Converged, outcome_name, root_step
from .semantics import Checker, Derivable, TermJ, make_env, oracle
from .syntax import OMEGA_T, App, Lam, Omega, Term, Var, free_vars, is_pure


class DomainError(ValueError):
    pass


def _spine(t: Term) -> tuple[list[str], Term, list[Term]]:
    binders = []
    while isinstance(t, Lam):
        binders.append(t.var)
        t = t.body
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    return binders, t, args[::-1]


def _rebuild(binders: list[str], head: Term, args: list[Term]) -> Term:
    t = head
    for a in args:
        t = App(t, a)
    for x in reversed(binders):
        t = Lam(x, t)
    return t


def direct_approximant(t: Term) -> Term:
    """Head-variable shapes keep their spine with arguments approximated;
    anything else (a head redex, or Omega in head position) becomes Omega."""
    if not is_pure(t):
        raise DomainError("direct approximants are defined on pure terms")
    return _omega(t)


def _omega(t: Term) -> Term:
    binders, head, args = _spine(t)
    if not isinstance(head, Var):
        return OMEGA_T
    return _rebuild(binders, head, [_omega(a) for a in args])


def is_bohm_normal(t: Term) -> bool:
    if isinstance(t, Omega):
        return True
    binders, head, args = _spine(t)
    return isinstance(head, Var) and all(is_bohm_normal(a) for a in args)


def normal_order_step(t: Term, m: Model | None = None) -> Term | None:
    """One leftmost-outermost beta/Omega step of a pure term."""
    r = root_step(t, m) if isinstance(t, (App, Lam)) else None
    if r is not None:
        return r[1]
    match t:
        case Lam(x, b):
            s = normal_order_step(b, m)
            return None if s is None else Lam(x, s)
        case App(f, a):
            s = normal_order_step(f, m)
            if s is not None:
                return App(s, a)
            s = normal_order_step(a, m)
            return None if s is None else App(f, s)
    return None


def approximants(t: Term, fuel: int = 10_000, limit: int | None = None) -> list[Term]:
    """Direct approximants along the leftmost-outermost reduction sequence,
    without repetitions. Head reduction comes first in this order; once a
    head normal form is reached the arguments are unfolded left to right."""
    return run_deep(lambda: list(islice(_approximants(t, fuel), limit)))


def _approximants(t: Term, fuel: int) -> Iterator[Term]:
    if not is_pure(t):
        raise DomainError("approximants are defined on pure terms")
    seen = set()
    for _ in range(fuel + 1):
        a = _omega(t)
        if a not in seen:
            seen.add(a)
            yield a
        nxt = normal_order_step(t)
        if nxt is None:
            return
        t = nxt


@dataclass
class WitnessFound:
    approximant: Term
    index: int
    disagreements: list = field(default_factory=list)


@dataclass
class NoneWithinFuel:
    examined: int
    disagreements: list = field(default_factory=list)


def approximability_check(t: Term, env_values, target: TypeExpr, m: Model,
                          fuel: int = 10_000, budget: int = 1_000,
                          depth: int = 12) -> WitnessFound | NoneWithinFuel:
    """Look for an approximant carrying the membership, judged both by the
    type checker and by the test oracle; mismatches are recorded."""
    return run_deep(_approximability, t, env_values, target, m, fuel, budget, depth)


def _approximability(t, env_values, target, m, fuel, budget, depth):
    if isinstance(env_values, dict):
        pairs = list(env_values.items())
    else:
        pairs = list(zip(sorted(free_vars(t)), env_values))
    env = make_env(pairs)
    target = m.canon(target)
    checker = Checker(m, depth)
    disagreements = []
    n = 0
    for n, s in enumerate(_approximants(t, fuel), 1):
        if n > budget:
            return NoneWithinFuel(budget, disagreements)
        typed = isinstance(checker.check(TermJ(env, s, target)), Derivable)
        tested = oracle(s, dict(pairs), target, m, fuel)
        if typed != isinstance(tested, Converged):
            disagreements.append((s, typed, outcome_name(tested)))
        if typed or isinstance(tested, Converged):
            return WitnessFound(s, n, disagreements)
    return NoneWithinFuel(n, disagreements)
