"""Intersection-type membership, the test oracle, and a clause-level
interpretation enumerator used to cross-check the checker."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement
from typing import Iterable, Union

from .deep import deep
from .errors import ResourceError
from .model import Model, TypeExpr
from .model.strat import free_meets
from .model.typeexpr import OMEGA, Arrow, arrow, inter_all, sort_key
from .model.universe import type_universe
from .reduction import ReductionOutcome, eval as reduce_eval
from .syntax import (
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
    ebar,
    free_vars,
    is_pure,
    show,
    substitute,
)

Env = tuple[tuple[str, TypeExpr], ...]


@dataclass(frozen=True)
class TermJ:
    env: Env
    subject: Term
    target: TypeExpr


@dataclass(frozen=True)
class TestJ:
    env: Env
    subject: Test


Judgment = Union[TermJ, TestJ]


def make_env(pairs: Iterable[tuple[str, TypeExpr]]) -> Env:
    env = dict()
    for x, t in pairs:
        if x in env:
            raise ValueError(f"variable {x} bound twice")
        env[x] = t
    return tuple(sorted(env.items()))


@dataclass(frozen=True)
class Derivation:
    """One rule instance. ``target`` is None for test judgments.

    Rules: axiom, weaken, sub, lam, app, inter (n-ary, zero premises give
    the top), tau, taubar, test-sum, test-prod.
    """

    rule: str
    env: Env
    subject: Node
    target: TypeExpr | None
    premises: tuple["Derivation", ...] = ()

    def conclusion(self, m: Model | None = None) -> str:
        sh = m.show if m else (lambda t: str(t))
        ctx = ", ".join(f"{x}:{sh(t)}" for x, t in self.env)
        tail = f" : {sh(self.target)}" if self.target is not None else ""
        return f"{ctx} |- {show(self.subject)}{tail}".lstrip()

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def render(self, m: Model, indent: int = 0) -> str:
        lines = [" " * indent + f"[{self.rule}] {self.conclusion(m)}"]
        for p in self.premises:
            lines.append(p.render(m, indent + 2))
        return "\n".join(lines)


@dataclass
class Derivable:
    derivation: Derivation


@dataclass
class NotFound:
    pass


Verdict = Derivable | NotFound


@dataclass(frozen=True, eq=False)
class _Bound:
    """A variable standing for a known argument during a redex probe."""

    arg: Term
    env: dict


def _restrict(env: dict, subject: Node) -> Env:
    fv = free_vars(subject)
    return tuple(sorted((x, t) for x, t in env.items() if x in fv))


def _weaken(d: Derivation, env: Env) -> Derivation:
    if d.env == env:
        return d
    return Derivation("weaken", env, d.subject, d.target, (d,))


def _sub(d: Derivation, target: TypeExpr) -> Derivation:
    if d.target == target:
        return d
    return Derivation("sub", d.env, d.subject, target, (d,))


class Checker:
    """Syntax-directed derivation search over one model session.

    Application nodes try argument types from a finite pool: the type
    universe of depth ``pool_depth``, the free meets of atoms, all labels of
    the subject and the environment types, plus types read off the
    head's ext decomposition when the head is a variable or a bar sum.
    """

    def __init__(self, m: Model, depth: int = 12, pool_depth: int = 2,
                 budget: int = 500_000, extra: Iterable[TypeExpr] = ()):
        self.m = m
        self.depth = depth
        self.budget = budget
        self.visits = 0
        self.memo: dict = {}
        self.active: set = set()
        self.cut = False
        base = [OMEGA] + list(type_universe(m, pool_depth)) + free_meets(m) + list(extra)
        self.base_pool = self._dedup(base)

    def _dedup(self, ts: Iterable[TypeExpr]) -> list[TypeExpr]:
        out: list[TypeExpr] = []
        seen: set = set()
        for t in ts:
            c = self.m.canon(t)
            if c not in seen:
                seen.add(c)
                out.append(c)
        return out

    # entry points

    @deep
    def check(self, j: Judgment) -> Verdict:
        env = dict(j.env)
        self.pool = self._dedup(self.base_pool + _labels(j.subject) + list(env.values()))
        self.pool.sort(key=lambda t: (_weight(t), sort_key(t)))
        if isinstance(j, TermJ):
            d = self.term(env, j.subject, self.m.canon(j.target), self.depth)
            if d is not None and d.target != j.target:
                d = _sub(d, j.target)
        else:
            d = self.test(env, j.subject, self.depth)
        if d is None:
            return NotFound()
        return Derivable(_weaken(d, j.env))

    # search

    def _tick(self) -> None:
        self.visits += 1
        if self.visits > self.budget:
            raise ResourceError(f"derivation search budget {self.budget} exceeded")

    def term(self, env: dict, t: Term, target: TypeExpr, depth: int) -> Derivation | None:
        key = (_restrict(env, t), t, target)
        hit = self.memo.get(key)
        if hit is not None and (hit[0] is not None or hit[1] >= depth):
            return hit[0]
        if key in self.active:
            self.cut = True
            return None
        if depth <= 0:
            return None
        self._tick()
        self.active.add(key)
        outer, self.cut = self.cut, False
        try:
            d = self._term(env, t, target, depth)
        finally:
            self.active.discard(key)
        # a failure that leaned on an open cycle is not final
        if d is not None or not self.cut:
            self.memo[key] = (d, depth)
        self.cut = outer or self.cut
        return d

    def _term(self, env: dict, t: Term, target: TypeExpr, depth: int) -> Derivation | None:
        m = self.m
        genv = _restrict(env, t)
        if m.is_top(target):
            return _sub(Derivation("inter", genv, t, OMEGA, ()), target)
        match t:
            case Var(x):
                have = env.get(x, OMEGA)
                if isinstance(have, _Bound):
                    d = self.term(have.env, have.arg, target, depth - 1)
                    return None if d is None else Derivation("use", genv, t, target, (d,))
                if not m.leq(have, target):
                    return None
                ax = Derivation("axiom", ((x, have),), t, have)
                return _sub(_weaken(ax, genv), target)
            case Lam(x, body):
                arrows = []
                for beta, gamma in m.ext_pairs(m.norm(target)):
                    beta, gamma = m.canon(beta), m.canon(gamma)
                    inner = {**env, x: beta}
                    d = self.term(inner, body, gamma, depth - 1)
                    if d is None:
                        return None
                    d = _weaken(d, _restrict_with(inner, body, x))
                    arrows.append(Derivation("lam", genv, t, arrow(beta, gamma), (d,)))
                return _sub(_inter(genv, t, arrows), target)
            case App(f, a):
                factors = _split(target)
                if len(factors) > 1:
                    parts = [self.term(env, t, g, depth) for g in factors]
                    if any(p is None for p in parts):
                        return None
                    return _sub(_inter(genv, t, parts), target)
                for gamma in self._redex_hint(env, f, a, target, depth) + self._arg_candidates(env, f, target):
                    df = self.term(env, f, arrow(gamma, target), depth - 1)
                    if df is None:
                        continue
                    da = self.term(env, a, gamma, depth - 1)
                    if da is None:
                        continue
                    return Derivation("app", genv, t, target, (_weaken(df, genv), _weaken(da, genv)))
                return None
            case BarSum(es):
                chosen = []
                for i, (alpha, q) in enumerate(es):
                    d = self.test(env, q, depth - 1)
                    if d is not None:
                        chosen.append(Derivation("taubar", genv, t, alpha, (_weaken(d, genv),)))
                if not chosen or not m.leq(inter_all(c.target for c in chosen), target):
                    return None
                return _sub(_inter(genv, t, chosen), target)
            case Omega():
                return None
        raise TypeError(t)

    def _arg_candidates(self, env: dict, f: Term, target: TypeExpr) -> list[TypeExpr]:
        m = self.m
        head_pairs: list = []
        match f:
            case Var(x) if not isinstance(env.get(x), _Bound):
                head_pairs = list(m.ext_pairs(m.norm(env.get(x, OMEGA))))
            case BarSum(es):
                for alpha, _ in es:
                    head_pairs += list(m.ext_pairs(m.norm(alpha)))
        precise: list[TypeExpr] = []
        if head_pairs and len(head_pairs) <= 10:
            for r in range(1, len(head_pairs) + 1):
                for group in combinations(head_pairs, r):
                    if m.leq(inter_all(b for _, b in group), target):
                        precise.append(inter_all(a for a, _ in group))
        return self._dedup([OMEGA] + precise + self.pool)

    def _redex_hint(self, env: dict, f: Term, a: Term, target: TypeExpr, depth: int) -> list:
        """For a redex, check the body with the bound variable tied to the
        argument and return the meet of the types its occurrences needed."""
        fenv = env
        if isinstance(f, Var) and isinstance(env.get(f.name), _Bound):
            f, fenv = env[f.name].arg, env[f.name].env
        if not isinstance(f, Lam):
            return []
        bound = _Bound(a, env)
        d = self.term({**fenv, f.var: bound}, f.body, target, depth - 1)
        if d is None:
            return []
        uses = [n.target for n in _nodes(d)
                if n.rule == "use" and dict(n.env).get(f.var) is bound]
        return [self.m.canon(inter_all(uses))]

    def test(self, env: dict, q: Test, depth: int) -> Derivation | None:
        key = (_restrict(env, q), q, None)
        hit = self.memo.get(key)
        if hit is not None and (hit[0] is not None or hit[1] >= depth):
            return hit[0]
        if key in self.active:
            self.cut = True
            return None
        if depth <= 0:
            return None
        self._tick()
        self.active.add(key)
        outer, self.cut = self.cut, False
        try:
            d = self._test(env, q, depth)
        finally:
            self.active.discard(key)
        # a failure that leaned on an open cycle is not final
        if d is not None or not self.cut:
            self.memo[key] = (d, depth)
        self.cut = outer or self.cut
        return d

    def _test(self, env: dict, q: Test, depth: int) -> Derivation | None:
        genv = _restrict(env, q)
        match q:
            case Tau(alpha, body):
                d = self.term(env, body, self.m.canon(alpha), depth - 1)
                if d is None:
                    return None
                d = _sub(d, alpha)
                return Derivation("tau", genv, q, None, (_weaken(d, genv),))
            case Sum(items):
                for p in items:
                    d = self.test(env, p, depth - 1)
                    if d is not None:
                        return Derivation("test-sum", genv, q, None, (_weaken(d, genv),))
                return None
            case Prod(items):
                ds = []
                for p in items:
                    d = self.test(env, p, depth - 1)
                    if d is None:
                        return None
                    ds.append(_weaken(d, genv))
                return Derivation("test-prod", genv, q, None, tuple(ds))
        raise TypeError(q)


def _restrict_with(env: dict, body: Node, x: str) -> Env:
    """The environment of a lambda premise: free variables of the body plus
    the bound variable itself."""
    return tuple(sorted((y, t) for y, t in env.items() if y in free_vars(body) or y == x))


def _inter(env: Env, subject: Node, parts: list[Derivation]) -> Derivation:
    if len(parts) == 1:
        return parts[0]
    return Derivation("inter", env, subject, inter_all(p.target for p in parts), tuple(parts))


def _split(t: TypeExpr) -> list[TypeExpr]:
    return [TypeExpr(frozenset({f})) for f in sorted(t.factors, key=lambda f: sort_key(TypeExpr(frozenset({f}))))]


def _weight(t: TypeExpr) -> int:
    return sum(_weight(f.src) + _weight(f.tgt) + 1 if isinstance(f, Arrow) else 1 for f in t.factors)


def _labels(t: Node) -> list[TypeExpr]:
    out: list[TypeExpr] = []
    match t:
        case Tau(alpha, body):
            out.append(alpha)
            out += _labels(body)
        case BarSum(es):
            for alpha, q in es:
                out.append(alpha)
                out += _labels(q)
        case Lam(_, b):
            out += _labels(b)
        case App(f, a):
            out += _labels(f) + _labels(a)
        case Sum(items) | Prod(items):
            for p in items:
                out += _labels(p)
    return out


def check(j: Judgment, m: Model, depth: int = 12, pool_depth: int = 2,
          budget: int = 500_000) -> Verdict:
    """Search for a derivation of ``j``. NotFound is not a refutation."""
    return Checker(m, depth, pool_depth, budget).check(j)


def member(m: Model, term: Term, target: TypeExpr, env: Iterable[tuple[str, TypeExpr]] = (),
           depth: int = 12, pool_depth: int = 2) -> bool:
    return isinstance(check(TermJ(make_env(env), term, target), m, depth, pool_depth), Derivable)


# re-checking derivations


@deep
def recheck(d: Derivation, m: Model) -> bool:
    """Verify every rule instance of a derivation."""
    return all(_recheck_node(n, m) for n in _nodes(d))


def _nodes(d: Derivation):
    yield d
    for p in d.premises:
        yield from _nodes(p)


def _recheck_node(d: Derivation, m: Model) -> bool:
    ps = d.premises
    same = all(p.env == d.env for p in ps)
    match d.rule:
        case "axiom":
            return (isinstance(d.subject, Var) and not ps
                    and d.env == ((d.subject.name, d.target),))
        case "weaken":
            return (len(ps) == 1 and set(ps[0].env) <= set(d.env)
                    and len(dict(d.env)) == len(d.env)
                    and ps[0].subject == d.subject and ps[0].target == d.target)
        case "sub":
            return (len(ps) == 1 and same and ps[0].subject == d.subject
                    and d.target is not None and m.leq(ps[0].target, d.target))
        case "inter":
            return (same and all(p.subject == d.subject and p.target is not None for p in ps)
                    and d.target == inter_all(p.target for p in ps))
        case "lam":
            if not (isinstance(d.subject, Lam) and len(ps) == 1 and d.target is not None):
                return False
            fs = list(d.target.factors)
            if len(fs) != 1 or not isinstance(fs[0], Arrow):
                return False
            x, p = d.subject.var, ps[0]
            return (x not in dict(d.env) and dict(p.env) == {**dict(d.env), x: fs[0].src}
                    and p.subject == d.subject.body and p.target == fs[0].tgt)
        case "app":
            if not (isinstance(d.subject, App) and len(ps) == 2 and same):
                return False
            f, a = ps
            return (f.subject == d.subject.fun and a.subject == d.subject.arg
                    and a.target is not None and f.target == arrow(a.target, d.target))
        case "taubar":
            if not (isinstance(d.subject, BarSum) and len(ps) == 1 and same):
                return False
            return any(lab == d.target and q == ps[0].subject for lab, q in d.subject.entries)
        case "tau":
            return (isinstance(d.subject, Tau) and len(ps) == 1 and same
                    and ps[0].subject == d.subject.body and ps[0].target == d.subject.label)
        case "test-sum":
            return (isinstance(d.subject, Sum) and len(ps) == 1 and same
                    and any(q == ps[0].subject for q in d.subject.items))
        case "test-prod":
            return (isinstance(d.subject, Prod) and same
                    and sorted(p.subject.key() for p in ps) == sorted(q.key() for q in d.subject.items))
    return False


# the test oracle


def closed_instance(term: Term, env_values, target: TypeExpr) -> Test:
    """tau_target(term) with each free variable replaced by the canonical
    inhabitant of its type."""
    if isinstance(env_values, dict):
        pairs = list(env_values.items())
    else:
        pairs = list(zip(sorted(free_vars(term)), env_values))
    for x, alpha in pairs:
        term = substitute(term, x, ebar(alpha))
    return Tau(target, term)


def oracle(term: Term, env_values, target: TypeExpr, m: Model,
           fuel: int = 10_000, trace: bool = False) -> ReductionOutcome:
    return reduce_eval(closed_instance(term, env_values, m.canon(target)), m, fuel, trace=trace)


# clause-level interpretation


class Interpreter:
    """Membership in the interpretation of pure terms, evaluated directly
    from the variable, abstraction and application clauses.

    Existential families range over the finite universe and have at most
    ``family`` members; every interpretation is closed upwards in its
    result, which justifies testing ``meet <= beta`` instead of equality.
    """

    def __init__(self, m: Model, type_depth: int = 2, family: int = 3):
        self.m = m
        self.family = family
        uni: list[TypeExpr] = []
        for t in type_universe(m, type_depth):
            if not any(m.eq(t, u) for u in uni):
                uni.append(t)
        self.universe = uni
        self.memo: dict = {}
        self._reps: dict = {}

    def rep(self, t: TypeExpr) -> TypeExpr:
        c = self.m.canon(t)
        hit = self._reps.get(c)
        if hit is None:
            hit = next((u for u in self.universe if self.m.eq(c, u)), c)
            self._reps[c] = hit
        return hit

    def mem(self, t: Term, env: dict, beta: TypeExpr) -> bool:
        m = self.m
        if m.is_top(beta):
            return True
        match t:
            case Var(x):
                return m.leq(env.get(x, OMEGA), beta)
            case Omega():
                return False
            case Lam() | App():
                return any(m.leq(v, beta) for v in self.values(t, env))
        raise ValueError("the clause interpreter takes pure terms only")

    def values(self, t: Term, env: dict) -> list[TypeExpr]:
        """The results reachable by one abstraction or application clause;
        membership of a target means lying above one of them."""
        fv = free_vars(t)
        key = (t, tuple(sorted((x, a) for x, a in env.items() if x in fv)))
        hit = self.memo.get(key)
        if hit is None:
            hit = self._values(t, env)
            self.memo[key] = hit
        return hit

    def _families(self, pairs: list) -> Iterable[tuple]:
        for r in range(1, self.family + 1):
            yield from combinations_with_replacement(pairs, r)

    def _values(self, t: Term, env: dict) -> list[TypeExpr]:
        m, U = self.m, self.universe
        out: set[TypeExpr] = set()
        match t:
            case Lam(y, body):
                pairs = [(b, g) for b in U for g in U
                         if not m.is_top(g) and self.mem(body, {**env, y: b}, g)]
                # a pair whose arrow lies above another one's never helps a meet
                arrows = [m.canon(arrow(b, g)) for b, g in pairs]
                keep = [a for i, a in enumerate(arrows)
                        if not any(m.leq(o, a) and (not m.leq(a, o) or j < i)
                                   for j, o in enumerate(arrows) if j != i)]
                for fam in self._families(keep):
                    out.add(self.rep(inter_all(fam)))
            case App(f, a):
                pairs = [(g, b) for g in U for b in U
                         if not m.is_top(b) and self.mem(f, env, self.rep(arrow(g, b)))]
                for fam in self._families(pairs):
                    res = self.rep(inter_all(b for _, b in fam))
                    if res in out:
                        continue
                    fun_t = self.rep(inter_all(arrow(g, b) for g, b in fam))
                    arg_t = self.rep(inter_all(g for g, _ in fam))
                    if self.mem(f, env, fun_t) and self.mem(a, env, arg_t):
                        out.add(res)
        return sorted(out, key=sort_key)



def interp_enumerate(term: Term, m: Model, type_depth: int = 2,
                     family: int = 3) -> set[tuple[tuple[TypeExpr, ...], TypeExpr]]:
    """All (environment, result) pairs over the finite universe, free
    variables taken in sorted order."""
    if not is_pure(term):
        raise ValueError("the clause interpreter takes pure terms only")
    it = Interpreter(m, type_depth, family)
    xs = sorted(free_vars(term))
    out = set()
    for envs in _product(it.universe, len(xs)):
        env = dict(zip(xs, envs))
        for beta in it.universe:
            if it.mem(term, env, beta):
                out.add((tuple(envs), beta))
    return out


def _product(items: list, n: int):
    if n == 0:
        yield ()
        return
    for head in items:
        for rest in _product(items, n - 1):
            yield (head,) + rest
