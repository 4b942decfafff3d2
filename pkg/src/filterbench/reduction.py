"""Rewriting for terms with model tests: head steps, fair evaluation,
the full contextual closure and beta-first splitting."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product as cartesian
from typing import Iterator

from .deep import deep
from .errors import ResourceError
from .model import Model, TypeExpr
from .model.typeexpr import inter_all
from .syntax import (
    EPS,
    OMEGA_T,
    ZERO,
    ZERO_T,
    App,
    BarSum,
    Lam,
    Node,
    Omega,
    Prod,
    Sum,
    Tau,
    Var,
    ebar,
    is_test,
    mk_barsum,
    mk_prod,
    mk_sum,
    substitute,
)

MAX_TAUBAR_SUM = 16


class RuleId(str, Enum):
    BETA = "beta"
    TAUBAR = "taubar"
    TAU = "tau"
    TAU_TAUBAR = "tau-taubar"
    PROD_SUM = "prod-sum"
    TAUBAR_SUM = "taubar-sum"
    OMEGA_LAM = "omega-lam"
    OMEGA_APP = "omega-app"
    OMEGA_TAU = "omega-tau"

    def __str__(self) -> str:
        return self.value


Path = tuple[int, ...]
Step = tuple[RuleId, Path, Node]


@dataclass(frozen=True)
class TraceStep:
    rule: RuleId
    path: Path
    result: Node

    def format(self) -> str:
        from .syntax import show

        where = ".".join(map(str, self.path)) or "root"
        return f"--{self.rule}@{where}--> {show(self.result)}"


@dataclass
class Converged:
    final: Node
    trace: list[TraceStep] = field(default_factory=list)
    steps: int = 0


@dataclass
class Refuted:
    trace: list[TraceStep] = field(default_factory=list)
    steps: int = 0


@dataclass
class FuelExhausted:
    last: Node
    trace: list[TraceStep] = field(default_factory=list)
    steps: int = 0
    stuck: bool = False  # no redex left, yet not a normal outcome


ReductionOutcome = Converged | Refuted | FuelExhausted


def outcome_name(o: ReductionOutcome) -> str:
    match o:
        case Converged():
            return "CONVERGED"
        case Refuted():
            return "REFUTED"
    return "FUEL-OUT"


# rules at the root of a node


def _label(m: Model, t: TypeExpr) -> TypeExpr:
    return m.canon(t)


def _ext_rules(m: Model, alpha: TypeExpr) -> tuple:
    """ext of a label as (source or None for the top, target) pairs, with
    pairs targeting the top left out."""
    memo = m.__dict__.setdefault("_rule_memo", {})
    hit = memo.get(alpha)
    if hit is None:
        out = []
        for beta, gamma in m.ext_pairs(m.norm(alpha)):
            if m.is_top(gamma):
                continue
            out.append((None if m.is_top(beta) else _label(m, beta), _label(m, gamma)))
        hit = memo[alpha] = tuple(out)
    return hit


def _tau_abs(m: Model, alpha: TypeExpr, x: str, body) -> Node:
    # tau at the top is the unit test; the canonical inhabitant of the top is 0
    return mk_prod(Tau(gamma, substitute(body, x, ebar(beta) if beta is not None else ZERO_T))
                   for beta, gamma in _ext_rules(m, alpha))


def _tau_taubar(m: Model, alpha: TypeExpr, entries: tuple) -> Node:
    n = len(entries)
    if n > MAX_TAUBAR_SUM:
        raise ResourceError(f"tau against a sum of {n} bar operators exceeds {MAX_TAUBAR_SUM}")
    out = []
    for mask in range(1 << n):
        chosen = [entries[i] for i in range(n) if mask >> i & 1]
        if m.leq(inter_all(lab for lab, _ in chosen), alpha):
            out.append(mk_prod(q for _, q in chosen))
    return mk_sum(out)


def _taubar_app(m: Model, entries: tuple, arg) -> Node:
    # bar operators at the top are the empty sum and are dropped
    out = []
    for alpha, q in entries:
        for beta, gamma in _ext_rules(m, alpha):
            check = EPS if beta is None else Tau(beta, arg)
            out.append((gamma, mk_prod([q, check])))
    return mk_barsum(out)


def _distribute(items: tuple) -> Node:
    choices = [f.items if isinstance(f, Sum) else (f,) for f in items]
    return mk_sum(mk_prod(combo) for combo in cartesian(*choices))


def _split_entry(entries: tuple, i: int) -> BarSum:
    alpha, q = entries[i]
    rest = entries[:i] + entries[i + 1:]
    return mk_barsum(rest + tuple((alpha, qj) for qj in q.items))


def root_step(t: Node, m: Model) -> tuple[RuleId, Node] | None:
    """The rule firing at the root of ``t``, if any (BarSum splits excluded)."""
    match t:
        case App(Lam(x, body), n):
            return RuleId.BETA, substitute(body, x, n)
        case App(BarSum(es), n):
            return RuleId.TAUBAR, _taubar_app(m, es, n)
        case App(Omega(), _):
            return RuleId.OMEGA_APP, OMEGA_T
        case Lam(_, Omega()):
            return RuleId.OMEGA_LAM, OMEGA_T
        case Tau(alpha, Lam(x, body)):
            return RuleId.TAU, _tau_abs(m, alpha, x, body)
        case Tau(alpha, BarSum(es)):
            return RuleId.TAU_TAUBAR, _tau_taubar(m, alpha, es)
        case Tau(_, Omega()):
            return RuleId.OMEGA_TAU, ZERO
        case Prod(items) if any(isinstance(f, Sum) for f in items):
            return RuleId.PROD_SUM, _distribute(items)
    return None


# head reduction


def _rotation(n: int, turn: int) -> Iterator[int]:
    start = turn % n if n else 0
    for k in range(n):
        yield (start + k) % n


def step_head(t: Node, m: Model, turn: int = 0, no_beta: bool = False) -> Step | None:
    """The head step of ``t``.

    At the choice points (summands of a sum, factors of a product, entries
    of a bar sum) candidates are tried starting from index ``turn`` modulo
    their number; ``turn=0`` gives the canonical first-reducible choice.
    With ``no_beta`` a beta redex in head position blocks its branch.
    """
    match t:
        case App(f, _):
            if isinstance(f, App):
                sub = step_head(f, m, turn, no_beta)
                return None if sub is None else (sub[0], (0,) + sub[1], App(sub[2], t.arg))
            if isinstance(f, Lam) and no_beta:
                return None
            r = root_step(t, m)
            return None if r is None else (r[0], (), r[1])
        case Lam(x, body):
            if isinstance(body, Omega):
                return RuleId.OMEGA_LAM, (), OMEGA_T
            sub = step_head(body, m, turn, no_beta)
            return None if sub is None else (sub[0], (0,) + sub[1], Lam(x, sub[2]))
        case BarSum(es):
            for i in _rotation(len(es), turn):
                alpha, q = es[i]
                if isinstance(q, Sum):
                    return RuleId.TAUBAR_SUM, (i,), _split_entry(es, i)
                sub = step_head(q, m, turn, no_beta)
                if sub is not None:
                    new = es[:i] + ((alpha, sub[2]),) + es[i + 1:]
                    return sub[0], (i,) + sub[1], mk_barsum(new)
            return None
        case Tau(alpha, body):
            if isinstance(body, App):
                sub = step_head(body, m, turn, no_beta)
                return None if sub is None else (sub[0], (0,) + sub[1], Tau(alpha, sub[2]))
            r = root_step(t, m)
            return None if r is None else (r[0], (), r[1])
        case Prod(items):
            if any(isinstance(f, Sum) for f in items):
                return RuleId.PROD_SUM, (), _distribute(items)
            return _step_child(t, m, turn, no_beta, mk_prod)
        case Sum():
            return _step_child(t, m, turn, no_beta, mk_sum)
    return None


def _step_child(t, m, turn, no_beta, build) -> Step | None:
    items = t.items
    for i in _rotation(len(items), turn):
        sub = step_head(items[i], m, turn, no_beta)
        if sub is not None:
            return sub[0], (i,) + sub[1], build(items[:i] + (sub[2],) + items[i + 1:])
    return None


# normal forms


def _var_headed(t) -> bool:
    while isinstance(t, App):
        t = t.fun
    return isinstance(t, Var)


def _hnf_product(q) -> bool:
    match q:
        case Tau(_, body):
            return _var_headed(body)
        case Prod(items):
            return all(isinstance(f, Tau) and _var_headed(f.body) for f in items)
    return False


def is_mhnf(t: Node) -> bool:
    """May-head-normal form."""
    if isinstance(t, Sum):
        return any(_hnf_product(q) for q in t.items)
    if is_test(t):
        return _hnf_product(t)
    while isinstance(t, Lam):
        t = t.body
    if _var_headed(t):
        return True
    if isinstance(t, BarSum):
        return any(not isinstance(q, Sum) and _hnf_product(q) for _, q in t.entries)
    return False


def _is_refutation(t: Node) -> bool:
    if isinstance(t, Sum):
        return not t.items
    while isinstance(t, Lam):
        t = t.body
    return isinstance(t, BarSum) and not t.entries


# evaluation


@deep
def eval(t: Node, m: Model, fuel: int = 10_000, trace: bool = True,
         no_beta: bool = False) -> ReductionOutcome:
    """Fuel-bounded head evaluation.

    Summands of a test are served breadth-first from a queue sharing one
    fuel counter, so any summand that converges within the budget is found.
    """
    if is_test(t):
        return _eval_test(t, m, fuel, trace, no_beta)
    return _eval_term(t, m, fuel, trace, no_beta)


def _eval_term(t, m, fuel, trace, no_beta) -> ReductionOutcome:
    log: list[TraceStep] = []
    for n in range(fuel + 1):
        if is_mhnf(t):
            return Converged(t, log, n)
        if _is_refutation(t):
            return Refuted(log, n)
        if n == fuel:
            break
        st = step_head(t, m, n, no_beta)
        if st is None:
            return FuelExhausted(t, log, n, stuck=True)
        t = st[2]
        if trace:
            log.append(TraceStep(*st))
    return FuelExhausted(t, log, fuel)


def _summands(q) -> list:
    return list(q.items) if isinstance(q, Sum) else [q]


def _eval_test(t, m, fuel, trace, no_beta) -> ReductionOutcome:
    log: list[TraceStep] = []
    queue: deque = deque((q, 0) for q in _summands(t))
    blocked: list = []  # summands with no head step (only under no_beta)

    def whole():
        return mk_sum([q for q, _ in queue] + [q for q, _ in blocked])

    steps = 0
    if any(_hnf_product(q) for q, _ in queue):
        return Converged(whole(), log, 0)
    while queue:
        if steps == fuel:
            return FuelExhausted(whole(), log, steps)
        q, turn = queue.popleft()
        st = step_head(q, m, turn, no_beta)
        if st is None:
            blocked.append((q, turn))
            continue
        steps += 1
        rule, path, new = st
        if trace:
            before = mk_sum([q] + [p for p, _ in queue] + [p for p, _ in blocked])
            if isinstance(before, Sum):
                path = (next(i for i, p in enumerate(before.items) if p == q),) + path
        done = False
        for p in _summands(new):
            queue.append((p, turn + 1))
            done = done or _hnf_product(p)
        if trace:
            log.append(TraceStep(rule, path, whole()))
        if done:
            return Converged(whole(), log, steps)
    if blocked:
        return FuelExhausted(whole(), log, steps, stuck=True)
    return Refuted(log, steps)


@deep
def replay(t: Node, m: Model, steps: list[TraceStep]) -> bool:
    """Check that every trace step is a one-step reduct of its predecessor."""
    cur = t
    for s in steps:
        if not any(r == s.rule and p == s.path and red == s.result
                   for r, p, red in enumerate_steps(cur, m)):
            return False
        cur = s.result
    return True


# full contextual closure


@deep
def enumerate_steps(t: Node, m: Model) -> set[Step]:
    """All one-step reducts under the unrestricted contextual closure."""
    return set(_all_steps(t, m))


def _all_steps(t: Node, m: Model) -> Iterator[Step]:
    r = root_step(t, m)
    if r is not None:
        yield r[0], (), r[1]
    match t:
        case Lam(x, body):
            for rule, p, new in _all_steps(body, m):
                yield rule, (0,) + p, Lam(x, new)
        case App(f, a):
            for rule, p, new in _all_steps(f, m):
                yield rule, (0,) + p, App(new, a)
            for rule, p, new in _all_steps(a, m):
                yield rule, (1,) + p, App(f, new)
        case Tau(alpha, body):
            for rule, p, new in _all_steps(body, m):
                yield rule, (0,) + p, Tau(alpha, new)
        case BarSum(es):
            for i, (alpha, q) in enumerate(es):
                if isinstance(q, Sum):
                    yield RuleId.TAUBAR_SUM, (i,), _split_entry(es, i)
                for rule, p, new in _all_steps(q, m):
                    yield rule, (i,) + p, mk_barsum(es[:i] + ((alpha, new),) + es[i + 1:])
        case Sum(items) | Prod(items):
            build = mk_sum if isinstance(t, Sum) else mk_prod
            for i, q in enumerate(items):
                for rule, p, new in _all_steps(q, m):
                    yield rule, (i,) + p, build(items[:i] + (new,) + items[i + 1:])


@deep
def eval_full(t: Node, m: Model, fuel: int = 10_000, seed: int = 0,
              trace: bool = True) -> ReductionOutcome:
    """Evaluation by uniformly random redex choice in the full closure,
    stopping at the first may-head-normal form."""
    rng = random.Random(seed)
    log: list[TraceStep] = []
    for n in range(fuel + 1):
        if is_mhnf(t):
            return Converged(t, log, n)
        if _is_refutation(t):
            return Refuted(log, n)
        if n == fuel:
            break
        steps = sorted(enumerate_steps(t, m), key=lambda s: (s[1], s[0].value, s[2].key()))
        if not steps:
            return FuelExhausted(t, log, n, stuck=True)
        rule, path, t = rng.choice(steps)
        if trace:
            log.append(TraceStep(rule, path, t))
    return FuelExhausted(t, log, fuel)


@deep
def normalize(t: Node, m: Model, fuel: int = 10_000) -> Node | None:
    """Full normal form by leftmost-outermost reduction, or None out of fuel."""
    for _ in range(fuel):
        steps = list(_all_steps(t, m))
        if not steps:
            return t
        t = min(steps, key=lambda s: s[1])[2]
    return None


# beta postponement


def beta_steps(t: Node, m: Model) -> list[Step]:
    out = [s for s in _all_steps(t, m) if s[0] is RuleId.BETA]
    return sorted(out, key=lambda s: s[1])


@deep
def split_beta_first(t: Node, m: Model, fuel: int = 10_000,
                     max_candidates: int = 2_000) -> tuple[list[TraceStep], list[TraceStep]] | None:
    """Find ``t ->beta* L`` and a beta-free head evaluation of ``L`` reaching
    a may-head-normal form (or the empty sum, when ``t`` is refuted).

    Candidates ``L`` are visited breadth-first over beta schedules; each is
    evaluated with the remaining fuel.
    """
    target = eval(t, m, fuel, trace=False)
    if isinstance(target, FuelExhausted):
        return None
    want = type(target)
    seen = {t}
    frontier: deque = deque([(t, [])])
    budget = fuel * 10
    while frontier and budget > 0 and len(seen) <= max_candidates:
        cur, prefix = frontier.popleft()
        out = eval(cur, m, min(fuel, budget), trace=True, no_beta=True)
        budget -= max(out.steps, 1)
        if isinstance(out, want):
            return prefix, out.trace
        for rule, path, new in beta_steps(cur, m):
            if new not in seen:
                seen.add(new)
                frontier.append((new, prefix + [TraceStep(rule, path, new)]))
    return None
