"""Property suites S1-S9 and their report files.

Each suite maps a :class:`SuiteSpec` to a list of :class:`CaseResult` in a
fixed case order. Reports are written as one JSON object per line (keys
sorted, no spaces) followed by a bar chart of the verdicts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable

from ..approximants import NoneWithinFuel, approximability_check, direct_approximant
from ..errors import ResourceError
from ..gen import Generator, label_pool, normal_forms, shrink, value_pool
from ..model import (
    Model,
    SHIPPED,
    StratWitness,
    parse_model,
    shipped_model,
    sp_search,
    sp_verify,
    type_universe,
    u_truncation,
    z_truncation,
)
from ..model.universe import unfolding_agreement
from ..reduction import (
    Converged,
    FuelExhausted,
    Refuted,
    enumerate_steps,
    eval as reduce_eval,
    eval_full,
    outcome_name,
    split_beta_first,
)
from ..semantics import Derivable, NotFound, TermJ, check, closed_instance, make_env, oracle
from ..syntax import canonicalize, free_vars, parse_any, parse_term, show

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


@dataclass
class SuiteSpec:
    name: str
    models: tuple[str, ...] = ()
    fuel: int = 10_000
    depth: int = 12
    budget: int = 1_000
    type_depth: int = 2
    seed: int = 0
    cases: int | None = None


@dataclass
class CaseResult:
    case: str
    verdict: str
    fuel_used: int = 0
    detail: str = ""
    # model name, input text and trace lines of a minimized failing instance
    counterexample: dict | None = None


@dataclass
class SuiteReport:
    suite: str
    cases: list[CaseResult]
    records: Path | None = None
    figure: Path | None = None

    def counts(self) -> dict[str, int]:
        out = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
        for c in self.cases:
            out[c.verdict] += 1
        return out

    @property
    def exit_status(self) -> int:
        """0 all pass, 1 any failure, 3 inconclusive cases but no failure."""
        n = self.counts()
        if n[FAIL]:
            return 1
        return 3 if n[INCONCLUSIVE] else 0

    def summary(self) -> str:
        n = self.counts()
        line = f"{self.suite}: {n[PASS]}/{len(self.cases)} PASS"
        if n[FAIL]:
            line += f", {n[FAIL]} FAIL"
        if n[INCONCLUSIVE]:
            line += f", {n[INCONCLUSIVE]} INCONCLUSIVE"
        return line


def resolve_model(ref: str, strict: bool = True) -> Model:
    """A shipped model by name, or a model file by path."""
    if ref in SHIPPED:
        return shipped_model(ref)
    return parse_model(Path(ref).read_text(), strict)


def _models(spec: SuiteSpec, default: tuple[str, ...]) -> list[tuple[str, Model]]:
    refs = spec.models or default
    return [(Path(r).stem if r not in SHIPPED else r, resolve_model(r)) for r in refs]


def _verdict(ok: bool | None) -> str:
    return INCONCLUSIVE if ok is None else (PASS if ok else FAIL)


def _trace_lines(o) -> list[str]:
    return [s.format() for s in o.trace]


# S1: reduction blocks shown as worked examples


@dataclass(frozen=True)
class TraceFixture:
    model: str
    start: str
    outcome: str
    # (rule, displayed reduct or None when the step is not displayed)
    steps: tuple[tuple[str, str | None], ...]


def _z_lines() -> list[TraceFixture]:
    out = []
    for n in range(4):
        two, one, three = (n + 2) % 4, (n + 1) % 4, (n + 3) % 4
        out.append(TraceFixture("z3", f"tau[{two}](ebar[{n}] a)", "REFUTED",
                                (("taubar", f"tau[{two}](ebar[{one}])"), ("tau-taubar", "0"))))
        out.append(TraceFixture("z3", f"tau[{two}](ebar[{n}] a b)", "CONVERGED",
                                (("taubar", None), ("taubar", f"tau[{two}](ebar[{two}])"),
                                 ("tau-taubar", "eps"))))
        out.append(TraceFixture("z3", f"tau[{two}](ebar[{n}] a b c)", "REFUTED",
                                (("taubar", None), ("taubar", None),
                                 ("taubar", f"tau[{two}](ebar[{three}])"), ("tau-taubar", "0"))))
    return out


WORKED_TRACES: dict[str, list[TraceFixture]] = {
    "park": [TraceFixture("pinf", r"tau[*](\x. x x)", "CONVERGED", (
        ("tau", "tau[*](ebar[*] ebar[*])"),
        ("taubar", "tau[*](bar[*](tau[*](ebar[*])))"),
        ("tau-taubar", None),
        ("tau-taubar", "eps")))],
    "scott": [
        TraceFixture("dinf", r"tau[*]((\x y. x y) ebar[*])", "CONVERGED", (
            ("beta", r"tau[*](\y. ebar[*] y)"),
            ("tau", "tau[*](ebar[*] 0t)"),
            ("taubar", "tau[*](bar[*](eps))"),
            ("tau-taubar", "eps"))),
        TraceFixture("dinf", r"tau[*]((\x y. y x) ebar[*])", "REFUTED", (
            ("beta", r"tau[*](\y. y ebar[*])"),
            ("tau", "tau[*](0t ebar[*])"),
            ("taubar", "tau[*](0t)"),
            ("tau-taubar", "0")))],
    "norm": [
        TraceFixture("norm", r"tau[p](\x. x)", "CONVERGED", (
            ("tau", "tau[p](ebar[q])"), ("tau-taubar", "eps"))),
        TraceFixture("norm", r"tau[q](\x. x)", "REFUTED", (
            ("tau", "tau[q](ebar[p])"), ("tau-taubar", "0")))],
    "z": _z_lines(),
}


def match_fixture(fx: TraceFixture, m: Model, fuel: int) -> tuple[bool, int, str, object]:
    t = parse_any(fx.start, m)
    o = reduce_eval(t, m, fuel)
    got = [(str(s.rule), s.result) for s in o.trace]
    ok = outcome_name(o) == fx.outcome and len(got) == len(fx.steps)
    for (rule, shown), (grule, res) in zip(fx.steps, got):
        ok = ok and rule == grule and (shown is None or parse_any(shown, m) == res)
    return ok, o.steps, f"{fx.start} => {outcome_name(o)} in {o.steps}", o


def suite_worked_traces(spec: SuiteSpec) -> list[CaseResult]:
    out = []
    for case, fixtures in WORKED_TRACES.items():
        ok, used, notes, cex = True, 0, [], None
        for fx in fixtures:
            m = shipped_model(fx.model)
            good, steps, note, o = match_fixture(fx, m, spec.fuel)
            used += steps
            notes.append(note)
            if not good and cex is None:
                cex = {"model": fx.model, "input": fx.start, "trace": _trace_lines(o)}
            ok = ok and good
        out.append(CaseResult(case, _verdict(ok), used, "; ".join(notes), cex))
    return out


# S2: stratified positivity


def parity_witness(m: Model) -> StratWitness:
    return StratWitness({a: 1 for a in m.atoms}, {a: int(a) % 2 == 0 for a in m.atoms})


def sp_table_entries() -> list[tuple[str, Callable[[], Model], str]]:
    """(case, model factory, expectation) with expectation one of
    sp, not-sp, parity."""
    rows: list = [("dinf", lambda: shipped_model("dinf"), "sp"),
                  ("norm", lambda: shipped_model("norm"), "sp")]
    for k in range(1, 6):
        rows.append((f"z{k}", lambda k=k: parse_model(z_truncation(k)), "sp"))
    for k in range(1, 6):
        rows.append((f"z{k}-parity", lambda k=k: parse_model(z_truncation(k)), "parity"))
    rows.append(("pinf", lambda: shipped_model("pinf"), "not-sp"))
    for k in range(1, 4):
        rows.append((f"u{k}", lambda k=k: parse_model(u_truncation(k)), "not-sp"))
    return rows


def suite_sp_table(spec: SuiteSpec) -> list[CaseResult]:
    out = []
    for case, make, want in sp_table_entries():
        m = make()
        if want == "parity":
            bad = sp_verify(m, parity_witness(m))
            detail = "parity witness verifies" if not bad else (
                f"{len(bad)} violations, first: " + "; ".join(map(str, bad[:2])))
            out.append(CaseResult(case, _verdict(not bad), 0, detail))
            continue
        try:
            w = sp_search(m)
        except ResourceError as exc:
            out.append(CaseResult(case, INCONCLUSIVE, 0, str(exc)))
            continue
        found = f"SP: yes ({w.describe()})" if w else "SP: no"
        out.append(CaseResult(case, _verdict((w is not None) == (want == "sp")), 0, found))
    return out


# S3: the identity and its eta-expansion


def suite_extensionality(spec: SuiteSpec) -> list[CaseResult]:
    out = []
    for name, m in _models(spec, ("dinf", "norm")):
        ident, one = parse_term(r"\x. x", m), parse_term(r"\x y. x y", m)
        uni = type_universe(m, spec.type_depth)
        bad, used = [], 0
        for t in uni:
            vi = isinstance(check(TermJ((), ident, t), m, spec.depth), Derivable)
            v1 = isinstance(check(TermJ((), one, t), m, spec.depth), Derivable)
            if vi != v1:
                bad.append(m.show(t))
            if not m.is_top(t):
                oi, o1 = oracle(ident, (), t, m, spec.fuel), oracle(one, (), t, m, spec.fuel)
                used += oi.steps + o1.steps
                if outcome_name(oi) != outcome_name(o1):
                    bad.append(m.show(t) + " (oracle)")
        detail = f"{len(uni)} types, {len(bad)} disagreements" + (": " + ", ".join(bad) if bad else "")
        out.append(CaseResult(name, _verdict(not bad), used, detail))
    return out


# S4 and S7: random closed-instance queries


QUERY_SIZE = (2, 12)


def definability_corpus(m: Model, seed: int, n: int):
    g = Generator(m, seed)
    return [g.query(g.rng.randint(*QUERY_SIZE)) for _ in range(n)]


def classify(m: Model, q, fuel: int, depth: int) -> tuple[str, str, object]:
    """(checker verdict, oracle verdict, oracle outcome) for one query."""
    try:
        v = check(TermJ(make_env(q.env), q.term, q.target), m, depth)
        cv = "DERIVABLE" if isinstance(v, Derivable) else "NOT-FOUND"
    except ResourceError:
        cv = "BUDGET"
    o = oracle(q.term, dict(q.env), q.target, m, fuel, trace=True)
    return cv, outcome_name(o), o


def contradiction(cv: str, ov: str) -> bool | None:
    """True on a contradiction, False on agreement, None when undecided."""
    if cv == "BUDGET" or ov == "FUEL-OUT":
        return None
    return (cv == "DERIVABLE") != (ov == "CONVERGED")


def _query_text(m: Model, q) -> str:
    env = ", ".join(f"{x}:{m.show(a)}" for x, a in q.env)
    return f"[{env}] {show(q.term)} : {m.show(q.target)}"


def suite_definability(spec: SuiteSpec) -> list[CaseResult]:
    n = spec.cases or 200
    out = []
    for name, m in _models(spec, ("dinf", "norm")):
        decided = 0
        for i, q in enumerate(definability_corpus(m, spec.seed, n)):
            cv, ov, o = classify(m, q, spec.fuel, spec.depth)
            bad = contradiction(cv, ov)
            decided += bad is not None
            cex = None
            if bad:
                cex = _minimize_query(m, q, spec)
            out.append(CaseResult(f"{name}/q{i:03d}", _verdict(None if bad is None else not bad),
                                  o.steps, f"{_query_text(m, q)} check={cv} oracle={ov}", cex))
        rate = decided / n
        out.append(CaseResult(f"{name}/decided", _verdict(rate >= 0.8), 0,
                              f"{decided}/{n} decided ({rate:.1%}, need 80%)"))
    return out


def _minimize_query(m: Model, q, spec: SuiteSpec) -> dict:
    env = dict(q.env)

    def bad(t):
        if not free_vars(t) <= set(env):
            return False
        sub = type(q)(t, tuple((x, env[x]) for x in sorted(free_vars(t))), q.target)
        cv, ov, _ = classify(m, sub, spec.fuel, spec.depth)
        return bool(contradiction(cv, ov))

    t = shrink(q.term, bad, label_pool(m, spec.type_depth))
    small = type(q)(t, tuple((x, env[x]) for x in sorted(free_vars(t))), q.target)
    test = closed_instance(small.term, dict(small.env), m.canon(small.target))
    o = reduce_eval(test, m, spec.fuel)
    return {"model": m.name, "input": show(test), "trace": _trace_lines(o),
            "query": _query_text(m, small)}


def suite_beta_first(spec: SuiteSpec) -> list[CaseResult]:
    n = spec.cases or 200
    out = []
    for name, m in _models(spec, ("dinf", "norm")):
        for i, q in enumerate(definability_corpus(m, spec.seed, n)):
            test = closed_instance(q.term, dict(q.env), m.canon(q.target))
            o = reduce_eval(test, m, spec.fuel, trace=False)
            if not isinstance(o, Converged):
                continue
            split = split_beta_first(test, m, spec.fuel)
            if split is None:
                out.append(CaseResult(f"{name}/q{i:03d}", FAIL, o.steps, show(test),
                                      {"model": m.name, "input": show(test),
                                       "trace": _trace_lines(reduce_eval(test, m, spec.fuel))}))
                continue
            pre, rest = split
            out.append(CaseResult(f"{name}/q{i:03d}", PASS, len(pre) + len(rest),
                                  f"{len(pre)} beta steps then {len(rest)} beta-free steps"))
    return out


# S5: three-way agreement on normal forms


def suite_normal_forms(spec: SuiteSpec) -> list[CaseResult]:
    forms = normal_forms(5)
    out = []
    for name, m in _models(spec, ("dinf", "norm")):
        labels, values = label_pool(m, 1), value_pool(m, 1)
        for i, s in enumerate(forms):
            xs = sorted(free_vars(s))
            bad, used, n = [], 0, 0
            for vals in product(values, repeat=len(xs)):
                env = dict(zip(xs, vals))
                for b in labels:
                    n += 1
                    a = reduce_eval(closed_instance(s, env, b), m, spec.fuel, trace=False, no_beta=True)
                    c = reduce_eval(closed_instance(direct_approximant(s), env, b), m, spec.fuel,
                                    trace=False)
                    d = check(TermJ(make_env(env.items()), s, b), m, spec.depth)
                    used += a.steps + c.steps
                    if isinstance(a, FuelExhausted) or isinstance(c, FuelExhausted):
                        bad.append(None)
                        continue
                    if not (isinstance(a, Converged) == isinstance(c, Converged)
                            == isinstance(d, Derivable)):
                        bad.append(f"{[m.show(v) for v in vals]} {m.show(b)}")
            real = [x for x in bad if x is not None]
            verdict = FAIL if real else (INCONCLUSIVE if bad else PASS)
            out.append(CaseResult(f"{name}/nf{i:03d}", verdict, used,
                                  f"{show(s)}: {n} queries" + ("; " + "; ".join(real) if real else "")))
    return out


# S6: the non-approximable membership


KERTH_TERM = r"(\x y. y (x x)) (\x y. y (x x))"
KERTH_TARGET = "b"
KERTH_MIN_DEPTH = 6


def suite_kerth(spec: SuiteSpec) -> list[CaseResult]:
    m = shipped_model("kerth")
    v = parse_term(KERTH_TERM, m)
    target = m.parse_type(KERTH_TARGET)
    out = []
    d = check(TermJ((), v, target), m, max(spec.depth, KERTH_MIN_DEPTH))
    out.append(CaseResult("derivable", _verdict(isinstance(d, Derivable)), 0,
                          f"check(|- V : {KERTH_TARGET}) = {type(d).__name__}"))
    for fuel in (spec.fuel, spec.fuel * 10):
        o = oracle(v, (), target, m, fuel)
        ok = isinstance(o, FuelExhausted) and not o.stuck
        out.append(CaseResult(f"oracle-{fuel}", _verdict(ok), o.steps,
                              f"tau[{KERTH_TARGET}](V) => {outcome_name(o)}"))
    r = approximability_check(v, (), target, m, spec.fuel, spec.budget, spec.depth)
    ok = isinstance(r, NoneWithinFuel) and not r.disagreements
    detail = (f"NoneWithinFuel after {r.examined} approximants" if isinstance(r, NoneWithinFuel)
              else f"witness {show(r.approximant)}")
    detail += f", {len(r.disagreements)} checker/oracle disagreements"
    out.append(CaseResult("approximants", _verdict(ok), 0, detail))
    return out


# S8: strategy independence and invariance under reduction


def suite_confluence(spec: SuiteSpec) -> list[CaseResult]:
    n = spec.cases or 250
    out = []
    for name, m in _models(spec, ("dinf", "norm")):
        g = Generator(m, spec.seed + 1)
        for i in range(n):
            t = g.closed_test(g.rng.randint(2, 10))
            a = reduce_eval(t, m, spec.fuel, trace=False)
            b = eval_full(t, m, spec.fuel, seed=spec.seed + i, trace=False)
            ok = _same_outcome(a, b)
            cex = None
            if ok is False:
                small = shrink(t, lambda u: _same_outcome(
                    reduce_eval(u, m, spec.fuel, trace=False),
                    eval_full(u, m, spec.fuel, seed=spec.seed + i, trace=False)) is False)
                cex = {"model": m.name, "input": show(small),
                       "trace": _trace_lines(eval_full(small, m, spec.fuel, seed=spec.seed + i))}
            out.append(CaseResult(f"{name}/strategy{i:03d}", _verdict(ok), a.steps + b.steps,
                                  f"{show(t)}: head {outcome_name(a)}, full {outcome_name(b)}", cex))
        triples = max(n // 4, 50)
        i = 0
        while i < triples:
            q = g.query(g.rng.randint(3, 10))
            steps = sorted(enumerate_steps(q.term, m), key=lambda s: (s[1], s[0].value))
            if not steps:
                continue
            rule, path, r = g.rng.choice(steps)
            env2 = tuple(p for p in q.env if p[0] in free_vars(r))
            q2 = type(q)(r, env2, q.target)
            c1, o1, x1 = classify(m, q, spec.fuel, spec.depth)
            c2, o2, x2 = classify(m, q2, spec.fuel, spec.depth)
            ok: bool | None = True
            if "BUDGET" in (c1, c2) or "FUEL-OUT" in (o1, o2):
                ok = None
            elif c1 != c2 or o1 != o2:
                ok = False
            out.append(CaseResult(f"{name}/invariance{i:03d}", _verdict(ok), x1.steps + x2.steps,
                                  f"{_query_text(m, q)} --{rule}--> {show(r)}: "
                                  f"check {c1}/{c2}, oracle {o1}/{o2}"))
            i += 1
    return out


def converged_summand(o) -> object:
    """The may-head-normal summand a converging evaluation stopped at."""
    from ..reduction import _hnf_product
    from ..syntax import Sum

    f = o.final
    items = f.items if isinstance(f, Sum) else (f,)
    done = sorted((canonicalize(q) for q in items if _hnf_product(q)), key=lambda q: q.key())
    return done[0] if done else canonicalize(f)


def _same_outcome(a, b) -> bool | None:
    if isinstance(a, FuelExhausted) or isinstance(b, FuelExhausted):
        return None
    if type(a) is not type(b):
        return False
    if isinstance(a, Converged):
        return converged_summand(a) == converged_summand(b)
    return True


# S9: subtyping against bounded unfolding


def suite_subtyping(spec: SuiteSpec) -> list[CaseResult]:
    out = []
    for name, m in _models(spec, SHIPPED):
        pairs, decided, bad = unfolding_agreement(m, 3, (3,))
        detail = f"{pairs} pairs, {decided} decided, {len(bad)} disagreements"
        if bad:
            a, b, k, r = bad[0]
            detail += f"; first: {m.show(a)} <= {m.show(b)} is {r} (unfolding {k})"
        out.append(CaseResult(name, _verdict(not bad), 0, detail))
    return out


SUITES: dict[str, tuple[str, Callable[[SuiteSpec], list[CaseResult]]]] = {
    "paper-traces": ("worked reduction examples reproduce step by step", suite_worked_traces),
    "sp-table": ("stratified positivity verdicts for the shipped and truncated models", suite_sp_table),
    "extensionality": ("identity and its eta-expansion have the same types", suite_extensionality),
    "definability": ("type checker and test oracle agree on random queries", suite_definability),
    "normal-forms": ("three-way agreement on small normal forms", suite_normal_forms),
    "kerth": ("a derivable membership that no approximant carries", suite_kerth),
    "beta-first": ("converging tests split into beta steps then beta-free steps", suite_beta_first),
    "confluence": ("strategy independence and invariance under one step", suite_confluence),
    "subtyping": ("subtyping agrees with bounded unfolding", suite_subtyping),
}


def run_suite(spec: SuiteSpec, out_dir: str | Path | None = None) -> SuiteReport:
    if spec.name not in SUITES:
        raise KeyError(f"unknown suite {spec.name!r}")
    report = SuiteReport(spec.name, SUITES[spec.name][1](spec))
    if out_dir is not None:
        write_report(report, Path(out_dir))
    return report


# report files


def case_record(suite: str, c: CaseResult, artifacts: list[str]) -> str:
    rec = {"suite": suite, "case": c.case, "verdict": c.verdict, "fuel-used": c.fuel_used,
           "artifacts": artifacts, "detail": c.detail}
    return json.dumps(rec, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_report(report: SuiteReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    figure = f"{report.suite}.png"
    lines = []
    for c in report.cases:
        arts = [figure]
        if c.counterexample is not None:
            name = f"{report.suite}-{c.case.replace('/', '-')}.trace"
            (out_dir / name).write_text(trace_file_text(c.counterexample))
            arts.append(name)
        lines.append(case_record(report.suite, c, arts))
    report.records = out_dir / f"{report.suite}.jsonl"
    report.records.write_text("\n".join(lines) + "\n")
    report.figure = out_dir / figure
    plot_verdicts(report, report.figure)


def trace_file_text(cex: dict) -> str:
    lines = [f"model: {cex['model']}", f"input: {cex['input']}"]
    return "\n".join(lines + list(cex["trace"])) + "\n"


def plot_verdicts(report: SuiteReport, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups: dict[str, dict[str, int]] = {}
    for c in report.cases:
        g = c.case.split("/")[0]
        groups.setdefault(g, {PASS: 0, FAIL: 0, INCONCLUSIVE: 0})[c.verdict] += 1
    names = list(groups)
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(names) + 2), 3.2))
    bottom = [0] * len(names)
    for verdict, colour in ((PASS, "#4c9a5f"), (INCONCLUSIVE, "#c9a227"), (FAIL, "#b5443a")):
        vals = [groups[g][verdict] for g in names]
        ax.bar(names, vals, bottom=bottom, color=colour, label=verdict)
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_ylabel("cases")
    ax.set_title(report.suite)
    ax.legend(fontsize=7)
    ax.tick_params(axis="x", labelrotation=45, labelsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
