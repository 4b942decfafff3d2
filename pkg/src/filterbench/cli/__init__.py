"""Command-line interface.

Exit codes: 0 pass, 1 fail, 2 input error, 3 inconclusive under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from ..approximants import NoneWithinFuel, approximability_check, approximants
from ..errors import ModelError, ParseError, ResourceError
from ..model import StratWitness, check_model, parse_type, sp_search, sp_verify
from ..reduction import (
    Converged,
    FuelExhausted,
    Refuted,
    RuleId,
    TraceStep,
    eval as reduce_eval,
    eval_full,
    outcome_name,
    replay,
)
from ..semantics import Derivable, TermJ, check, make_env, oracle
from ..syntax import parse_any, parse_term, show
from .suites import SUITES, SuiteSpec, resolve_model, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3

_TRACE_LINE = re.compile(r"^--([a-z-]+)@(root|\d+(?:\.\d+)*)--> (.*)$")


class _Out:
    """Collects text lines or a JSON payload, depending on ``--json``."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.data: dict = {}

    def line(self, text: str) -> None:
        if not self.as_json:
            print(text)

    def put(self, **kw) -> None:
        self.data.update(kw)

    def flush(self) -> None:
        if self.as_json:
            print(json.dumps(self.data, sort_keys=True))


def _inconclusive(args) -> int:
    return EXIT_INCONCLUSIVE if args.strict else EXIT_PASS


def _model_arg(args, default: str | None = "dinf"):
    ref = getattr(args, "model", None) or default
    if ref is None:
        raise ModelError("no model given (use --model)")
    return resolve_model(ref)


def _parse_env(text: str | None, m) -> list:
    if not text:
        return []
    out = []
    for item in text.split(","):
        if ":" not in item:
            raise ParseError(f"environment entry {item.strip()!r} is not of the form x:<type>")
        x, t = item.split(":", 1)
        out.append((x.strip(), parse_type(t.strip(), m)))
    return out


# commands


def cmd_model(args, out: _Out) -> int:
    # tables are checked leniently here so that every violation gets listed
    m = resolve_model(args.file, strict=False)
    bad = check_model(m)
    if bad:
        out.line("INVALID")
        for v in bad:
            out.line(f"  {v}")
        out.put(valid=False, violations=[str(v) for v in bad])
        return EXIT_INPUT
    out.put(valid=True)
    if not args.sp:
        out.line(f"VALID ({len(m.atoms)} atoms)")
        return EXIT_PASS
    if args.witness:
        data = json.loads(Path(args.witness).read_text())
        w = StratWitness({k: int(v) for k, v in data["rank"].items()},
                         {k: bool(v) for k, v in data.get("polarity", {}).items()})
        errs = sp_verify(m, w)
        out.put(sp=not errs, witness_violations=[str(e) for e in errs])
        if errs:
            out.line("VALID; SP: witness rejected")
            for e in errs:
                out.line(f"  {e}")
            return EXIT_FAIL
        out.line(f"VALID; SP: yes ({w.describe()})")
        return EXIT_PASS
    try:
        w = sp_search(m, args.max_atoms)
    except ResourceError as exc:
        out.line(f"VALID; SP: unknown ({exc})")
        out.put(sp=None)
        return _inconclusive(args)
    if w is None:
        out.line("VALID; SP: no")
        out.put(sp=False)
    else:
        out.line(f"VALID; SP: yes ({w.describe()})")
        out.put(sp=True, rank=w.rank, polarity=w.polarity)
    return EXIT_PASS


def read_trace_file(path: str) -> tuple[str | None, str, list[str]]:
    """Split a trace file into (model reference, input text, step lines)."""
    model_ref, start, raw = None, None, []
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("model:"):
            model_ref = ln.split(":", 1)[1].strip()
        elif ln.startswith("input:"):
            start = ln.split(":", 1)[1].strip()
        elif ln.strip():
            raw.append(ln)
    if start is None:
        raise ParseError("trace file has no 'input:' line")
    return model_ref, start, raw


def _parse_steps(raw: list[str], m) -> list[TraceStep]:
    steps = []
    for n, ln in enumerate(raw, 1):
        hit = _TRACE_LINE.match(ln.strip())
        if not hit:
            raise ParseError(f"malformed trace line {n}: {ln!r}")
        rule, where, body = hit.groups()
        path = () if where == "root" else tuple(int(p) for p in where.split("."))
        steps.append(TraceStep(RuleId(rule), path, parse_any(body, m)))
    return steps


def cmd_reduce(args, out: _Out) -> int:
    if args.replay:
        ref, start, raw = read_trace_file(args.replay)
        m = resolve_model(args.model or ref or "dinf")
        t = parse_any(start, m)
        steps = _parse_steps(raw, m)
        ok = replay(t, m, steps)
        final = steps[-1].result if steps else t
        out.put(replayed=ok, steps=len(steps), final=show(final))
        if not ok:
            out.line("REPLAY FAILED")
            return EXIT_FAIL
        out.line(f"REPLAYED {len(steps)} steps")
        out.line(f"FINAL {show(final)}")
        return EXIT_PASS
    if args.term is None:
        raise ParseError("reduce needs a term or test (or --replay FILE)")
    m = _model_arg(args)
    t = parse_any(args.term, m)
    if args.strategy == "full":
        o = eval_full(t, m, args.fuel, seed=args.seed)
    else:
        o = reduce_eval(t, m, args.fuel)
    if args.trace:
        for s in o.trace:
            out.line(s.format())
    name = outcome_name(o)
    out.put(outcome=name, steps=o.steps, trace=[s.format() for s in o.trace] if args.trace else [])
    match o:
        case Converged(final=f):
            out.line(f"{name} {show(f)}")
            out.put(final=show(f))
        case Refuted():
            out.line(name)
        case FuelExhausted(last=last, stuck=stuck):
            out.line(f"{name}{' (stuck)' if stuck else ''} {show(last)}")
            out.put(final=show(last), stuck=stuck)
            return _inconclusive(args)
    return EXIT_PASS


def cmd_member(args, out: _Out) -> int:
    m = _model_arg(args)
    t = parse_term(args.term, m)
    env = _parse_env(args.env, m)
    target = parse_type(args.target, m)
    run_check = not args.oracle or args.cross_check
    run_oracle = args.oracle or args.cross_check
    derivable = answer = None
    if run_check:
        try:
            v = check(TermJ(make_env(env), t, target), m, args.depth)
        except ResourceError as exc:
            out.line(f"BUDGET-EXCEEDED ({exc})")
            out.put(check="BUDGET")
        else:
            derivable = isinstance(v, Derivable)
            if derivable:
                out.line("DERIVABLE " + v.derivation.conclusion(m))
                out.line(v.derivation.render(m, 2))
                out.put(check="DERIVABLE", derivation=v.derivation.render(m))
            else:
                out.line("NOT-FOUND")
                out.put(check="NOT-FOUND")
    if run_oracle:
        if m.is_top(target):
            raise ParseError("the oracle needs a non-top target")
        o = oracle(t, dict(env), target, m, args.fuel)
        answer = outcome_name(o)
        out.line(f"ORACLE: {answer}")
        out.put(oracle=answer, oracle_steps=o.steps)
    if args.cross_check:
        if derivable is None or answer == "FUEL-OUT":
            out.line("AGREEMENT: UNDECIDED")
            out.put(agreement=None)
            return _inconclusive(args)
        agree = derivable == (answer == "CONVERGED")
        out.line(f"AGREEMENT: {'YES' if agree else 'NO'}")
        out.put(agreement=agree)
        return EXIT_PASS if agree else EXIT_FAIL
    if derivable is False or answer == "FUEL-OUT" or (run_check and derivable is None):
        return _inconclusive(args)
    return EXIT_PASS


def cmd_approx(args, out: _Out) -> int:
    m = _model_arg(args)
    t = parse_term(args.term, m)
    seq = approximants(t, args.fuel, args.limit)
    for a in seq:
        out.line(show(a))
    out.put(approximants=[show(a) for a in seq])
    return EXIT_PASS


def cmd_approx_member(args, out: _Out) -> int:
    m = _model_arg(args)
    t = parse_term(args.term, m)
    env = _parse_env(args.env, m)
    target = parse_type(args.target, m)
    r = approximability_check(t, dict(env), target, m, args.fuel, args.budget, args.depth)
    for s, typed, tested in r.disagreements:
        out.line(f"DISAGREEMENT {show(s)}: check {'DERIVABLE' if typed else 'NOT-FOUND'}, "
                 f"oracle {tested}")
    out.put(disagreements=[[show(s), typed, tested] for s, typed, tested in r.disagreements])
    if isinstance(r, NoneWithinFuel):
        out.line(f"NONE-WITHIN-FUEL ({r.examined} approximants examined)")
        out.put(verdict="NONE-WITHIN-FUEL", examined=r.examined)
        status = _inconclusive(args)
    else:
        out.line(f"WITNESS {show(r.approximant)} (approximant {r.index})")
        out.put(verdict="WITNESS", approximant=show(r.approximant), index=r.index)
        status = EXIT_PASS
    return EXIT_FAIL if r.disagreements else status


def cmd_suite(args, out: _Out) -> int:
    if args.action == "list":
        for name, (desc, _) in SUITES.items():
            out.line(f"{name:15s} {desc}")
        out.put(suites=list(SUITES))
        return EXIT_PASS
    if not args.name:
        raise ParseError("suite run needs a suite name (see 'suite list')")
    names = list(SUITES) if args.name == "all" else [args.name]
    for n in names:
        if n not in SUITES:
            raise ParseError(f"unknown suite {n!r} (see 'suite list')")
    status = EXIT_PASS
    reports = []
    for n in names:
        models = args.model_list or ([args.model] if args.model else [])
        spec = SuiteSpec(n, tuple(models), args.fuel, args.depth, args.budget,
                         args.type_depth, args.seed, args.cases)
        rep = run_suite(spec, args.out)
        reports.append(rep)
        out.line(rep.summary())
        for c in rep.cases:
            if c.verdict != "PASS" and (c.verdict == "FAIL" or args.verbose):
                out.line(f"  {c.verdict} {c.case}: {c.detail}")
        code = rep.exit_status
        if code == EXIT_FAIL:
            status = EXIT_FAIL
        elif code == EXIT_INCONCLUSIVE and status == EXIT_PASS:
            status = _inconclusive(args)
    if args.out:
        out.line(f"records written to {args.out}")
    out.put(suites={r.suite: r.counts() for r in reports})
    return status


# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--model", help="model file, or the name of a shipped model")
    p.add_argument("--fuel", type=int, default=10_000, help="reduction step budget")
    p.add_argument("--depth", type=int, default=12, help="derivation search depth")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--strict", action="store_true", help="exit 3 on inconclusive answers")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="filterbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("model", parents=[common], help="validate a model, optionally decide SP")
    s.add_argument("file")
    s.add_argument("--sp", action="store_true", help="search for (or verify) an SP witness")
    s.add_argument("--witness", help="JSON file with 'rank' and 'polarity' maps")
    s.add_argument("--max-atoms", type=int, default=8)
    s.set_defaults(run=cmd_model)

    s = sub.add_parser("reduce", parents=[common], help="evaluate a term or test")
    s.add_argument("term", nargs="?")
    s.add_argument("--strategy", choices=("head", "full"), default="head")
    s.add_argument("--trace", action="store_true")
    s.add_argument("--replay", metavar="FILE", help="check a recorded trace step by step")
    s.set_defaults(run=cmd_reduce)

    s = sub.add_parser("member", parents=[common], help="membership by derivation search and/or test")
    s.add_argument("term")
    s.add_argument("--env", help='"x:<type>,y:<type>"')
    s.add_argument("--target", required=True)
    s.add_argument("--oracle", action="store_true", help="run the test oracle instead of the checker")
    s.add_argument("--cross-check", action="store_true", help="run both and report agreement")
    s.set_defaults(run=cmd_member)

    s = sub.add_parser("approx", parents=[common], help="list direct approximants")
    s.add_argument("term")
    s.add_argument("--limit", type=int)
    s.set_defaults(run=cmd_approx)

    s = sub.add_parser("approx-member", parents=[common], help="search approximants for a membership")
    s.add_argument("term")
    s.add_argument("--env")
    s.add_argument("--target", required=True)
    s.add_argument("--budget", type=int, default=1_000, help="approximants to examine")
    s.set_defaults(run=cmd_approx_member)

    s = sub.add_parser("suite", parents=[common], help="run or list the property suites")
    s.add_argument("action", choices=("run", "list"))
    s.add_argument("name", nargs="?", help="suite name, or 'all'")
    s.add_argument("--out", help="directory for records and figures")
    s.add_argument("--cases", type=int, help="number of random cases per model")
    s.add_argument("--budget", type=int, default=1_000)
    s.add_argument("--type-depth", type=int, default=2)
    s.add_argument("--models", dest="model_list", nargs="+", help="override the suite's models")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(run=cmd_suite)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    out = _Out(args.json)
    try:
        code = args.run(args, out)
    except (ParseError, ModelError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as exc:
        out.line(f"INCONCLUSIVE: {exc}")
        out.put(inconclusive=str(exc))
        out.flush()
        return _inconclusive(args)
    out.flush()
    return code
