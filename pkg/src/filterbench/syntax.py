"""Terms and tests of the lambda calculus with model tests, plus Omega.

Terms: variables, abstractions, applications, sums of bar-operators, Omega.
Tests: sums and products (multisets) and tau-operators applied to terms.

Nodes compare and hash up to alpha-equivalence and multiset order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import LabelError, ParseError
from .model import Model, TypeExpr
from .model.dsl import parse_type_text
from .model.typeexpr import show as show_type, sort_key


class _Node:
    def key(self) -> tuple:
        k = self._k
        if k is None:
            k = _compute_key(self, {}, 0)
            object.__setattr__(self, "_k", k)
        return k

    def free(self) -> frozenset[str]:
        fv = self._fv
        if fv is None:
            fv = _compute_fv(self)
            object.__setattr__(self, "_fv", fv)
        return fv

    def __eq__(self, other) -> bool:
        return isinstance(other, _Node) and (self is other or self.key() == other.key())

    def __hash__(self) -> int:
        h = self._h
        if h is None:
            h = hash(self.key())
            object.__setattr__(self, "_h", h)
        return h

    def __repr__(self) -> str:
        return f"{type(self).__name__}<{show(self)}>"


_hidden = dict(default=None, compare=False, repr=False, hash=False)


@dataclass(frozen=True, eq=False, repr=False)
class Var(_Node):
    name: str
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


@dataclass(frozen=True, eq=False, repr=False)
class Lam(_Node):
    var: str
    body: "Term"
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


@dataclass(frozen=True, eq=False, repr=False)
class App(_Node):
    fun: "Term"
    arg: "Term"
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


@dataclass(frozen=True, eq=False, repr=False)
class BarSum(_Node):
    entries: tuple  # of (TypeExpr, Test)
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


@dataclass(frozen=True, eq=False, repr=False)
class Omega(_Node):
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


@dataclass(frozen=True, eq=False, repr=False)
class Sum(_Node):
    items: tuple
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


@dataclass(frozen=True, eq=False, repr=False)
class Prod(_Node):
    items: tuple
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


@dataclass(frozen=True, eq=False, repr=False)
class Tau(_Node):
    label: TypeExpr
    body: "Term"
    _k: tuple | None = field(**_hidden)
    _h: int | None = field(**_hidden)
    _fv: frozenset | None = field(**_hidden)


Term = Union[Var, Lam, App, BarSum, Omega]
Test = Union[Sum, Prod, Tau]
Node = Union[Term, Test]

EPS = Prod(())
ZERO = Sum(())
ZERO_T = BarSum(())
OMEGA_T = Omega()


def _key(t, env: dict[str, int], depth: int) -> tuple:
    # subterms not mentioning bound names reuse their cached key
    if not env or t.free().isdisjoint(env):
        return t.key()
    return _compute_key(t, env, depth)


def _compute_key(t, env: dict[str, int], depth: int) -> tuple:
    match t:
        case Var(x):
            return ("v", depth - env[x]) if x in env else ("f", x)
        case Lam(x, b):
            return ("l", _key(b, {**env, x: depth}, depth + 1))
        case App(f, a):
            return ("a", _key(f, env, depth), _key(a, env, depth))
        case BarSum(es):
            return ("b", tuple(sorted((sort_key(lab), _key(q, env, depth)) for lab, q in es)))
        case Omega():
            return ("o",)
        case Sum(items):
            return ("s", tuple(sorted(_key(q, env, depth) for q in items)))
        case Prod(items):
            return ("p", tuple(sorted(_key(q, env, depth) for q in items)))
        case Tau(lab, b):
            return ("t", sort_key(lab), _key(b, env, depth))
    raise TypeError(t)


def _compute_fv(t) -> frozenset[str]:
    match t:
        case Var(x):
            return frozenset({x})
        case Lam(x, b):
            return b.free() - {x}
        case App(f, a):
            return f.free() | a.free()
        case BarSum(es):
            return frozenset().union(*(q.free() for _, q in es))
        case Omega():
            return frozenset()
        case Sum(items) | Prod(items):
            return frozenset().union(*(q.free() for q in items))
        case Tau(_, b):
            return b.free()
    raise TypeError(t)


def is_term(t) -> bool:
    return isinstance(t, (Var, Lam, App, BarSum, Omega))


def is_test(t) -> bool:
    return isinstance(t, (Sum, Prod, Tau))


# smart constructors keep sums and products canonical


def _order(items: list) -> tuple:
    if len(items) < 2:
        return tuple(items)
    return tuple(sorted(items, key=lambda q: q.key()))


def mk_sum(items: Iterable[Test]) -> Test:
    flat: list = []
    for q in items:
        if isinstance(q, Sum):
            flat.extend(q.items)
        else:
            flat.append(q)
    if len(flat) == 1:
        return flat[0]
    return Sum(_order(flat))


def mk_prod(items: Iterable[Test]) -> Test:
    flat: list = []
    for q in items:
        if isinstance(q, Prod):
            flat.extend(q.items)
        else:
            flat.append(q)
    if len(flat) == 1:
        return flat[0]
    return Prod(_order(flat))


def mk_barsum(entries: Iterable[tuple[TypeExpr, Test]]) -> BarSum:
    es = list(entries)
    if len(es) > 1:
        es.sort(key=lambda e: (sort_key(e[0]), e[1].key()))
    return BarSum(tuple(es))


def ebar(label: TypeExpr) -> Term:
    """The canonical inhabitant of a label; the top gives the empty sum."""
    if label.is_top:
        return ZERO_T
    return BarSum(((label, EPS),))


def app(*ts: Term) -> Term:
    out = ts[0]
    for t in ts[1:]:
        out = App(out, t)
    return out


def lam(names: str, body: Term) -> Term:
    for x in reversed(names.split()):
        body = Lam(x, body)
    return body


def canonicalize(t: Node) -> Node:
    """Flatten sums and products, drop neutral elements, sort multisets."""
    match t:
        case Var() | Omega():
            return t
        case Lam(x, b):
            return Lam(x, canonicalize(b))
        case App(f, a):
            return App(canonicalize(f), canonicalize(a))
        case BarSum(es):
            return mk_barsum((lab, canonicalize(q)) for lab, q in es)
        case Sum(items):
            return mk_sum(canonicalize(q) for q in items)
        case Prod(items):
            return mk_prod(canonicalize(q) for q in items)
        case Tau(lab, b):
            return Tau(lab, canonicalize(b))
    raise TypeError(t)


def alpha_eq(a: Node, b: Node) -> bool:
    return a.key() == b.key()


# variables and substitution


def free_vars(t: Node) -> frozenset[str]:
    return t.free()


def fresh(base: str, avoid: set[str] | frozenset[str]) -> str:
    stem = base.rstrip("0123456789'")
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def substitute(t: Node, x: str, n: Term) -> Node:
    """Capture-avoiding replacement of the free occurrences of ``x`` by ``n``."""
    return _subst(t, x, n, free_vars(n))


def _subst(t: Node, x: str, n: Term, fvn: frozenset[str]) -> Node:
    if x not in t.free():
        return t
    match t:
        case Var(y):
            return n if y == x else t
        case Lam(y, b):
            if y == x:
                return t
            if y in fvn and x in free_vars(b):
                z = fresh(y, fvn | free_vars(b) | {x})
                b = _subst(b, y, Var(z), frozenset({z}))
                y = z
            return Lam(y, _subst(b, x, n, fvn))
        case App(f, a):
            return App(_subst(f, x, n, fvn), _subst(a, x, n, fvn))
        case BarSum(es):
            return mk_barsum((lab, _subst(q, x, n, fvn)) for lab, q in es)
        case Omega():
            return t
        case Sum(items):
            return mk_sum(_subst(q, x, n, fvn) for q in items)
        case Prod(items):
            return mk_prod(_subst(q, x, n, fvn) for q in items)
        case Tau(lab, b):
            return Tau(lab, _subst(b, x, n, fvn))
    raise TypeError(t)


def size(t: Node) -> int:
    match t:
        case Var() | Omega():
            return 1
        case Lam(_, b) | Tau(_, b):
            return 1 + size(b)
        case App(f, a):
            return 1 + size(f) + size(a)
        case BarSum(es):
            return 1 + sum(size(q) for _, q in es)
        case Sum(items) | Prod(items):
            return 1 + sum(size(q) for q in items)
    raise TypeError(t)


def children(t: Node) -> list[Node]:
    """Immediate subterms in path order."""
    match t:
        case Lam(_, b) | Tau(_, b):
            return [b]
        case App(f, a):
            return [f, a]
        case BarSum(es):
            return [q for _, q in es]
        case Sum(items) | Prod(items):
            return list(items)
    return []


def is_pure(t: Node) -> bool:
    """No test constructs: only variables, abstractions, applications, Omega."""
    match t:
        case Var() | Omega():
            return True
        case Lam(_, b):
            return is_pure(b)
        case App(f, a):
            return is_pure(f) and is_pure(a)
    return False


# printing


def show(t: Node) -> str:
    match t:
        case Sum(items):
            if not items:
                return "0"
            return " + ".join(show(q) for q in items)
        case Prod(items):
            if not items:
                return "eps"
            return " * ".join(f"({show(q)})" if isinstance(q, Sum) and q.items else show(q)
                              for q in items)
        case Tau(lab, b):
            return f"tau[{show_type(lab)}]({show(b)})"
    return _show_term(t)


def _show_term(t: Term) -> str:
    match t:
        case Var(x):
            return x
        case Omega():
            return "Omega"
        case Lam():
            names = []
            while isinstance(t, Lam):
                names.append(t.var)
                t = t.body
            return "\\" + " ".join(names) + ". " + _show_term(t)
        case App(f, a):
            left = _show_term(f)
            if isinstance(f, Lam) or (isinstance(f, BarSum) and len(f.entries) > 1):
                left = f"({left})"
            right = _show_term(a)
            if isinstance(a, (App, Lam)) or (isinstance(a, BarSum) and len(a.entries) > 1):
                right = f"({right})"
            return f"{left} {right}"
        case BarSum(es):
            if not es:
                return "0t"
            return " + ".join(
                f"ebar[{show_type(lab)}]" if q == EPS else f"bar[{show_type(lab)}]({show(q)})"
                for lab, q in es)
    raise TypeError(t)


# parsing

_KEYWORDS = {"Omega", "0t", "bar", "ebar", "tau", "eps", "0"}
_TOK = re.compile(r"\s*(?:(\\)|(\.)|(\()|(\))|(\+)|(\*)|(\[)|(0t\b)|([A-Za-z_][A-Za-z0-9_']*)|(0))")


class _Parser:
    def __init__(self, text: str, m: Model):
        self.text = text
        self.m = m
        self.toks: list[tuple[str, int]] = []
        i = 0
        while i < len(text):
            if text[i].isspace():
                i += 1
                continue
            mt = _TOK.match(text, i)
            if not mt or mt.end() == i:
                raise ParseError(f"unexpected character {text[i]!r}", i)
            tok = mt.group(mt.lastindex)
            start = mt.start(mt.lastindex)
            if tok == "[":
                close = text.find("]", start)
                if close < 0:
                    raise ParseError("unclosed label bracket", start)
                self.toks.append(("[", start))
                self.toks.append(("LABEL:" + text[start + 1:close], start + 1))
                self.toks.append(("]", close))
                i = close + 1
                continue
            self.toks.append((tok, start))
            i = mt.end()
        self.i = 0

    def peek(self, ahead: int = 0) -> str | None:
        j = self.i + ahead
        return self.toks[j][0] if j < len(self.toks) else None

    def pos(self) -> int:
        return self.toks[self.i][1] if self.i < len(self.toks) else len(self.text)

    def take(self, want: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            found = "end of input" if tok is None else repr(tok.removeprefix("LABEL:"))
            raise ParseError(f"expected {want!r}, found {found}", self.pos())
        self.i += 1
        return tok

    def done(self) -> None:
        if self.peek() is not None:
            raise ParseError(f"unexpected {self.peek()!r}", self.pos())

    def label(self) -> TypeExpr:
        self.take("[")
        p = self.pos()
        raw = self.take()
        if not raw.startswith("LABEL:"):
            raise ParseError("expected a label", p)
        self.take("]")
        t = self.m.canon(parse_type_text(raw[6:], set(self.m.atoms), self.m.omega, p))
        if t.is_top:
            raise LabelError("the top element cannot label a test", p)
        return t

    # terms

    def term(self) -> Term:
        if self.peek() == "\\":
            return self.abstraction()
        t = self.application()
        while self.peek() == "+":
            p = self.pos()
            self.take("+")
            u = self.application()
            if not isinstance(t, BarSum) or not isinstance(u, BarSum):
                raise ParseError("term sums may only combine bar operators", p)
            t = mk_barsum(t.entries + u.entries)
        return t

    def abstraction(self) -> Term:
        self.take("\\")
        names = []
        while self.peek() not in (".", None):
            p = self.pos()
            x = self.take()
            if x in _KEYWORDS or not re.match(r"[A-Za-z_]", x):
                raise ParseError(f"bad binder {x!r}", p)
            names.append(x)
        if not names:
            raise ParseError("abstraction without binders", self.pos())
        self.take(".")
        body = self.term()
        for x in reversed(names):
            body = Lam(x, body)
        return body

    def application(self) -> Term:
        t = self.atom()
        while self._starts_atom():
            if self.peek() == "\\":
                t = App(t, self.abstraction())
                break
            t = App(t, self.atom())
        return t

    def _starts_atom(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        return tok in ("(", "\\", "Omega", "0t", "bar", "ebar") or (
            tok not in _KEYWORDS and re.match(r"[A-Za-z_]", tok) is not None)

    def atom(self) -> Term:
        tok = self.peek()
        p = self.pos()
        if tok == "(":
            self.take("(")
            t = self.term()
            self.take(")")
            return t
        if tok == "Omega":
            self.take()
            return OMEGA_T
        if tok == "0t":
            self.take()
            return ZERO_T
        if tok == "bar":
            self.take()
            lab = self.label()
            self.take("(")
            q = self.test()
            self.take(")")
            return mk_barsum([(lab, q)])
        if tok == "ebar":
            self.take()
            return BarSum(((self.label(), EPS),))
        if tok is not None and tok not in _KEYWORDS and re.match(r"[A-Za-z_]", tok):
            self.take()
            return Var(tok)
        raise ParseError(f"expected a term, found {tok or 'end of input'}", p)

    # tests

    def test(self) -> Test:
        items = [self.product()]
        while self.peek() == "+":
            self.take("+")
            items.append(self.product())
        return mk_sum(items)

    def product(self) -> Test:
        items = [self.test_atom()]
        while self.peek() == "*":
            self.take("*")
            items.append(self.test_atom())
        return mk_prod(items)

    def test_atom(self) -> Test:
        tok = self.peek()
        p = self.pos()
        if tok == "eps":
            self.take()
            return EPS
        if tok == "0":
            self.take()
            return ZERO
        if tok == "tau":
            self.take()
            lab = self.label()
            self.take("(")
            t = self.term()
            self.take(")")
            return Tau(lab, t)
        if tok == "(":
            self.take("(")
            q = self.test()
            self.take(")")
            return q
        raise ParseError(f"expected a test, found {tok or 'end of input'}", p)


def parse_term(text: str, m: Model) -> Term:
    p = _Parser(text, m)
    t = p.term()
    p.done()
    return t


def parse_test(text: str, m: Model) -> Test:
    p = _Parser(text, m)
    q = p.test()
    p.done()
    return q


def parse_any(text: str, m: Model) -> Node:
    """A test when the text starts like one, otherwise a term."""
    head = text.lstrip()
    if re.match(r"(tau\s*\[|eps\b|0\b(?!t)|\(\s*(tau|eps\b|0\b(?!t)))", head):
        try:
            return parse_test(text, m)
        except ParseError:
            if not head.startswith("("):
                raise
    return parse_term(text, m)
