"""Line-oriented model definition language and the type syntax.

    model <name>
    atoms <top> <a> <b> ...
    meet <a> <b> = <c>        # or "= free" for a formal intersection
    arrow <a> <b> = <c>
    ext <a> = (<type> -> <type>), ...

Types: ``w`` | atom | ``t -> t`` (right associative) | ``t /\\ t`` | parentheses.
Intersection binds tighter than arrow.
"""

from __future__ import annotations

import re
from itertools import combinations
from pathlib import Path

from ..errors import ModelError, ParseError
from .core import Model
from .typeexpr import OMEGA, Arrow, TypeExpr, arrow, atom, inter

_TOKEN = re.compile(r"\s*(?:(->)|(/\\)|(\()|(\))|([A-Za-z0-9_*']+))")
IDENT = re.compile(r"[A-Za-z0-9_*']+\Z")


def tokenize_type(text: str, offset: int = 0) -> list[tuple[str, int]]:
    toks: list[tuple[str, int]] = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r} in type", offset + i)
        start = m.start(m.lastindex)
        toks.append((m.group(m.lastindex), offset + start))
        i = m.end()
    return toks


class _TypeParser:
    def __init__(self, toks, atoms: set[str], omega: str, end: int):
        self.toks = toks
        self.i = 0
        self.atoms = atoms
        self.omega = omega
        self.end = end

    def peek(self) -> str | None:
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def pos(self) -> int:
        return self.toks[self.i][1] if self.i < len(self.toks) else self.end

    def take(self, want: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise ParseError(f"expected {want or 'a type'}, found {tok or 'end of input'}", self.pos())
        self.i += 1
        return tok

    def parse_arrow(self) -> TypeExpr:
        left = self.parse_meet()
        if self.peek() == "->":
            self.take("->")
            return arrow(left, self.parse_arrow())
        return left

    def parse_meet(self) -> TypeExpr:
        t = self.parse_base()
        while self.peek() == "/\\":
            self.take("/\\")
            t = inter(t, self.parse_base())
        return t

    def parse_base(self) -> TypeExpr:
        tok = self.peek()
        if tok == "(":
            self.take("(")
            t = self.parse_arrow()
            self.take(")")
            return t
        if tok is None or not IDENT.match(tok):
            raise ParseError(f"expected a type, found {tok or 'end of input'}", self.pos())
        p = self.pos()
        self.take()
        if tok == "w" or tok == self.omega:
            return OMEGA
        if tok not in self.atoms:
            raise ParseError(f"unknown atom {tok!r}", p)
        return atom(tok)


def parse_type_text(text: str, atoms: set[str], omega: str, offset: int = 0) -> TypeExpr:
    p = _TypeParser(tokenize_type(text, offset), atoms, omega, offset + len(text))
    t = p.parse_arrow()
    if p.peek() is not None:
        raise ParseError(f"trailing input {p.peek()!r} in type", p.pos())
    return t


def parse_type(text: str, m: Model) -> TypeExpr:
    return m.norm(parse_type_text(text, set(m.atoms), m.omega))


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_model(text: str, strict: bool = True) -> Model:
    """Parse a model definition.

    With ``strict`` the table requirements are enforced: a meet entry for every
    pair of non-top atoms and an ext entry for every non-top atom.
    """
    name = None
    omega = None
    atoms: list[str] = []
    meets: dict[tuple[str, str], str | None] = {}
    arrows: dict[tuple[str, str], str] = {}
    ext: dict[str, tuple] = {}

    def known(a: str, ln: int) -> str:
        if a != omega and a not in atoms:
            raise ParseError(f"unknown atom {a!r}", line=ln)
        return a

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "model":
            name = rest
        elif head == "atoms":
            names = rest.split()
            if not names:
                raise ParseError("empty atom list", line=ln)
            for n in names:
                if not IDENT.match(n):
                    raise ParseError(f"bad atom name {n!r}", line=ln)
            if len(set(names)) != len(names):
                raise ParseError("duplicate atom names", line=ln)
            if "w" in names[1:]:
                raise ParseError("'w' is reserved for the top atom", line=ln)
            omega, atoms = names[0], names[1:]
        elif head in ("meet", "arrow"):
            if omega is None:
                raise ParseError(f"'{head}' before 'atoms'", line=ln)
            lhs, eq, rhs = rest.partition("=")
            ab = lhs.split()
            if not eq or len(ab) != 2 or len(rhs.split()) != 1:
                raise ParseError(f"malformed {head} entry", line=ln)
            a, b = (known(x, ln) for x in ab)
            c = rhs.strip()
            if head == "meet":
                if omega in (a, b):
                    continue
                if c == "free":
                    val = None
                else:
                    val = known(c, ln)
                meets[(a, b)] = val
            else:
                arrows[(a, b)] = known(c, ln)
        elif head == "ext":
            if omega is None:
                raise ParseError("'ext' before 'atoms'", line=ln)
            lhs, eq, rhs = rest.partition("=")
            a = known(lhs.strip(), ln)
            if not eq or a == omega:
                raise ParseError("malformed ext entry", line=ln)
            pairs = []
            for part in _split_top(rhs):
                t = parse_type_text(part.strip(), set(atoms), omega)
                fs = list(t.factors)
                if len(fs) != 1 or not isinstance(fs[0], Arrow):
                    raise ParseError(f"ext entry {part.strip()!r} is not a single arrow", line=ln)
                pairs.append((fs[0].src, fs[0].tgt))
            ext[a] = tuple(pairs)
        else:
            raise ParseError(f"unknown directive {head!r}", line=ln)

    if omega is None:
        raise ModelError("model has no 'atoms' line")
    if strict:
        for a, b in combinations(atoms, 2):
            if (a, b) not in meets and (b, a) not in meets:
                raise ModelError(f"missing meet entry for {a} and {b}")
        for a in atoms:
            if a not in ext:
                raise ModelError(f"missing ext entry for {a}")
    m = Model(name or "anonymous", omega, atoms, meets, arrows, {})
    m.ext = {a: tuple((m.norm(s), m.norm(t)) for s, t in ps) for a, ps in ext.items()}
    return m


def load_model(path: str | Path) -> Model:
    return parse_model(Path(path).read_text())


def model_to_text(m: Model) -> str:
    lines = [f"model {m.name}", "atoms " + " ".join((m.omega,) + m.atoms)]
    for a, b in combinations(m.atoms, 2):
        v = m.atom_meet(a, b)
        lines.append(f"meet {a} {b} = {v if v is not None else 'free'}")
    for (a, b), c in sorted(m.arrows.items()):
        lines.append(f"arrow {a} {b} = {c}")
    for a in m.atoms:
        if a in m.ext:
            body = ", ".join(f"({m.show(s)} -> {m.show(t)})" if s.factors
                             else f"(w -> {m.show(t)})" for s, t in m.ext[a])
            lines.append(f"ext {a} = {body}")
    return "\n".join(lines) + "\n"


def z_truncation(k: int) -> str:
    """Numerals 0..k with n = w -> n+1, counted modulo k+1 so that k = w -> 0."""
    nums = [str(i) for i in range(k + 1)]
    lines = [f"model z{k}", "atoms w " + " ".join(nums)]
    lines += [f"meet {a} {b} = free" for a, b in combinations(nums, 2)]
    for i in range(k):
        lines.append(f"arrow w {i + 1} = {i}")
    lines.append(f"arrow w 0 = {k}")
    for i in range(k):
        lines.append(f"ext {i} = (w -> {i + 1})")
    lines.append(f"ext {k} = (w -> 0)")
    return "\n".join(lines) + "\n"


def u_truncation(k: int) -> str:
    """Numerals 0..k with n = n+1 -> n+1, counted modulo k+1 so that k = 0 -> 0."""
    nums = [str(i) for i in range(k + 1)]
    lines = [f"model u{k}", "atoms w " + " ".join(nums)]
    lines += [f"meet {a} {b} = free" for a, b in combinations(nums, 2)]
    for i in range(k):
        lines.append(f"arrow {i + 1} {i + 1} = {i}")
    lines.append(f"arrow 0 0 = {k}")
    for i in range(k):
        lines.append(f"ext {i} = ({i + 1} -> {i + 1})")
    lines.append(f"ext {k} = (0 -> 0)")
    return "\n".join(lines) + "\n"
