"""Text format for knowledge bases and formulas.

One item per line:

    declare rel u/2          # relation declaration (arity >= 0)
    declare fun f/1          # function declaration (constants: arity 0)
    <formula> : <weight>     # weighted item; weight is `u/v`, a decimal
                             # literal, or the token 0
    # comment                # `#` starts a comment anywhere on a line

Formula grammar, precedence low to high: `<->`, `->`, `|`, `&`, `!`.
Atoms are `name(args)`; equality `t1 = t2` and its sugar `t1 != t2`;
`true` / `false` are nullary constants.  `forall v. body` and
`exists v. body` extend maximally to the right.  `&`/`|` associate left,
`->`/`<->` associate right.  Bare identifiers in term position are
variables; integers are domain elements; constants are written `c()`.

Parsing normalizes bound variables to unique names (appending primes), so
downstream substitution and grounding are capture-free by construction.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .logic import (
    FALSE,
    TRUE,
    And,
    Atom,
    DomainElem,
    Eq,
    Exists,
    Forall,
    Formula,
    Func,
    Iff,
    Implies,
    LogicError,
    Not,
    Or,
    Signature,
    Term,
    Var,
    free_variables,
    rename_apart,
    render_formula,
    validate_formula,
)


class ParseError(Exception):
    """Syntax or declaration error, with a character position."""

    def __init__(self, message: str, position: int, line: int | None = None):
        self.position = position
        self.line = line
        where = f"line {line}, offset {position}" if line is not None else f"offset {position}"
        super().__init__(f"{message} (at {where})")


_KEYWORDS = {"forall", "exists", "true", "false", "declare", "rel", "fun"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><->|->|!=|[|&!(),.=:/])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, line: int | None = None) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, line)
        pos = m.end()
        if m.lastgroup in ("ws", "comment"):
            continue
        kind = m.lastgroup
        val = m.group()
        if kind == "ident" and val in _KEYWORDS:
            kind = val
        toks.append((kind, val, m.start()))
    toks.append(("eof", "", len(text)))
    return toks


class _FormulaParser:
    def __init__(self, toks: list[tuple[str, str, int]], sig: Signature, line: int | None):
        self.toks = toks
        self.i = 0
        self.sig = sig
        self.line = line

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def next(self) -> tuple[str, str, int]:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> tuple[str, str, int]:
        t = self.next()
        if t[0] != kind:
            self.fail(f"expected {kind!r}, found {t[1]!r}" if t[1] else f"expected {kind!r}", t[2])
        return t

    def fail(self, msg: str, pos: int):
        raise ParseError(msg, pos, self.line)

    # precedence-climbing, lowest first
    def formula(self) -> Formula:
        return self.iff()

    def iff(self) -> Formula:
        left = self.implies()
        if self.peek()[0] == "op" and self.peek()[1] == "<->":
            self.next()
            return Iff(left, self.iff())
        return left

    def implies(self) -> Formula:
        left = self.disj()
        if self.peek()[0] == "op" and self.peek()[1] == "->":
            self.next()
            return Implies(left, self.implies())
        return left

    def disj(self) -> Formula:
        out = self.conj()
        while self.peek()[0] == "op" and self.peek()[1] == "|":
            self.next()
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "&":
            self.next()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "op" and val == "!":
            self.next()
            return Not(self.unary())
        if kind in ("forall", "exists"):
            self.next()
            vtok = self.expect("ident")
            self.expect_op(".")
            body = self.formula()  # extends maximally right
            return (Forall if kind == "forall" else Exists)(vtok[1], body)
        return self.primary()

    def expect_op(self, op: str):
        t = self.next()
        if t[0] != "op" or t[1] != op:
            self.fail(f"expected {op!r}", t[2])

    def primary(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "op" and val == "(":
            self.next()
            inner = self.formula()
            t = self.next()
            if t[0] != "op" or t[1] != ")":
                self.fail("expected ')'", t[2])
            return inner
        if kind == "true":
            self.next()
            return TRUE
        if kind == "false":
            self.next()
            return FALSE
        if kind in ("ident", "num"):
            term, is_callable = self.term()
            nk, nv, npos = self.peek()
            if nk == "op" and nv in ("=", "!="):
                self.next()
                right, _ = self.term()
                return Eq(term, right) if nv == "=" else Not(Eq(term, right))
            # Not an equality: must be a relation atom.
            if not isinstance(term, Func):
                self.fail("expected a relation atom or an equality", pos)
            if term.name not in self.sig.relations:
                if term.name in self.sig.functions:
                    self.fail(f"{term.name!r} is a function, expected a relation or equality", pos)
                self.fail(f"undeclared symbol {term.name!r}", pos)
            if len(term.args) != self.sig.relations[term.name]:
                self.fail(
                    f"relation {term.name!r} expects {self.sig.relations[term.name]} args,"
                    f" got {len(term.args)}",
                    pos,
                )
            return Atom(term.name, term.args)
        self.fail(f"unexpected token {val!r}" if val else "unexpected end of input", pos)

    def term(self) -> tuple[Term, bool]:
        """Parse a term.  Returns (term, had_parens)."""
        kind, val, pos = self.next()
        if kind == "num":
            if "." in val:
                self.fail("domain elements must be integers", pos)
            return DomainElem(int(val)), False
        if kind != "ident":
            self.fail(f"expected a term, found {val!r}" if val else "expected a term", pos)
        if self.peek()[0] == "op" and self.peek()[1] == "(":
            self.next()
            args: list[Term] = []
            if not (self.peek()[0] == "op" and self.peek()[1] == ")"):
                args.append(self.term()[0])
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.next()
                    args.append(self.term()[0])
            t = self.next()
            if t[0] != "op" or t[1] != ")":
                self.fail("expected ',' or ')'", t[2])
            # Validate immediately when the head is a declared function; the
            # relation case is resolved by the caller.
            if val in self.sig.functions and len(args) != self.sig.functions[val]:
                self.fail(
                    f"function {val!r} expects {self.sig.functions[val]} args, got {len(args)}",
                    pos,
                )
            return Func(val, tuple(args)), True
        return Var(val), False

    def check_funcs(self, f: Formula):
        """Ensure every Func used inside terms is a declared function."""

        def walk_term(t: Term, pos_hint: int):
            if isinstance(t, Func):
                if t.name not in self.sig.functions:
                    self.fail(f"undeclared function {t.name!r}", pos_hint)
                for a in t.args:
                    walk_term(a, pos_hint)

        def walk(g: Formula):
            if isinstance(g, Atom):
                for t in g.args:
                    walk_term(t, 0)
            elif isinstance(g, Eq):
                walk_term(g.left, 0)
                walk_term(g.right, 0)
            elif isinstance(g, Not):
                walk(g.sub)
            elif isinstance(g, (And, Or, Implies, Iff)):
                walk(g.left)
                walk(g.right)
            elif isinstance(g, (Forall, Exists)):
                walk(g.body)

        walk(f)


def parse_formula(text: str, sig: Signature, line: int | None = None) -> Formula:
    """Parse one formula against ``sig``; bound names are normalized."""
    toks = _tokenize(text, line)
    p = _FormulaParser(toks, sig, line)
    f = p.formula()
    k, v, pos = p.peek()
    if k != "eof":
        p.fail(f"trailing input {v!r}", pos)
    p.check_funcs(f)
    f = rename_apart(f)
    try:
        validate_formula(f, sig)
    except LogicError as exc:
        raise ParseError(str(exc), 0, line) from exc
    return f


def parse_weight(text: str, line: int | None = None) -> Fraction:
    s = text.strip()
    if re.fullmatch(r"\d+(\.\d+)?", s) or re.fullmatch(r"\d+\s*/\s*\d+", s):
        try:
            w = Fraction(s.replace(" ", ""))
        except ZeroDivisionError:
            raise ParseError("weight denominator is zero", 0, line) from None
        return w
    raise ParseError(f"bad weight {text.strip()!r}", 0, line)


_DECLARE_RE = re.compile(r"^\s*declare\s+(rel|fun)\s+([A-Za-z_][A-Za-z0-9_']*)\s*/\s*(\d+)\s*$")


def _strip_comment(line: str) -> str:
    idx = line.find("#")
    return line if idx < 0 else line[:idx]


def parse_kb(text: str):
    """Parse a knowledge-base file into a WeightedKB."""
    from .semantics import WeightedKB

    sig = Signature()
    items: list[tuple[Formula, Fraction]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("declare"):
            m = _DECLARE_RE.match(line)
            if m is None:
                raise ParseError("bad declaration", 0, lineno)
            kind, name, arity = m.group(1), m.group(2), int(m.group(3))
            try:
                if kind == "rel":
                    sig.declare_relation(name, arity)
                else:
                    sig.declare_function(name, arity)
            except LogicError as exc:
                raise ParseError(str(exc), 0, lineno) from exc
            continue
        if ":" not in line:
            raise ParseError("expected '<formula> : <weight>'", len(line), lineno)
        ftext, wtext = line.rsplit(":", 1)
        f = parse_formula(ftext, sig, lineno)
        w = parse_weight(wtext, lineno)
        items.append((f, w))
    return WeightedKB(sig, items)


def parse_formula_file(text: str) -> tuple[Formula, Signature]:
    """Parse a file holding declarations and exactly one formula line.

    The formula line may optionally carry a ``: weight`` suffix, which is
    ignored here (the file shape matches KB files for convenience).
    """
    sig = Signature()
    found: Formula | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("declare"):
            m = _DECLARE_RE.match(line)
            if m is None:
                raise ParseError("bad declaration", 0, lineno)
            kind, name, arity = m.group(1), m.group(2), int(m.group(3))
            try:
                if kind == "rel":
                    sig.declare_relation(name, arity)
                else:
                    sig.declare_function(name, arity)
            except LogicError as exc:
                raise ParseError(str(exc), 0, lineno) from exc
            continue
        if found is not None:
            raise ParseError("expected exactly one formula line", 0, lineno)
        if ":" in line:
            line = line.rsplit(":", 1)[0]
        found = parse_formula(line, sig, lineno)
    if found is None:
        raise ParseError("no formula found", 0, None)
    return found, sig


def render_weight(w: Fraction) -> str:
    if w.denominator == 1:
        return str(w.numerator)
    return f"{w.numerator}/{w.denominator}"


def render_kb(kb, origins=None, header: str | None = None) -> str:
    """Render a WeightedKB in the line-oriented text format.

    ``origins`` optionally maps item index to a short comment emitted after
    the weight.  Output is deterministic and re-parses to an equal KB.
    """
    lines: list[str] = []
    if header:
        for h in header.splitlines():
            lines.append(f"# {h}")
    for name, arity in kb.signature.relations.items():
        lines.append(f"declare rel {name}/{arity}")
    for name, arity in kb.signature.functions.items():
        lines.append(f"declare fun {name}/{arity}")
    for i, item in enumerate(kb.items):
        tail = ""
        if origins is not None and origins[i]:
            tail = f"  # {origins[i]}"
        lines.append(f"{render_formula(item.formula)} : {render_weight(item.weight)}{tail}")
    return "\n".join(lines) + "\n"


def render_formula_file(formula: Formula, sig: Signature) -> str:
    lines = [f"declare rel {name}/{arity}" for name, arity in sig.relations.items()]
    lines += [f"declare fun {name}/{arity}" for name, arity in sig.functions.items()]
    lines.append(render_formula(formula))
    return "\n".join(lines) + "\n"


__all__ = [
    "ParseError",
    "parse_formula",
    "parse_kb",
    "parse_formula_file",
    "parse_weight",
    "render_kb",
    "render_weight",
    "render_formula_file",
    "free_variables",
    "render_formula",
]
