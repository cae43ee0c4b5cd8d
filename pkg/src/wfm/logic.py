"""First-order syntax: terms, formulas, signatures, and structural operations.

Terms are variables, function applications (constants are nullary function
applications), or literal domain elements (integers, used in ground queries
such as ``R(1)``).  Formulas are the usual connectives plus equality and
single-variable quantifiers.  All nodes are immutable and hashable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping


class LogicError(Exception):
    """Malformed formula: arity clash, undeclared symbol, or bad structure."""


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Func(Term):
    """Function application; a constant is a ``Func`` with no arguments."""

    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class DomainElem(Term):
    """A literal domain element (1-based), for ground atoms like ``R(1)``."""

    value: int


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Atom(Formula):
    rel: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


TRUE = TrueF()
FALSE = FalseF()

_BINARY = (And, Or, Implies, Iff)
_QUANT = (Forall, Exists)


def and_all(parts: Iterable[Formula]) -> Formula:
    """Left-associated conjunction; empty input yields TRUE."""
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def or_all(parts: Iterable[Formula]) -> Formula:
    """Left-associated disjunction; empty input yields FALSE."""
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def neq(left: Term, right: Term) -> Formula:
    return Not(Eq(left, right))


def forall_all(names: Iterable[str], body: Formula) -> Formula:
    out = body
    for v in reversed(list(names)):
        out = Forall(v, out)
    return out


def exists_all(names: Iterable[str], body: Formula) -> Formula:
    out = body
    for v in reversed(list(names)):
        out = Exists(v, out)
    return out


# ---------------------------------------------------------------------------
# Signature


class Signature:
    """Declared relation and function symbols with arities.

    Names are unique across both kinds.  A per-signature counter backs
    deterministic fresh-symbol generation, so repeated runs of the same
    pipeline produce identical names.
    """

    def __init__(self) -> None:
        self.relations: dict[str, int] = {}
        self.functions: dict[str, int] = {}
        self._fresh = 0

    def declare_relation(self, name: str, arity: int) -> None:
        self._check_new(name, arity)
        self.relations[name] = arity

    def declare_function(self, name: str, arity: int) -> None:
        self._check_new(name, arity)
        self.functions[name] = arity

    def _check_new(self, name: str, arity: int) -> None:
        if not name:
            raise LogicError("empty symbol name")
        if arity < 0:
            raise LogicError(f"negative arity for {name!r}")
        if name in self.relations or name in self.functions:
            raise LogicError(f"symbol {name!r} already declared")

    def is_declared(self, name: str) -> bool:
        return name in self.relations or name in self.functions

    def copy(self) -> Signature:
        out = Signature()
        out.relations = dict(self.relations)
        out.functions = dict(self.functions)
        out._fresh = self._fresh
        return out

    def fresh_symbol(self, base: str) -> str:
        """Return ``base`` if unused, else ``base`` with a counter suffix."""
        if not self.is_declared(base):
            return base
        while True:
            self._fresh += 1
            cand = f"{base}{self._fresh}"
            if not self.is_declared(cand):
                return cand

    def fresh_numbered(self, base: str) -> str:
        """Always counter-suffixed fresh name (``_sk1``, ``_sk2``, ...)."""
        while True:
            self._fresh += 1
            cand = f"{base}{self._fresh}"
            if not self.is_declared(cand):
                return cand

    def __repr__(self) -> str:
        rels = ", ".join(f"{r}/{k}" for r, k in self.relations.items())
        funs = ", ".join(f"{f}/{k}" for f, k in self.functions.items())
        return f"Signature(rels=[{rels}], funs=[{funs}])"


def validate_formula(f: Formula, sig: Signature) -> None:
    """Raise LogicError unless all symbols are declared with matching arity."""
    if isinstance(f, Atom):
        if f.rel not in sig.relations:
            raise LogicError(f"undeclared relation {f.rel!r}")
        if len(f.args) != sig.relations[f.rel]:
            raise LogicError(
                f"relation {f.rel!r} expects {sig.relations[f.rel]} args, got {len(f.args)}"
            )
        for t in f.args:
            _validate_term(t, sig)
    elif isinstance(f, Eq):
        _validate_term(f.left, sig)
        _validate_term(f.right, sig)
    elif isinstance(f, Not):
        validate_formula(f.sub, sig)
    elif isinstance(f, _BINARY):
        validate_formula(f.left, sig)
        validate_formula(f.right, sig)
    elif isinstance(f, _QUANT):
        if not f.var:
            raise LogicError("empty quantifier variable name")
        validate_formula(f.body, sig)
    elif isinstance(f, (TrueF, FalseF)):
        pass
    else:
        raise LogicError(f"not a formula node: {f!r}")


def _validate_term(t: Term, sig: Signature) -> None:
    if isinstance(t, Var):
        if not t.name:
            raise LogicError("empty variable name")
    elif isinstance(t, Func):
        if t.name not in sig.functions:
            raise LogicError(f"undeclared function {t.name!r}")
        if len(t.args) != sig.functions[t.name]:
            raise LogicError(
                f"function {t.name!r} expects {sig.functions[t.name]} args, got {len(t.args)}"
            )
        for a in t.args:
            _validate_term(a, sig)
    elif isinstance(t, DomainElem):
        if t.value < 1:
            raise LogicError(f"domain elements are 1-based, got {t.value}")
    else:
        raise LogicError(f"not a term node: {t!r}")


# ---------------------------------------------------------------------------
# Structural queries


def term_vars(t: Term, out: list[str] | None = None, seen: set[str] | None = None) -> list[str]:
    """Variable names in a term, first-occurrence order."""
    if out is None:
        out, seen = [], set()
    if isinstance(t, Var):
        if t.name not in seen:
            seen.add(t.name)
            out.append(t.name)
    elif isinstance(t, Func):
        for a in t.args:
            term_vars(a, out, seen)
    return out


def free_variables(f: Formula) -> list[str]:
    """Free variable names of ``f`` in first-occurrence order."""
    out: list[str] = []
    seen: set[str] = set()

    def walk(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, Atom):
            for t in g.args:
                for v in term_vars(t):
                    if v not in bound and v not in seen:
                        seen.add(v)
                        out.append(v)
        elif isinstance(g, Eq):
            for t in (g.left, g.right):
                for v in term_vars(t):
                    if v not in bound and v not in seen:
                        seen.add(v)
                        out.append(v)
        elif isinstance(g, Not):
            walk(g.sub, bound)
        elif isinstance(g, _BINARY):
            walk(g.left, bound)
            walk(g.right, bound)
        elif isinstance(g, _QUANT):
            walk(g.body, bound | {g.var})

    walk(f, frozenset())
    return out


def all_variables(f: Formula) -> set[str]:
    """Every variable name occurring in ``f``, free or bound."""
    out: set[str] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            for t in g.args:
                out.update(term_vars(t))
        elif isinstance(g, Eq):
            out.update(term_vars(g.left))
            out.update(term_vars(g.right))
        elif isinstance(g, Not):
            walk(g.sub)
        elif isinstance(g, _BINARY):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, _QUANT):
            out.add(g.var)
            walk(g.body)

    walk(f)
    return out


def is_sentence(f: Formula) -> bool:
    return not free_variables(f)


def _term_depth(t: Term) -> int:
    if isinstance(t, Func):
        return 1 + max((_term_depth(a) for a in t.args), default=0)
    return 0


def term_depth(f: Formula) -> int:
    """Maximal nesting depth of function symbols over all terms of ``f``.

    A bare variable has depth 0, ``f()`` and ``f(x)`` depth 1, ``f(g(x))``
    depth 2.  Function-free formulas have depth 0.
    """
    if isinstance(f, Atom):
        return max((_term_depth(t) for t in f.args), default=0)
    if isinstance(f, Eq):
        return max(_term_depth(f.left), _term_depth(f.right))
    if isinstance(f, Not):
        return term_depth(f.sub)
    if isinstance(f, _BINARY):
        return max(term_depth(f.left), term_depth(f.right))
    if isinstance(f, _QUANT):
        return term_depth(f.body)
    return 0


# ---------------------------------------------------------------------------
# Fragment classification


class Fragment(enum.IntEnum):
    """Syntactic fragments, ordered most restrictive first.

    ZERO_RFOL_NOEQ: quantifier-, function- and equality-free relational logic.
    ZERO_RFOL: quantifier- and function-free, equality allowed.
    RFOL: function- and constant-free, quantifiers and equality allowed.
    FOL: anything else (contains function or constant symbols).
    """

    ZERO_RFOL_NOEQ = 0
    ZERO_RFOL = 1
    RFOL = 2
    FOL = 3


def classify_fragment(f: Formula) -> Fragment:
    """Most restrictive fragment containing ``f``."""
    has_func = False
    has_quant = False
    has_eq = False

    def walk(g: Formula) -> None:
        nonlocal has_func, has_quant, has_eq
        if isinstance(g, Atom):
            if any(_term_depth(t) > 0 for t in g.args):
                has_func = True
        elif isinstance(g, Eq):
            has_eq = True
            if _term_depth(g.left) > 0 or _term_depth(g.right) > 0:
                has_func = True
        elif isinstance(g, Not):
            walk(g.sub)
        elif isinstance(g, _BINARY):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, _QUANT):
            has_quant = True
            walk(g.body)

    walk(f)
    if has_func:
        return Fragment.FOL
    if has_quant:
        return Fragment.RFOL
    if has_eq:
        return Fragment.ZERO_RFOL
    return Fragment.ZERO_RFOL_NOEQ


# ---------------------------------------------------------------------------
# Substitution and renaming


def _primed(name: str, used: set[str]) -> str:
    while name in used:
        name += "'"
    return name


def rename_apart(f: Formula, reserved: Iterable[str] = ()) -> Formula:
    """Rename binders so every bound variable name is globally unique.

    After renaming, no binder shadows a free variable, another binder, or a
    name in ``reserved``.  Renaming appends primes and is deterministic.
    """
    used = set(reserved) | set(free_variables(f))

    def walk_term(t: Term, env: dict[str, str]) -> Term:
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, Func):
            return Func(t.name, tuple(walk_term(a, env) for a in t.args))
        return t

    def walk(g: Formula, env: dict[str, str]) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.rel, tuple(walk_term(t, env) for t in g.args))
        if isinstance(g, Eq):
            return Eq(walk_term(g.left, env), walk_term(g.right, env))
        if isinstance(g, Not):
            return Not(walk(g.sub, env))
        if isinstance(g, _BINARY):
            return type(g)(walk(g.left, env), walk(g.right, env))
        if isinstance(g, _QUANT):
            name = _primed(g.var, used) if g.var in used else g.var
            used.add(name)
            env2 = dict(env)
            env2[g.var] = name
            return type(g)(name, walk(g.body, env2))
        return g

    return walk(f, {})


def substitute(f: Formula, binding: Mapping[str, Term]) -> Formula:
    """Simultaneous capture-avoiding substitution of free variables."""
    if not binding:
        return f

    def sub_term(t: Term, bnd: Mapping[str, Term]) -> Term:
        if isinstance(t, Var):
            return bnd.get(t.name, t)
        if isinstance(t, Func):
            return Func(t.name, tuple(sub_term(a, bnd) for a in t.args))
        return t

    def walk(g: Formula, bnd: Mapping[str, Term]) -> Formula:
        if not bnd:
            return g
        if isinstance(g, Atom):
            return Atom(g.rel, tuple(sub_term(t, bnd) for t in g.args))
        if isinstance(g, Eq):
            return Eq(sub_term(g.left, bnd), sub_term(g.right, bnd))
        if isinstance(g, Not):
            return Not(walk(g.sub, bnd))
        if isinstance(g, _BINARY):
            return type(g)(walk(g.left, bnd), walk(g.right, bnd))
        if isinstance(g, _QUANT):
            bnd2 = {k: t for k, t in bnd.items() if k != g.var}
            if not bnd2:
                return g
            value_vars: set[str] = set()
            for t in bnd2.values():
                value_vars.update(term_vars(t))
            if g.var in value_vars:
                # Binder would capture a substituted variable: rename it.
                avoid = value_vars | set(free_variables(g.body)) | set(bnd2) | {g.var}
                fresh = _primed(g.var, avoid)
                bnd3 = dict(bnd2)
                bnd3[g.var] = Var(fresh)
                return type(g)(fresh, walk(g.body, bnd3))
            return type(g)(g.var, walk(g.body, bnd2))
        return g

    return walk(f, dict(binding))


def replace_term(f: Formula, target: Term, replacement: Term) -> Formula:
    """Replace every occurrence of ``target`` (as a subterm) inside ``f``."""

    def rt(t: Term) -> Term:
        if t == target:
            return replacement
        if isinstance(t, Func):
            return Func(t.name, tuple(rt(a) for a in t.args))
        return t

    def walk(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.rel, tuple(rt(t) for t in g.args))
        if isinstance(g, Eq):
            return Eq(rt(g.left), rt(g.right))
        if isinstance(g, Not):
            return Not(walk(g.sub))
        if isinstance(g, _BINARY):
            return type(g)(walk(g.left), walk(g.right))
        if isinstance(g, _QUANT):
            return type(g)(g.var, walk(g.body))
        return g

    return walk(f)


# ---------------------------------------------------------------------------
# Rendering

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_SYM = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Func):
        return f"{t.name}({','.join(render_term(a) for a in t.args)})"
    if isinstance(t, DomainElem):
        return str(t.value)
    raise LogicError(f"not a term node: {t!r}")


def render_formula(f: Formula) -> str:
    """Concrete-syntax rendering; re-parses to the identical AST."""
    return _render(f, 0, True)


def _render(f: Formula, ctx: int, rightmost: bool) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f"{f.rel}({','.join(render_term(t) for t in f.args)})"
    if isinstance(f, Eq):
        return f"{render_term(f.left)} = {render_term(f.right)}"
    if isinstance(f, Not):
        if isinstance(f.sub, Eq):
            return f"{render_term(f.sub.left)} != {render_term(f.sub.right)}"
        return "!" + _render(f.sub, 5, rightmost)
    if isinstance(f, _BINARY):
        prec = _PREC[type(f)]
        if type(f) in (And, Or):  # left-associative
            left = _render(f.left, prec, False)
            right = _render(f.right, prec + 1, rightmost)
        else:  # right-associative
            left = _render(f.left, prec + 1, False)
            right = _render(f.right, prec, rightmost)
        s = f"{left} {_SYM[type(f)]} {right}"
        return f"({s})" if prec < ctx else s
    if isinstance(f, _QUANT):
        kw = "forall" if isinstance(f, Forall) else "exists"
        s = f"{kw} {f.var}. " + _render(f.body, 0, True)
        # A quantifier extends maximally right, so it only renders bare when
        # nothing follows it in the output.
        return s if rightmost else f"({s})"
    raise LogicError(f"not a formula node: {f!r}")
