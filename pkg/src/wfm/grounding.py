"""Grounding of weighted knowledge bases over a finite domain.

Grounding maps each first-order item to one propositional formula per tuple
of its free variables, expanding quantifiers (forall -> conjunction over the
domain, exists -> disjunction) and folding equalities between domain
elements.  Zero-weight items become hard constraints stored in must-hold
form: an interpretation survives a zero-weight item exactly when no
grounding of it is satisfied, so the stored constraint is the negated
grounding, with conjunctions split and trivially-true constraints dropped.

Ground formulas are hash-consed nodes over atom indices, so structural
equality is pointer equality and restriction results can be memoized.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Mapping

from .logic import (
    And,
    Atom,
    DomainElem,
    Eq,
    Exists,
    FalseF,
    Forall,
    Formula,
    Func,
    Iff,
    Implies,
    Not,
    Or,
    Signature,
    TrueF,
    Var,
    free_variables,
)

if TYPE_CHECKING:
    from .semantics import WeightedKB


class GroundingError(Exception):
    pass


class CapacityError(Exception):
    """Instance exceeds a configured size cap."""


MAX_GROUNDINGS = 2_000_000


def count_ground_atoms(sig: Signature, n: int) -> int:
    """Number of ground atoms over domain {1..n}: sum of n**arity."""
    return sum(n ** arity for arity in sig.relations.values())


class AtomTable:
    """Deterministic indexing of every ground atom over domain {1..n}.

    Relations appear in declaration order; argument tuples in lexicographic
    order over {1..n}.
    """

    def __init__(self, sig: Signature, n: int):
        if n < 1:
            raise GroundingError("domain size must be >= 1")
        self.sig = sig
        self.n = n
        self.atoms: list[tuple[str, tuple[int, ...]]] = []
        self.index: dict[tuple[str, tuple[int, ...]], int] = {}
        for rel, arity in sig.relations.items():
            for args in itertools.product(range(1, n + 1), repeat=arity):
                self.index[(rel, args)] = len(self.atoms)
                self.atoms.append((rel, args))

    def __len__(self) -> int:
        return len(self.atoms)


class GNode:
    """Hash-consed ground propositional formula node.

    op is one of ``T F V N A O I`` (true, false, variable, negation,
    conjunction, disjunction, biconditional).  ``varmask`` has bit i set when
    atom i occurs below this node.
    """

    __slots__ = ("op", "kids", "var", "id", "varmask")

    def __init__(self, op: str, kids: tuple["GNode", ...], var: int, node_id: int, varmask: int):
        self.op = op
        self.kids = kids
        self.var = var
        self.id = node_id
        self.varmask = varmask

    def __repr__(self) -> str:
        if self.op == "V":
            return f"v{self.var}"
        if self.op in ("T", "F"):
            return self.op
        if self.op == "N":
            return f"!{self.kids[0]!r}"
        sep = {"A": " & ", "O": " | ", "I": " <-> "}[self.op]
        return "(" + sep.join(repr(k) for k in self.kids) + ")"


class NodePool:
    """Interning pool for GNodes plus a memoized single-variable restrict."""

    def __init__(self) -> None:
        self._memo: dict[tuple, GNode] = {}
        self._restrict_memo: dict[tuple[int, int, bool], GNode] = {}
        self._next_id = 0
        self.TRUE = self._make("T", (), -1, 0)
        self.FALSE = self._make("F", (), -1, 0)

    def _make(self, op: str, kids: tuple[GNode, ...], var: int, varmask: int) -> GNode:
        key = (op, var, tuple(k.id for k in kids))
        node = self._memo.get(key)
        if node is None:
            node = GNode(op, kids, var, self._next_id, varmask)
            self._next_id += 1
            self._memo[key] = node
        return node

    def atom(self, i: int) -> GNode:
        return self._make("V", (), i, 1 << i)

    def neg(self, f: GNode) -> GNode:
        if f.op == "T":
            return self.FALSE
        if f.op == "F":
            return self.TRUE
        if f.op == "N":
            return f.kids[0]
        return self._make("N", (f,), -1, f.varmask)

    def conj(self, kids: Iterable[GNode]) -> GNode:
        flat: list[GNode] = []
        seen: set[int] = set()
        for k in kids:
            if k.op == "T":
                continue
            if k.op == "F":
                return self.FALSE
            sub = k.kids if k.op == "A" else (k,)
            for s in sub:
                if s.id not in seen:
                    seen.add(s.id)
                    flat.append(s)
        for s in flat:
            if self.neg(s).id in seen:
                return self.FALSE
        if not flat:
            return self.TRUE
        if len(flat) == 1:
            return flat[0]
        mask = 0
        for s in flat:
            mask |= s.varmask
        return self._make("A", tuple(flat), -1, mask)

    def disj(self, kids: Iterable[GNode]) -> GNode:
        flat: list[GNode] = []
        seen: set[int] = set()
        for k in kids:
            if k.op == "F":
                continue
            if k.op == "T":
                return self.TRUE
            sub = k.kids if k.op == "O" else (k,)
            for s in sub:
                if s.id not in seen:
                    seen.add(s.id)
                    flat.append(s)
        for s in flat:
            if self.neg(s).id in seen:
                return self.TRUE
        if not flat:
            return self.FALSE
        if len(flat) == 1:
            return flat[0]
        mask = 0
        for s in flat:
            mask |= s.varmask
        return self._make("O", tuple(flat), -1, mask)

    def imp(self, a: GNode, b: GNode) -> GNode:
        return self.disj((self.neg(a), b))

    def iff(self, a: GNode, b: GNode) -> GNode:
        if a.op == "T":
            return b
        if b.op == "T":
            return a
        if a.op == "F":
            return self.neg(b)
        if b.op == "F":
            return self.neg(a)
        if a.id == b.id:
            return self.TRUE
        if self.neg(a).id == b.id:
            return self.FALSE
        if a.id > b.id:  # canonical operand order
            a, b = b, a
        return self._make("I", (a, b), -1, a.varmask | b.varmask)

    def restrict(self, f: GNode, var: int, val: bool) -> GNode:
        if not (f.varmask >> var) & 1:
            return f
        key = (f.id, var, val)
        out = self._restrict_memo.get(key)
        if out is not None:
            return out
        if f.op == "V":
            out = self.TRUE if val else self.FALSE
        elif f.op == "N":
            out = self.neg(self.restrict(f.kids[0], var, val))
        elif f.op == "A":
            out = self.conj(self.restrict(k, var, val) for k in f.kids)
        elif f.op == "O":
            out = self.disj(self.restrict(k, var, val) for k in f.kids)
        else:  # I
            out = self.iff(self.restrict(f.kids[0], var, val), self.restrict(f.kids[1], var, val))
        self._restrict_memo[key] = out
        return out


def ground_formula(
    pool: NodePool,
    table: AtomTable,
    f: Formula,
    env: dict[str, int] | None = None,
) -> GNode:
    """Ground a function-free formula under ``env`` over domain {1..n}."""
    if env is None:
        env = {}
    n = table.n

    def term_value(t) -> int:
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise GroundingError(f"unbound variable {t.name!r}") from None
        if isinstance(t, DomainElem):
            if t.value > n:
                raise GroundingError(f"domain element {t.value} exceeds domain size {n}")
            return t.value
        if isinstance(t, Func):
            raise GroundingError(
                f"function symbol {t.name!r} encountered; eliminate functions first"
            )
        raise GroundingError(f"not a term: {t!r}")

    def walk(g: Formula) -> GNode:
        if isinstance(g, Atom):
            args = tuple(term_value(t) for t in g.args)
            return pool.atom(table.index[(g.rel, args)])
        if isinstance(g, Eq):
            return pool.TRUE if term_value(g.left) == term_value(g.right) else pool.FALSE
        if isinstance(g, Not):
            return pool.neg(walk(g.sub))
        if isinstance(g, And):
            return pool.conj((walk(g.left), walk(g.right)))
        if isinstance(g, Or):
            return pool.disj((walk(g.left), walk(g.right)))
        if isinstance(g, Implies):
            return pool.imp(walk(g.left), walk(g.right))
        if isinstance(g, Iff):
            return pool.iff(walk(g.left), walk(g.right))
        if isinstance(g, TrueF):
            return pool.TRUE
        if isinstance(g, FalseF):
            return pool.FALSE
        if isinstance(g, (Forall, Exists)):
            parts = []
            saved = env.get(g.var)
            for d in range(1, n + 1):
                env[g.var] = d
                parts.append(walk(g.body))
            if saved is None:
                del env[g.var]
            else:
                env[g.var] = saved
            return pool.conj(parts) if isinstance(g, Forall) else pool.disj(parts)
        raise GroundingError(f"not a formula: {g!r}")

    return walk(f)


def split_must_hold(node: GNode, out: list[GNode]) -> None:
    """Split a must-hold constraint into conjunct-level constraints."""
    if node.op == "T":
        return
    if node.op == "A":
        for k in node.kids:
            split_must_hold(k, out)
    else:
        out.append(node)


class GroundKB:
    """Propositional image of a weighted KB over a fixed domain size.

    ``hard`` holds must-hold constraints (from zero-weight items); ``soft``
    holds (formula, weight) pairs, one per grounding of each positive-weight
    item.
    """

    def __init__(
        self,
        pool: NodePool,
        table: AtomTable,
        hard: tuple[GNode, ...],
        soft: tuple[tuple[GNode, Fraction], ...],
    ):
        self.pool = pool
        self.table = table
        self.hard = hard
        self.soft = soft

    @property
    def num_atoms(self) -> int:
        return len(self.table)


def ground(kb: "WeightedKB", n: int, cap_atoms: int | None = None) -> GroundKB:
    """Ground ``kb`` over domain {1..n}; see module docstring for semantics."""
    sig = kb.signature
    natoms = count_ground_atoms(sig, n)
    if cap_atoms is not None and natoms > cap_atoms:
        raise CapacityError(f"{natoms} ground atoms exceed cap {cap_atoms}")
    total = 0
    for item in kb.items:
        total += n ** len(free_variables(item.formula))
    if total > MAX_GROUNDINGS:
        raise CapacityError(f"{total} groundings exceed cap {MAX_GROUNDINGS}")

    pool = NodePool()
    table = AtomTable(sig, n)
    hard: list[GNode] = []
    soft: list[tuple[GNode, Fraction]] = []
    for item in kb.items:
        fv = free_variables(item.formula)
        for values in itertools.product(range(1, n + 1), repeat=len(fv)):
            env = dict(zip(fv, values))
            g = ground_formula(pool, table, item.formula, env)
            if item.weight == 0:
                split_must_hold(pool.neg(g), hard)
            else:
                soft.append((g, item.weight))
    return GroundKB(pool, table, tuple(hard), tuple(soft))


def ground_sentence(gkb: GroundKB, sentence: Formula) -> GNode:
    """Ground an extra sentence against an existing GroundKB's atom table."""
    return ground_formula(gkb.pool, gkb.table, sentence, {})
