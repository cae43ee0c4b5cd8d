"""Exact semantics of weighted feature models over finite domains.

A knowledge base is an ordered list of (formula, nonnegative rational
weight) pairs over a relational signature.  An interpretation over domain
{1..n} assigns one truth bit to every ground atom.  Its weight is the
product over items of weight raised to the number of satisfying tuples of
the item's free variables, with 0**0 = 1, so zero-weight items act as hard
constraints: they zero out exactly the interpretations with at least one
satisfying tuple.  The partition function Z sums interpretation weights;
probabilities are exact rationals, never floats.

Two backends compute the same exact values: ``enum`` evaluates formulas
Tarski-style on every interpretation, ``wmc`` grounds the KB and runs the
component-caching counter.
"""

from __future__ import annotations

import decimal
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Mapping, Sequence

from .grounding import (
    AtomTable,
    CapacityError,
    GroundingError,
    GroundKB,
    count_ground_atoms,
    ground,
    ground_sentence,
    split_must_hold,
)
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
    Term,
    TrueF,
    Var,
    free_variables,
    validate_formula,
)
from .wmc import wmc_count

Backend = Literal["enum", "wmc", "auto"]

ENUM_ATOM_CAP = 26
WMC_ATOM_CAP = 64
_AUTO_ENUM_LIMIT = 14


class EvaluationError(Exception):
    pass


class UndefinedDistributionError(Exception):
    """Z = 0: the knowledge base admits no interpretation of nonzero weight."""


class ZeroProbabilityEvidenceError(Exception):
    pass


# ---------------------------------------------------------------------------
# Knowledge bases


@dataclass(frozen=True)
class WeightedItem:
    formula: Formula
    weight: Fraction


class WeightedKB:
    """Ordered weighted formulas over a shared signature."""

    def __init__(self, signature: Signature, items: Iterable):
        self.signature = signature
        norm: list[WeightedItem] = []
        for entry in items:
            if isinstance(entry, WeightedItem):
                f, w = entry.formula, entry.weight
            else:
                f, w = entry
            w = Fraction(w)
            if w < 0:
                raise ValueError(f"negative weight {w} on {f!r}")
            validate_formula(f, signature)
            norm.append(WeightedItem(f, w))
        self.items: tuple[WeightedItem, ...] = tuple(norm)

    def extended(self, formula: Formula, weight) -> WeightedKB:
        return WeightedKB(self.signature, list(self.items) + [(formula, weight)])

    def __len__(self) -> int:
        return len(self.items)

    def __repr__(self) -> str:
        return f"WeightedKB({len(self.items)} items, {self.signature!r})"


# ---------------------------------------------------------------------------
# Interpretations and evaluation


@dataclass(frozen=True)
class Interpretation:
    """Domain size plus one truth bit per ground atom."""

    table: AtomTable
    bits: int

    @property
    def n(self) -> int:
        return self.table.n

    def holds(self, rel: str, args: tuple[int, ...]) -> bool:
        return (self.bits >> self.table.index[(rel, args)]) & 1 == 1

    @classmethod
    def from_atoms(cls, table: AtomTable, atoms: Iterable[tuple]) -> Interpretation:
        bits = 0
        for rel, args in atoms:
            bits |= 1 << table.index[(rel, tuple(args))]
        return cls(table, bits)

    def true_atoms(self) -> list[tuple[str, tuple[int, ...]]]:
        return [a for i, a in enumerate(self.table.atoms) if (self.bits >> i) & 1]


def _term_value(t: Term, asg: dict[str, int], n: int) -> int:
    if isinstance(t, Var):
        try:
            return asg[t.name]
        except KeyError:
            raise EvaluationError(f"unbound variable {t.name!r}") from None
    if isinstance(t, DomainElem):
        if t.value > n:
            raise EvaluationError(f"domain element {t.value} exceeds domain size {n}")
        return t.value
    raise EvaluationError(f"function symbol encountered in {t!r}; eliminate functions first")


def evaluate(itp: Interpretation, f: Formula, asg: Mapping[str, int] | None = None) -> bool:
    """Tarskian truth of a function-free formula under an assignment."""
    env = dict(asg) if asg else {}
    return _eval(itp, f, env)


def _eval(itp: Interpretation, f: Formula, asg: dict[str, int]) -> bool:
    t = type(f)
    if t is Atom:
        n = itp.table.n
        return (
            itp.bits >> itp.table.index[(f.rel, tuple(_term_value(a, asg, n) for a in f.args))]
        ) & 1 == 1
    if t is Not:
        return not _eval(itp, f.sub, asg)
    if t is And:
        return _eval(itp, f.left, asg) and _eval(itp, f.right, asg)
    if t is Or:
        return _eval(itp, f.left, asg) or _eval(itp, f.right, asg)
    if t is Implies:
        return (not _eval(itp, f.left, asg)) or _eval(itp, f.right, asg)
    if t is Iff:
        return _eval(itp, f.left, asg) == _eval(itp, f.right, asg)
    if t is Eq:
        n = itp.table.n
        return _term_value(f.left, asg, n) == _term_value(f.right, asg, n)
    if t is Forall:
        saved = asg.get(f.var)
        for d in range(1, itp.table.n + 1):
            asg[f.var] = d
            if not _eval(itp, f.body, asg):
                _restore(asg, f.var, saved)
                return False
        _restore(asg, f.var, saved)
        return True
    if t is Exists:
        saved = asg.get(f.var)
        for d in range(1, itp.table.n + 1):
            asg[f.var] = d
            if _eval(itp, f.body, asg):
                _restore(asg, f.var, saved)
                return True
        _restore(asg, f.var, saved)
        return False
    if t is TrueF:
        return True
    if t is FalseF:
        return False
    raise EvaluationError(f"not a formula: {f!r}")


def _restore(asg: dict[str, int], var: str, saved: int | None) -> None:
    if saved is None:
        del asg[var]
    else:
        asg[var] = saved


def count_satisfying(itp: Interpretation, f: Formula) -> int:
    """Number of tuples over the item's free variables satisfied by ``itp``.

    Sentences have one (empty) tuple, so the count is 1 or 0.
    """
    fv = free_variables(f)
    n = itp.table.n
    count = 0
    asg: dict[str, int] = {}
    for values in itertools.product(range(1, n + 1), repeat=len(fv)):
        asg.update(zip(fv, values))
        if _eval(itp, f, asg):
            count += 1
    return count


def _exists_satisfying(itp: Interpretation, f: Formula, fv: Sequence[str]) -> bool:
    n = itp.table.n
    asg: dict[str, int] = {}
    for values in itertools.product(range(1, n + 1), repeat=len(fv)):
        asg.update(zip(fv, values))
        if _eval(itp, f, asg):
            return True
    return False


def interpretation_weight(kb: WeightedKB, itp: Interpretation) -> Fraction:
    """Product over items of weight ** (number of satisfying tuples), 0**0 = 1."""
    w = Fraction(1)
    for item in kb.items:
        c = count_satisfying(itp, item.formula)
        if c:
            if item.weight == 0:
                return Fraction(0)
            w *= item.weight ** c
    return w


# ---------------------------------------------------------------------------
# Partition function and probabilities


def _resolve_backend(backend: Backend, natoms: int) -> str:
    if backend == "auto":
        return "enum" if natoms <= _AUTO_ENUM_LIMIT else "wmc"
    if backend not in ("enum", "wmc"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def _check_cap(backend: str, natoms: int, cap_atoms: int | None) -> None:
    cap = cap_atoms if cap_atoms is not None else (ENUM_ATOM_CAP if backend == "enum" else WMC_ATOM_CAP)
    if natoms > cap:
        raise CapacityError(f"{natoms} ground atoms exceed {backend} cap {cap}")


def _enum_scan(
    kb: WeightedKB, n: int, queries: Sequence[Formula] = ()
) -> tuple[Fraction, list[Fraction]]:
    """One pass over all interpretations: Z plus one weight sum per query."""
    table = AtomTable(kb.signature, n)
    hard = [(it.formula, free_variables(it.formula)) for it in kb.items if it.weight == 0]
    soft = [
        (it.formula, free_variables(it.formula), it.weight)
        for it in kb.items
        if it.weight != 0 and it.weight != 1
    ]
    total = Fraction(0)
    qtotals = [Fraction(0) for _ in queries]
    for bits in range(1 << len(table)):
        itp = Interpretation(table, bits)
        if any(_exists_satisfying(itp, f, fv) for f, fv in hard):
            continue
        w = Fraction(1)
        for f, fv, wt in soft:
            c = count_satisfying(itp, f)
            if c:
                w *= wt ** c
        total += w
        for qi, q in enumerate(queries):
            if _eval(itp, q, {}):
                qtotals[qi] += w
    return total, qtotals


def partition_function(
    kb: WeightedKB, n: int, backend: Backend = "auto", cap_atoms: int | None = None
) -> Fraction:
    """Z: the sum of interpretation weights over all interpretations."""
    z, _ = query_weights(kb, n, (), backend, cap_atoms)
    return z


def query_weights(
    kb: WeightedKB,
    n: int,
    queries: Formula | Sequence[Formula],
    backend: Backend = "auto",
    cap_atoms: int | None = None,
) -> tuple[Fraction, list[Fraction]]:
    """Z together with the total weight of interpretations satisfying each query."""
    if isinstance(queries, Formula):
        queries = (queries,)
    for q in queries:
        if free_variables(q):
            raise EvaluationError(f"query must be a sentence, has free {free_variables(q)}")
        validate_formula(q, kb.signature)
    natoms = count_ground_atoms(kb.signature, n)
    chosen = _resolve_backend(backend, natoms)
    _check_cap(chosen, natoms, cap_atoms)
    if chosen == "enum":
        return _enum_scan(kb, n, queries)
    gkb = ground(kb, n)
    z = wmc_count(gkb)
    nums = []
    for q in queries:
        extra = list(gkb.hard)
        split_must_hold(ground_sentence(gkb, q), extra)
        restricted = GroundKB(gkb.pool, gkb.table, tuple(extra), gkb.soft)
        nums.append(wmc_count(restricted))
    return z, nums


@dataclass(frozen=True)
class Probability:
    """Exact rational probability with a fixed-precision decimal rendering."""

    value: Fraction

    def decimal(self, digits: int = 12) -> str:
        return decimal_str(self.value, digits)

    def __str__(self) -> str:
        if self.value.denominator == 1:
            return str(self.value.numerator)
        return f"{self.value.numerator}/{self.value.denominator} ≈ {self.decimal()}"


def decimal_str(value: Fraction, digits: int = 12) -> str:
    """Decimal rendering at ``digits`` significant digits, exact if shorter."""
    if value.denominator == 1:
        return str(value.numerator)
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        d = decimal.Decimal(value.numerator) / decimal.Decimal(value.denominator)
    return format(d, "f")


def event_probability(
    kb: WeightedKB,
    n: int,
    query: Formula,
    backend: Backend = "auto",
    cap_atoms: int | None = None,
) -> Probability:
    """P(query): weight of query-satisfying interpretations over Z."""
    z, (num,) = query_weights(kb, n, (query,), backend, cap_atoms)
    if z == 0:
        raise UndefinedDistributionError("partition function is zero; probabilities undefined")
    return Probability(num / z)


def conditional_probability(
    kb: WeightedKB,
    n: int,
    query: Formula,
    evidence: Formula,
    backend: Backend = "auto",
    cap_atoms: int | None = None,
) -> Probability:
    """P(query | evidence), computed by adding the hard constraint (!evidence : 0).

    Appending that item zeroes every interpretation violating the evidence,
    so the unconditional query over the extended KB equals the ratio
    P(query & evidence) / P(evidence) exactly.
    """
    if free_variables(evidence):
        raise EvaluationError("evidence must be a sentence")
    validate_formula(evidence, kb.signature)
    conditioned = kb.extended(Not(evidence), 0)
    z2, (num,) = query_weights(conditioned, n, (query,), backend, cap_atoms)
    if z2 == 0:
        z1 = partition_function(kb, n, backend, cap_atoms)
        if z1 == 0:
            raise UndefinedDistributionError("partition function is zero")
        raise ZeroProbabilityEvidenceError("evidence has probability zero")
    return Probability(num / z2)


# ---------------------------------------------------------------------------
# Spectra


def satisfiable_by_enumeration(sentence: Formula, sig: Signature, n: int) -> bool:
    """Exhaustive satisfiability check over every interpretation of size n."""
    table = AtomTable(sig, n)
    for bits in range(1 << len(table)):
        if _eval(Interpretation(table, bits), sentence, {}):
            return True
    return False


def spectrum_member(
    sentence: Formula,
    sig: Signature,
    n: int,
    backend: Backend = "auto",
    cap_atoms: int | None = None,
) -> bool:
    """True when the sentence is satisfiable by some interpretation of size n."""
    if free_variables(sentence):
        raise EvaluationError("spectrum membership needs a sentence")
    validate_formula(sentence, sig)
    natoms = count_ground_atoms(sig, n)
    chosen = _resolve_backend(backend, natoms)
    if chosen == "enum":
        _check_cap("enum", natoms, cap_atoms)
        return satisfiable_by_enumeration(sentence, sig, n)
    _check_cap("wmc", natoms, cap_atoms)
    kb = WeightedKB(sig, [(Not(sentence), 0)])
    return wmc_count(ground(kb, n)) > 0


def spectrum(
    sentence: Formula,
    sig: Signature,
    n_max: int,
    backend: Backend = "auto",
    cap_atoms: int | None = None,
) -> set[int]:
    """Domain sizes in 1..n_max at which the sentence is satisfiable."""
    return {
        n
        for n in range(1, n_max + 1)
        if spectrum_member(sentence, sig, n, backend, cap_atoms)
    }
