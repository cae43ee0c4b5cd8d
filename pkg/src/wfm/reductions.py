"""Gap constructions: knowledge bases whose query probability separates
domain sizes where a sentence is satisfiable from those where it is not.

Three constructions are provided, selected by an integer id matching the
CLI:

  2 -- hard-constraint construction over full quantified relational logic.
       P(a()) is exactly 0 off the spectrum and at least 1/2 on it.
  3 -- quantifier-free construction (equality allowed).  Existential content
       is approximated by weighted rewards on function-encoding relations,
       calibrated by a domain-size-dependent weight w = 10 * 2**A where A is
       the number of ground atoms of the full signature.  P(a()) is at most
       1/10 off the spectrum and at least 1/2 on it.
  4 -- quantifier- and equality-free construction.  Equality is replaced by
       a fresh binary relation penalized away from true identity; the same
       gap bounds hold with w = 10 * 2**A for the enlarged signature.

Every construction adds a nullary query atom a() and a nullary reference
atom b(); exactly one interpretation with b() true has nonzero weight, and
its weight has a closed form used by the calibration checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .grounding import count_ground_atoms
from .logic import (
    And,
    Atom,
    Formula,
    Fragment,
    Not,
    Or,
    Signature,
    Var,
    and_all,
    classify_fragment,
    forall_all,
    is_sentence,
    neq,
)
from .semantics import (
    Backend,
    Probability,
    WeightedKB,
    decimal_str,
    event_probability,
    spectrum_member,
)
from .transforms import TransformError, eliminate_equality, relational_skolemize


class ReductionError(Exception):
    pass


@dataclass(frozen=True)
class ReductionKB:
    """A constructed gap KB plus its calibration parameters.

    ``origins`` labels each item with the role it plays in the construction;
    the labels are emitted as comments when the KB is rendered.
    """

    kb: WeightedKB
    query: Formula  # the nullary query atom a()
    reference: Formula  # the nullary reference atom b()
    variant: int  # 2, 3, or 4
    origins: tuple[str, ...]
    n: int | None = None
    calibration_weight: Fraction | None = None
    reward_tuples: int | None = None  # K(n): total groundings of the reward items
    ground_atom_count: int | None = None  # atom count of the full signature at n


def _check_input(phi: Formula, sig: Signature) -> None:
    if not is_sentence(phi):
        raise ReductionError("input must be a sentence (no free variables)")
    if classify_fragment(phi) > Fragment.RFOL:
        raise ReductionError("input must be function- and constant-free")


def _rel_atom(name: str, arity: int) -> tuple[list[str], Atom]:
    xs = [f"x{i}" for i in range(1, arity + 1)]
    return xs, Atom(name, tuple(Var(x) for x in xs))


def build_spectrum_gap_kb(phi: Formula, sig: Signature) -> ReductionKB:
    """Construction 2: three hard constraints over the original signature.

    a() is tied to the input sentence, b() to the unique all-empty
    interpretation, and every interpretation satisfying neither a() nor b()
    is zeroed out.
    """
    _check_input(phi, sig)
    out_sig = sig.copy()
    a_name = out_sig.fresh_symbol("a")
    out_sig.declare_relation(a_name, 0)
    b_name = out_sig.fresh_symbol("b")
    out_sig.declare_relation(b_name, 0)
    a, b = Atom(a_name), Atom(b_name)

    empty_parts = []
    for rel, arity in sig.relations.items():
        xs, atom = _rel_atom(rel, arity)
        empty_parts.append(forall_all(xs, Not(atom)))
    from .logic import Iff

    items = [
        (Not(Iff(phi, a)), 0),
        (Not(Iff(and_all(empty_parts), b)), 0),
        (Not(Or(a, b)), 0),
    ]
    origins = ("query-link", "reference-model", "support")
    return ReductionKB(
        kb=WeightedKB(out_sig, items),
        query=a,
        reference=b,
        variant=2,
        origins=origins,
    )


def _build_weighted_gap_kb(
    phi: Formula, sig: Signature, n: int, equality_free: bool, w_override: Fraction | None
) -> ReductionKB:
    _check_input(phi, sig)
    if n < 1:
        raise ReductionError("domain size must be >= 1")

    scratch = sig.copy()
    rsk = relational_skolemize(phi, scratch)
    matrix = rsk.matrix

    out_sig = Signature()
    for rel, arity in sig.relations.items():
        out_sig.declare_relation(rel, arity)
    plus: list[tuple[str, int]] = []  # (R^f, arity k+1)
    for rel, arity in rsk.new_relations:
        out_sig.declare_relation(rel, arity)
        plus.append((rel, arity))
    plusplus: list[tuple[str, int]] = []  # one k-ary partner per (k+1)-ary R^f
    for rel, arity in plus:
        pp = out_sig.fresh_symbol(f"_pp{rel}")
        out_sig.declare_relation(pp, arity - 1)
        plusplus.append((pp, arity - 1))

    e_name = epp_name = None
    if equality_free:
        e_name = out_sig.fresh_symbol("_E")
        out_sig.declare_relation(e_name, 2)
        epp_name = out_sig.fresh_symbol("_Epp")
        out_sig.declare_relation(epp_name, 1)
        matrix = eliminate_equality(matrix, e_name)

    a_name = out_sig.fresh_symbol("a")
    out_sig.declare_relation(a_name, 0)
    b_name = out_sig.fresh_symbol("b")
    out_sig.declare_relation(b_name, 0)
    a, b = Atom(a_name), Atom(b_name)

    reward_tuples = sum(n ** (arity - 1) for _, arity in plus)
    atom_count = count_ground_atoms(out_sig, n)
    w = Fraction(10 * (1 << atom_count)) if w_override is None else Fraction(w_override)
    if w <= 1:
        raise ReductionError("calibration weight must exceed 1")

    items: list[tuple[Formula, Fraction | int]] = []
    origins: list[str] = []

    def add(f: Formula, weight, origin: str) -> None:
        items.append((f, weight))
        origins.append(origin)

    add(And(a, Not(matrix)), 0, "query-matrix")
    for rel, arity in plus:
        k = arity - 1
        xs = [f"x{i}" for i in range(1, k + 1)]
        xvars = tuple(Var(x) for x in xs)
        y, yp = Var("y"), Var("y'")
        clash = neq(y, yp) if not equality_free else Not(Atom(e_name, (y, yp)))
        add(
            And(And(Atom(rel, xvars + (y,)), Atom(rel, xvars + (yp,))), clash),
            0,
            "one-output",
        )
    for rel, arity in plus:
        xs, atom = _rel_atom(rel, arity)
        add(And(a, atom), w, "output-reward")
    for rel, arity in sig.relations.items():
        xs, atom = _rel_atom(rel, arity)
        add(And(b, atom), 0, "reference-empty")
    for rel, arity in plus:
        xs, atom = _rel_atom(rel, arity)
        add(And(b, atom), 0, "reference-empty")
    if equality_free:
        xs, atom = _rel_atom(e_name, 2)
        add(And(b, atom), 0, "reference-empty")
    for rel, arity in plusplus:
        xs, atom = _rel_atom(rel, arity)
        add(And(b, atom), w, "reference-reward")
    for rel, arity in plusplus:
        xs, atom = _rel_atom(rel, arity)
        add(And(b, Not(atom)), 0, "reference-full")
    for rel, arity in plusplus:
        xs, atom = _rel_atom(rel, arity)
        add(And(a, atom), 0, "query-clean")
    if equality_free:
        x, y = Var("x"), Var("y")
        add(And(a, Not(Atom(e_name, (x, x)))), 0, "identity-reflexive")
        add(And(a, Atom(e_name, (x, y))), 1 / w, "identity-penalty")
        xs, atom = _rel_atom(epp_name, 1)
        add(And(b, atom), 1 / w, "reference-identity-reward")
        add(And(b, Not(atom)), 0, "reference-full")
        add(And(a, atom), 0, "query-clean")
    add(Not(Or(a, b)), 0, "support")

    kb = WeightedKB(out_sig, items)
    worst = Fragment.ZERO_RFOL_NOEQ if equality_free else Fragment.ZERO_RFOL
    for item in kb.items:
        if classify_fragment(item.formula) > worst:
            raise ReductionError(f"item escapes the target fragment: {item.formula!r}")
    return ReductionKB(
        kb=kb,
        query=a,
        reference=b,
        variant=4 if equality_free else 3,
        origins=tuple(origins),
        n=n,
        calibration_weight=w,
        reward_tuples=reward_tuples,
        ground_atom_count=atom_count,
    )


def build_quantifier_free_gap_kb(
    phi: Formula, sig: Signature, n: int, w_override: Fraction | None = None
) -> ReductionKB:
    """Construction 3: quantifier-free items with equality."""
    return _build_weighted_gap_kb(phi, sig, n, equality_free=False, w_override=w_override)


def build_equality_free_gap_kb(
    phi: Formula, sig: Signature, n: int, w_override: Fraction | None = None
) -> ReductionKB:
    """Construction 4: quantifier-free items without equality."""
    return _build_weighted_gap_kb(phi, sig, n, equality_free=True, w_override=w_override)


def build_reduction(variant: int, phi: Formula, sig: Signature, n: int | None = None) -> ReductionKB:
    if variant == 2:
        return build_spectrum_gap_kb(phi, sig)
    if variant in (3, 4):
        if n is None:
            raise ReductionError(f"construction {variant} needs a domain size (weights depend on it)")
        builder = build_quantifier_free_gap_kb if variant == 3 else build_equality_free_gap_kb
        return builder(phi, sig, n)
    raise ReductionError(f"unknown construction {variant}; pick 2, 3, or 4")


# ---------------------------------------------------------------------------
# Weight representation sizes


def weight_repr_size(w: Fraction) -> int:
    """Bit size of a rational in lowest terms: bits(u) + bits(v).

    Equals ceil(log2(u+1)) + ceil(log2(v+1)); the size of 1 is 2 bits.
    """
    return w.numerator.bit_length() + w.denominator.bit_length()


def kb_weight_size(kb: WeightedKB) -> int:
    return sum(weight_repr_size(item.weight) for item in kb.items)


def num_ground_atoms(sig: Signature, n: int) -> int:
    """Sum over relations of n ** arity."""
    return count_ground_atoms(sig, n)


# ---------------------------------------------------------------------------
# Gap verification


@dataclass(frozen=True)
class GapRow:
    n: int
    member: bool
    probability: Fraction
    bound: str
    passed: bool
    flagged: bool  # probability falls strictly between 1/10 and 1/2


@dataclass(frozen=True)
class GapReport:
    variant: int
    rows: tuple[GapRow, ...]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def lines(self) -> list[str]:
        out = []
        for r in self.rows:
            p = r.probability
            exact = str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"
            out.append(
                f"{r.n},{str(r.member).lower()},{exact},{decimal_str(p)},{r.bound},"
                f"{'pass' if r.passed else 'fail'}"
            )
        return out


_HALF = Fraction(1, 2)
_TENTH = Fraction(1, 10)


def verify_gap(
    variant: int,
    phi: Formula,
    sig: Signature,
    ns: Iterable[int],
    backend: Backend = "auto",
    cap_atoms: int | None = None,
) -> GapReport:
    """Build the construction at each n, compute P(a()) exactly, and check
    the predicted bound: >= 1/2 on the spectrum, = 0 (construction 2) or
    <= 1/10 (constructions 3 and 4) off it.

    Membership is decided on the original sentence, independent of the
    transformation pipeline.
    """
    rows: list[GapRow] = []
    for n in ns:
        member = spectrum_member(phi, sig, n, backend, cap_atoms)
        rkb = build_reduction(variant, phi, sig, n if variant != 2 else None)
        prob = event_probability(rkb.kb, n, rkb.query, backend, cap_atoms).value
        if member:
            bound = ">=1/2"
            passed = prob >= _HALF
        elif variant == 2:
            bound = "=0"
            passed = prob == 0
        else:
            bound = "<=1/10"
            passed = prob <= _TENTH
        flagged = _TENTH < prob < _HALF
        rows.append(GapRow(n, member, prob, bound, passed, flagged))
    return GapReport(variant, tuple(rows))
