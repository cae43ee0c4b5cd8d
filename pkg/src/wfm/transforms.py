"""Formula pipeline: Skolemization, term-depth reduction, relational
Skolemization with function-encoding axioms, equality elimination, and the
translation to literal-weighted form.

Relational Skolemization turns a quantified relational sentence into a
quantifier-free, function-free matrix over fresh relations R^f (one per
eliminated function, arity k+1 for a k-ary f) together with two axiom
schemas per R^f forcing it to encode a total function.  Satisfiability over
every finite domain size is preserved in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .logic import (
    And,
    Atom,
    Eq,
    Exists,
    FALSE,
    FalseF,
    Forall,
    Formula,
    Fragment,
    Func,
    Iff,
    Implies,
    Not,
    Or,
    Signature,
    TRUE,
    TrueF,
    Var,
    all_variables,
    and_all,
    classify_fragment,
    free_variables,
    forall_all,
    is_sentence,
    rename_apart,
    replace_term,
    substitute,
    term_depth,
)


class TransformError(Exception):
    pass


def nnf(f: Formula) -> Formula:
    """Negation normal form; eliminates -> and <->, pushes ! to atoms."""
    return _nnf(f, True)


def _nnf(f: Formula, pos: bool) -> Formula:
    if isinstance(f, (Atom, Eq)):
        return f if pos else Not(f)
    if isinstance(f, TrueF):
        return TRUE if pos else FALSE
    if isinstance(f, FalseF):
        return FALSE if pos else TRUE
    if isinstance(f, Not):
        return _nnf(f.sub, not pos)
    if isinstance(f, And):
        ctor = And if pos else Or
        return ctor(_nnf(f.left, pos), _nnf(f.right, pos))
    if isinstance(f, Or):
        ctor = Or if pos else And
        return ctor(_nnf(f.left, pos), _nnf(f.right, pos))
    if isinstance(f, Implies):
        if pos:
            return Or(_nnf(f.left, False), _nnf(f.right, True))
        return And(_nnf(f.left, True), _nnf(f.right, False))
    if isinstance(f, Iff):
        if pos:
            return And(
                Or(_nnf(f.left, False), _nnf(f.right, True)),
                Or(_nnf(f.right, False), _nnf(f.left, True)),
            )
        return Or(
            And(_nnf(f.left, True), _nnf(f.right, False)),
            And(_nnf(f.right, True), _nnf(f.left, False)),
        )
    if isinstance(f, Forall):
        ctor = Forall if pos else Exists
        return ctor(f.var, _nnf(f.body, pos))
    if isinstance(f, Exists):
        ctor = Exists if pos else Forall
        return ctor(f.var, _nnf(f.body, pos))
    raise TransformError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class SkolemResult:
    matrix: Formula
    universal_vars: tuple[str, ...]
    new_functions: tuple[tuple[str, int], ...]  # (name, arity)


def skolemize(sentence: Formula, sig: Signature) -> SkolemResult:
    """Quantifier-free Skolemization of a sentence.

    Each existential becomes a fresh function applied to the universals in
    scope at its position (after NNF conversion), preserving satisfiability
    over every fixed finite domain.  The matrix keeps the universal
    variables free; they are listed in prefix order.
    """
    if not is_sentence(sentence):
        raise TransformError("skolemize expects a sentence")
    g = rename_apart(nnf(sentence))
    universals: list[str] = []
    new_functions: list[tuple[str, int]] = []

    def walk(h: Formula, scope: tuple[str, ...]) -> Formula:
        if isinstance(h, Forall):
            universals.append(h.var)
            return walk(h.body, scope + (h.var,))
        if isinstance(h, Exists):
            fname = sig.fresh_numbered("_sk")
            sig.declare_function(fname, len(scope))
            new_functions.append((fname, len(scope)))
            witness = Func(fname, tuple(Var(u) for u in scope))
            return walk(substitute(h.body, {h.var: witness}), scope)
        if isinstance(h, And):
            return And(walk(h.left, scope), walk(h.right, scope))
        if isinstance(h, Or):
            return Or(walk(h.left, scope), walk(h.right, scope))
        if isinstance(h, Not):
            return Not(walk(h.sub, scope))  # NNF: only atoms below
        return h

    matrix = walk(g, ())
    return SkolemResult(matrix, tuple(universals), tuple(new_functions))


@dataclass(frozen=True)
class FuncEncoding:
    """A function symbol encoded by a relation of one higher arity."""

    function: str
    relation: str
    arity: int  # arity of the function; the relation has arity + 1


def reduce_term_depth(
    f: Formula,
    sig: Signature,
    rel_for_func: dict[str, str] | None = None,
) -> tuple[Formula, tuple[FuncEncoding, ...]]:
    """One step of function elimination on a quantifier-free formula.

    Collects the distinct depth-1 terms f_i(x_i) in left-to-right
    first-occurrence order, introduces one fresh variable z_i per term and
    one encoding relation R^f per function symbol, and returns

        R^{f_1}(x_1, z_1) & ... & R^{f_r}(x_r, z_r)  ->  f[z_i / f_i(x_i)]

    which has term depth exactly one less than ``f``.
    """
    if _has_quantifier(f):
        raise TransformError("reduce_term_depth expects a quantifier-free formula")
    depth = term_depth(f)
    if depth < 1:
        raise TransformError("formula already has term depth 0")
    if rel_for_func is None:
        rel_for_func = {}

    depth1_terms: list[Func] = []
    seen: set[Func] = set()

    def collect_term(t) -> None:
        if isinstance(t, Func):
            if all(not isinstance(a, Func) for a in t.args):
                if t not in seen:
                    seen.add(t)
                    depth1_terms.append(t)
            else:
                for a in t.args:
                    collect_term(a)

    def collect(g: Formula) -> None:
        if isinstance(g, Atom):
            for t in g.args:
                collect_term(t)
        elif isinstance(g, Eq):
            collect_term(g.left)
            collect_term(g.right)
        elif isinstance(g, Not):
            collect(g.sub)
        elif isinstance(g, (And, Or, Implies, Iff)):
            collect(g.left)
            collect(g.right)

    collect(f)

    used_vars = all_variables(f)
    encodings: list[FuncEncoding] = []
    guards: list[Formula] = []
    replaced = f
    zi = 0
    for t in depth1_terms:
        zi += 1
        z = f"_z{zi}"
        while z in used_vars:
            zi += 1
            z = f"_z{zi}"
        used_vars.add(z)
        rel = rel_for_func.get(t.name)
        if rel is None:
            rel = sig.fresh_symbol(f"_Rsk{t.name}")
            sig.declare_relation(rel, len(t.args) + 1)
            rel_for_func[t.name] = rel
            encodings.append(FuncEncoding(t.name, rel, len(t.args)))
        guards.append(Atom(rel, t.args + (Var(z),)))
        replaced = replace_term(replaced, t, Var(z))
    return Implies(and_all(guards), replaced), tuple(encodings)


def _has_quantifier(f: Formula) -> bool:
    if isinstance(f, (Forall, Exists)):
        return True
    if isinstance(f, Not):
        return _has_quantifier(f.sub)
    if isinstance(f, (And, Or, Implies, Iff)):
        return _has_quantifier(f.left) or _has_quantifier(f.right)
    return False


@dataclass(frozen=True)
class RelationalSkolemResult:
    matrix: Formula  # quantifier-free, function-free
    universal_vars: tuple[str, ...]
    new_relations: tuple[tuple[str, int], ...]  # (name, arity)
    func_axioms: tuple[Formula, ...]
    encodings: tuple[FuncEncoding, ...]


def relational_skolemize(sentence: Formula, sig: Signature) -> RelationalSkolemResult:
    """Skolemize, then eliminate every function symbol via encoding relations.

    The result matrix is quantifier- and function-free over the original
    relations plus one R^f per Skolem function, and comes with the two axiom
    schemas per R^f (single-valuedness and totality).  The conjunction of
    the axioms with the universally closed matrix is satisfiable over
    {1..n} exactly when the input sentence is, for every n.
    """
    if classify_fragment(sentence) > Fragment.RFOL:
        raise TransformError("relational Skolemization expects a function-free sentence")
    sk = skolemize(sentence, sig)
    matrix = sk.matrix
    rel_for_func: dict[str, str] = {}
    encodings: list[FuncEncoding] = []
    while term_depth(matrix) > 0:
        matrix, encs = reduce_term_depth(matrix, sig, rel_for_func)
        encodings.extend(encs)

    axioms: list[Formula] = []
    for enc in encodings:
        xs = [f"x{i}" for i in range(1, enc.arity + 1)]
        xvars = tuple(Var(x) for x in xs)
        y, yp = Var("y"), Var("y'")
        axioms.append(
            forall_all(
                xs + ["y", "y'"],
                Implies(
                    And(Atom(enc.relation, xvars + (y,)), Atom(enc.relation, xvars + (yp,))),
                    Eq(y, yp),
                ),
            )
        )
        axioms.append(forall_all(xs, Exists("y", Atom(enc.relation, xvars + (Var("y"),)))))

    return RelationalSkolemResult(
        matrix=matrix,
        universal_vars=tuple(free_variables(matrix)),
        new_relations=tuple((e.relation, e.arity + 1) for e in encodings),
        func_axioms=tuple(axioms),
        encodings=tuple(encodings),
    )


def eliminate_equality(f: Formula, e_name: str, sig: Signature | None = None) -> Formula:
    """Replace every equality t1 = t2 by E(t1, t2) for a binary relation E."""
    if sig is not None:
        if e_name in sig.relations:
            if sig.relations[e_name] != 2:
                raise TransformError(f"{e_name!r} is declared with arity {sig.relations[e_name]}, need 2")
        else:
            sig.declare_relation(e_name, 2)

    def walk(g: Formula) -> Formula:
        if isinstance(g, Eq):
            return Atom(e_name, (g.left, g.right))
        if isinstance(g, Not):
            return Not(walk(g.sub))
        if isinstance(g, (And, Or, Implies, Iff)):
            return type(g)(walk(g.left), walk(g.right))
        if isinstance(g, (Forall, Exists)):
            return type(g)(g.var, walk(g.body))
        return g

    return walk(f)


def _is_literal(f: Formula) -> bool:
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.sub, Atom))


def to_literal_weighted(kb) -> "WeightedKB":
    """Rewrite so that every positively weighted item is a relation literal.

    Each non-literal item (phi : w) with free variables v becomes a fresh
    relation F(v) linked by the hard constraint (!(phi <-> F(v)) : 0) plus
    the weighted literal (F(v) : w).  Zero-weight items are already hard
    constraints and stay as written.  Probabilities of queries over the
    original signature are preserved exactly.
    """
    from .semantics import WeightedKB

    sig = kb.signature.copy()
    out: list[tuple[Formula, Fraction]] = []
    for item in kb.items:
        if item.weight == 0 or _is_literal(item.formula):
            out.append((item.formula, item.weight))
            continue
        fv = free_variables(item.formula)
        name = sig.fresh_numbered("_lit")
        sig.declare_relation(name, len(fv))
        lit = Atom(name, tuple(Var(v) for v in fv))
        out.append((Not(Iff(item.formula, lit)), Fraction(0)))
        out.append((lit, item.weight))
    return WeightedKB(sig, out)
