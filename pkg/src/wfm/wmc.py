"""Exact weighted counting over ground knowledge bases.

The counter sums, over all atom assignments satisfying every hard
constraint, the product of weights of satisfied soft groundings.  It unit
propagates hard constraints, decomposes the residual problem into connected
components of the atom-interaction graph (solving each component once via a
cache), and otherwise branches on the atom occurring in the most active
items.  Results are exact rationals and agree bit-for-bit with enumeration.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .grounding import GNode, GroundKB, NodePool, split_must_hold

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _is_literal(node: GNode) -> bool:
    return node.op == "V" or (node.op == "N" and node.kids[0].op == "V")


def _add_hard(pool: NodePool, node: GNode, out: list[GNode]) -> None:
    """Add a must-hold constraint, splitting conjunctions and distributing a
    single conjunctive disjunct over literal disjuncts (linear, no blowup)."""
    if node.op == "T":
        return
    if node.op == "A":
        for k in node.kids:
            _add_hard(pool, k, out)
        return
    if node.op == "O":
        and_kids = [k for k in node.kids if k.op == "A"]
        if len(and_kids) == 1 and all(_is_literal(k) for k in node.kids if k.op != "A"):
            lits = [k for k in node.kids if k.op != "A"]
            for c in and_kids[0].kids:
                _add_hard(pool, pool.disj(lits + [c]), out)
            return
    out.append(node)


class _Counter:
    def __init__(self, pool: NodePool):
        self.pool = pool
        self.cache: dict[tuple, Fraction] = {}

    def solve(self, hard: list[GNode], soft: list[tuple[GNode, Fraction]]) -> Fraction:
        key = (
            tuple(sorted({h.id for h in hard})),
            tuple(sorted((s.id, w) for s, w in soft)),
        )
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        val = self._compute(hard, soft)
        self.cache[key] = val
        return val

    def _compute(self, hard: list[GNode], soft: list[tuple[GNode, Fraction]]) -> Fraction:
        pool = self.pool
        entry_mask = 0
        for h in hard:
            entry_mask |= h.varmask
        for s, _ in soft:
            entry_mask |= s.varmask

        mult = _ONE
        assigned = 0

        # Unit propagation to fixpoint.
        while True:
            units: dict[int, bool] = {}
            kept: list[GNode] = []
            for h in hard:
                if h.op == "F":
                    return _ZERO
                if h.op == "T":
                    continue
                if h.op == "V":
                    if units.get(h.var) is False:
                        return _ZERO
                    units[h.var] = True
                elif h.op == "N" and h.kids[0].op == "V":
                    v = h.kids[0].var
                    if units.get(v) is True:
                        return _ZERO
                    units[v] = False
                else:
                    kept.append(h)
            if not units:
                hard = kept
                break
            assigned += len(units)
            new_hard: list[GNode] = []
            for h in kept:
                r = h
                for v, b in units.items():
                    r = pool.restrict(r, v, b)
                _add_hard(pool, r, new_hard)
            new_soft: list[tuple[GNode, Fraction]] = []
            for s, w in soft:
                r = s
                for v, b in units.items():
                    r = pool.restrict(r, v, b)
                if r.op == "T":
                    mult *= w
                elif r.op != "F":
                    new_soft.append((r, w))
            hard, soft = new_hard, new_soft

        decided: list[tuple[GNode, Fraction]] = []
        for s, w in soft:
            if s.op == "T":
                mult *= w
            elif s.op != "F":
                decided.append((s, w))
        soft = decided

        after_mask = 0
        for h in hard:
            after_mask |= h.varmask
        for s, _ in soft:
            after_mask |= s.varmask
        dropped = entry_mask.bit_count() - assigned - after_mask.bit_count()
        if dropped:
            mult *= 1 << dropped
        if not hard and not soft:
            return mult

        # Connected components over shared atoms.
        comps = self._components(hard, soft, after_mask)
        if len(comps) > 1:
            out = mult
            for ch, cs in comps:
                out *= self.solve(ch, cs)
                if out == 0:
                    return _ZERO
            return out

        # Branch on the atom occurring in the most items.
        counts: dict[int, int] = {}
        for node in [h for h in hard] + [s for s, _ in soft]:
            m = node.varmask
            while m:
                low = m & -m
                v = low.bit_length() - 1
                counts[v] = counts.get(v, 0) + 1
                m ^= low
        v = min(counts, key=lambda x: (-counts[x], x))

        total = _ZERO
        for val in (True, False):
            bh: list[GNode] = []
            conflict = False
            for h in hard:
                r = pool.restrict(h, v, val)
                if r.op == "F":
                    conflict = True
                    break
                _add_hard(pool, r, bh)
            if conflict:
                continue
            bs: list[tuple[GNode, Fraction]] = []
            bmult = _ONE
            for s, w in soft:
                r = pool.restrict(s, v, val)
                if r.op == "T":
                    bmult *= w
                elif r.op != "F":
                    bs.append((r, w))
            sub_mask = 0
            for x in bh:
                sub_mask |= x.varmask
            for x, _ in bs:
                sub_mask |= x.varmask
            sub = self.solve(bh, bs)
            gap = after_mask.bit_count() - 1 - sub_mask.bit_count()
            if gap:
                sub *= 1 << gap
            total += bmult * sub
        return mult * total

    def _components(self, hard, soft, mask: int):
        parent: dict[int, int] = {}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        m = mask
        while m:
            low = m & -m
            v = low.bit_length() - 1
            parent[v] = v
            m ^= low

        items = [(h, None) for h in hard] + list(soft)
        for node, _ in items:
            vs = []
            m = node.varmask
            while m:
                low = m & -m
                vs.append(low.bit_length() - 1)
                m ^= low
            r0 = find(vs[0])
            for v in vs[1:]:
                r = find(v)
                if r != r0:
                    parent[r] = r0

        groups: dict[int, tuple[list[GNode], list[tuple[GNode, Fraction]]]] = {}
        for h in hard:
            root = find((h.varmask & -h.varmask).bit_length() - 1)
            groups.setdefault(root, ([], []))[0].append(h)
        for s, w in soft:
            root = find((s.varmask & -s.varmask).bit_length() - 1)
            groups.setdefault(root, ([], []))[1].append((s, w))
        return list(groups.values())


def wmc_count(gkb: GroundKB, restriction: Mapping[int, bool] | None = None) -> Fraction:
    """Exact weighted count of ``gkb`` over assignments extending ``restriction``."""
    pool = gkb.pool
    hard: list[GNode] = []
    mult = _ONE

    def apply_restriction(node: GNode) -> GNode:
        if restriction:
            for v, b in restriction.items():
                node = pool.restrict(node, v, b)
        return node

    for h in gkb.hard:
        r = apply_restriction(h)
        if r.op == "F":
            return _ZERO
        _add_hard(pool, r, hard)

    soft: list[tuple[GNode, Fraction]] = []
    for s, w in gkb.soft:
        if w == 1:  # weight-1 features never change any interpretation weight
            continue
        r = apply_restriction(s)
        if r.op == "T":
            mult *= w
        elif r.op == "F":
            continue
        elif w == 0:
            # Normally compiled away by ground(); kept for direct callers.
            _add_hard(pool, pool.neg(r), hard)
        else:
            soft.append((r, w))

    active_mask = 0
    for h in hard:
        active_mask |= h.varmask
    for s, _ in soft:
        active_mask |= s.varmask
    free = gkb.num_atoms - (len(restriction) if restriction else 0) - active_mask.bit_count()

    counter = _Counter(pool)
    result = mult * counter.solve(hard, soft)
    if free:
        result *= 1 << free
    return result
