"""Bottom-up scenario calculator used to cross-check the synthesizer.

Works directly on concrete trees (no parameters) built from AND, OR, SAND,
SOR and VOT gates.  For every node it computes the ways the node can succeed
(time window, cost, damage, leaves that fired) and the time windows in which
it can fail.  Only successful nodes forward weight, so a scenario's cost and
damage are sums over the leaves and gates that succeeded on the winning path.

The rules assume the default translation, where a finished gate ignores the
late completion of its other children.  Every node of this gate class can
both succeed and fail, so siblings can always stay out of the way of the
child that decides a gate.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .galileo import AttackFaultTree, Const, GateKind, Param
from .polyhedra import Polyhedron
from .synthesis import ConstraintResult, check_valuation

__all__ = ["Scenario", "UnsupportedTree", "scenarios", "outcomes", "crosscheck", "CrosscheckReport"]

SUPPORTED = frozenset({GateKind.AND, GateKind.OR, GateKind.SAND, GateKind.SOR, GateKind.VOT})


class UnsupportedTree(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Scenario:
    lo: Fraction
    hi: Fraction
    cost: Fraction
    damage: Fraction
    leaves: frozenset = field(default=frozenset(), compare=False)

    def __post_init__(self):
        if self.lo > self.hi or self.lo < 0:
            raise ValueError(f"bad window [{self.lo}, {self.hi}]")

    def contains(self, t: Fraction) -> bool:
        return self.lo <= t <= self.hi

    def samples(self) -> list[Fraction]:
        return sorted({self.lo, (self.lo + self.hi) / 2, self.hi})


Window = tuple  # (lo, hi)


def _const(v, where: str) -> Fraction:
    if isinstance(v, Param):
        raise UnsupportedTree(f"{where} is parametric ({v.name})")
    return v.value


def _sum(parts: Iterable[Scenario]) -> Scenario:
    parts = list(parts)
    return Scenario(
        sum((p.lo for p in parts), Fraction(0)),
        sum((p.hi for p in parts), Fraction(0)),
        sum((p.cost for p in parts), Fraction(0)),
        sum((p.damage for p in parts), Fraction(0)),
        frozenset().union(*(p.leaves for p in parts)),
    )


def _join(parts: Iterable[Scenario]) -> Scenario:
    """Concurrent completion: the node finishes with the last of ``parts``."""
    parts = list(parts)
    s = _sum(parts)
    return Scenario(max(p.lo for p in parts), max(p.hi for p in parts), s.cost, s.damage, s.leaves)


def _own(sc: Scenario, cost: Fraction, damage: Fraction) -> Scenario:
    return Scenario(sc.lo, sc.hi, sc.cost + cost, sc.damage + damage, sc.leaves)


def outcomes(tree: AttackFaultTree, name: str | None = None) -> tuple[set[Scenario], set[Window]]:
    """(success scenarios, fail windows) of a node, default the root."""
    node = tree[name or tree.root]
    if node.is_leaf:
        lo = _const(node.min_time, f"{node.name}.mintime")
        hi = _const(node.max_time, f"{node.name}.maxtime")
        cost = _const(node.cost, f"{node.name}.cost")
        dmg = _const(node.damage, f"{node.name}.damage")
        return {Scenario(lo, hi, cost, dmg, frozenset({node.name}))}, {(lo, hi)}
    if node.kind not in SUPPORTED:
        raise UnsupportedTree(f"gate kind {node.kind.name} is not handled by the oracle")
    cost = _const(node.cost, f"{node.name}.cost")
    dmg = _const(node.damage, f"{node.name}.damage")
    kids = [outcomes(tree, c) for c in node.children]
    succ: set[Scenario] = set()
    fail: set[Window] = set()
    as_sc = lambda w: Scenario(w[0], w[1], Fraction(0), Fraction(0))
    n = len(kids)
    if node.kind is GateKind.AND:
        for combo in itertools.product(*(s for s, _ in kids)):
            succ.add(_join(combo))
        for _, f in kids:
            fail |= f
    elif node.kind is GateKind.OR:
        for s, _ in kids:
            succ |= s
        for combo in itertools.product(*(f for _, f in kids)):
            fail.add((max(w[0] for w in combo), max(w[1] for w in combo)))
    elif node.kind is GateKind.SAND:
        for combo in itertools.product(*(s for s, _ in kids)):
            succ.add(_sum(combo))
        for j in range(n):
            for before in itertools.product(*(s for s, _ in kids[:j])):
                for w in kids[j][1]:
                    t = _sum(list(before) + [as_sc(w)])
                    fail.add((t.lo, t.hi))
    elif node.kind is GateKind.SOR:
        for j in range(n):
            for before in itertools.product(*(f for _, f in kids[:j])):
                for sc in kids[j][0]:
                    succ.add(_sum([as_sc(w) for w in before] + [sc]))
        for combo in itertools.product(*(f for _, f in kids)):
            t = _sum(as_sc(w) for w in combo)
            fail.add((t.lo, t.hi))
    elif node.kind is GateKind.VOT:
        k = node.threshold
        for subset in itertools.combinations(range(n), k):
            for combo in itertools.product(*(kids[i][0] for i in subset)):
                succ.add(_join(combo))
        for subset in itertools.combinations(range(n), n - k + 1):
            for combo in itertools.product(*(kids[i][1] for i in subset)):
                fail.add((max(w[0] for w in combo), max(w[1] for w in combo)))
    succ = {_own(sc, cost, dmg) for sc in succ}
    return succ, fail


def scenarios(tree: AttackFaultTree) -> set[Scenario]:
    """All ways the top node can succeed."""
    return outcomes(tree)[0]


# ---------------------------------------------------------------------------


@dataclass
class CrosscheckReport:
    checked: int = 0
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_text(self) -> str:
        head = f"{'PASS' if self.ok else 'FAIL'}: {self.checked} checks, {len(self.mismatches)} mismatches"
        return "\n".join([head] + [f"  - {m}" for m in self.mismatches])

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "checked": self.checked, "mismatches": self.mismatches}, indent=2)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def crosscheck(tree: AttackFaultTree, result: ConstraintResult) -> CrosscheckReport:
    """Compare oracle scenarios with a synthesized result in both directions."""
    report = CrosscheckReport()
    scs = scenarios(tree)
    extra = [p for p in result.parameters if p not in ("total_time", "total_cost", "total_damage")]
    if extra:
        raise UnsupportedTree(f"result has model parameters {extra}; the oracle needs a concrete tree")
    for sc in sorted(scs):
        for t in sc.samples():
            report.checked += 1
            val = {"total_time": t, "total_cost": sc.cost, "total_damage": sc.damage}
            if not check_valuation(result, val):
                report.mismatches.append(
                    f"scenario {sorted(sc.leaves)} (time {_fmt(t)}, cost {_fmt(sc.cost)}, "
                    f"damage {_fmt(sc.damage)}) not allowed by the synthesized constraints")
    for i, d in enumerate(result.disjuncts):
        for pt in d.sample_points():
            report.checked += 1
            t = pt.get("total_time", Fraction(0))
            c = pt.get("total_cost", Fraction(0))
            dm = pt.get("total_damage", Fraction(0))
            if not any(sc.cost == c and sc.damage == dm and sc.contains(t) for sc in scs):
                report.mismatches.append(
                    f"disjunct {i + 1} admits time {_fmt(t)}, cost {_fmt(c)}, damage {_fmt(dm)} "
                    f"which no scenario explains")
    return report
