"""Brute-force reference semantics for concrete trees, independent of the automata.

Every leaf duration is enumerated on a 1/2 grid and every ordering of
simultaneous child completions is tried.  Gates are evaluated directly from
their informal rules, so this module shares no code with the translation.

For integer leaf bounds the set of reachable top-level times (per cost and
damage) is a finite union of closed intervals with integer endpoints, so
consecutive half-grid points always belong to a common interval and
``success_blocks`` rebuilds the exact set.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from aftsynth.galileo import AttackFaultTree, Const, GateKind

STEP = Fraction(1, 2)
SUCC, FAIL = "S", "F"


def _grid(lo: Fraction, hi: Fraction):
    t = lo
    while t <= hi:
        yield t
        t += STEP


def _val(v) -> Fraction:
    assert isinstance(v, Const), "enumerator handles concrete trees only"
    return v.value


def _orderings(events):
    """All sequences of events sorted by time, ties permuted."""
    groups = [list(g) for _, g in itertools.groupby(sorted(events, key=lambda e: e[1]), key=lambda e: e[1])]
    for parts in itertools.product(*(itertools.permutations(g) for g in groups)):
        yield [e for part in parts for e in part]


def node_outcomes(tree: AttackFaultTree, name: str) -> set[tuple]:
    """{(outcome, end time, forwarded cost, forwarded damage)} for activation at time 0."""
    node = tree[name]
    if node.is_leaf:
        lo, hi = _val(node.min_time), _val(node.max_time)
        c, d = _val(node.cost), _val(node.damage)
        out = set()
        for t in _grid(lo, hi):
            out.add((SUCC, t, c, d))
            out.add((FAIL, t, Fraction(0), Fraction(0)))
        return out
    own = (_val(node.cost), _val(node.damage))
    kids = [node_outcomes(tree, c) for c in node.children]
    kind = node.kind
    res: set[tuple] = set()

    def win(t, parts):
        res.add((SUCC, t, own[0] + sum(p[2] for p in parts), own[1] + sum(p[3] for p in parts)))

    def lose(t):
        res.add((FAIL, t, Fraction(0), Fraction(0)))

    if kind in (GateKind.SAND, GateKind.SPARE, GateKind.SOR):
        # sequential: child i starts when child i-1 ends
        def seq(i, t0, done):
            for o, t, c, d in kids[i]:
                ev = (o, t0 + t, c, d)
                if kind is GateKind.SOR:
                    if o == SUCC:
                        win(ev[1], [ev])
                    elif i == len(kids) - 1:
                        lose(ev[1])
                    else:
                        seq(i + 1, ev[1], done)
                else:
                    if o == FAIL:
                        lose(ev[1])
                    elif i == len(kids) - 1:
                        win(ev[1], done + [ev])
                    else:
                        seq(i + 1, ev[1], done + [ev])
        seq(0, Fraction(0), [])
        return res

    if kind is GateKind.FDEP:
        forced = []
        for c in node.children[1:]:
            dep = tree[c]
            forced.append((_val(dep.cost), _val(dep.damage)))
        for o, t, c, d in kids[0]:
            if o == FAIL:
                lose(t)
            else:
                win(t, [(o, t, c, d)] + [(SUCC, t, fc, fd) for fc, fd in forced])
        return res

    n = len(kids)
    for combo in itertools.product(*kids):
        events = [(i,) + tuple(e) for i, e in enumerate(combo)]
        events = [(i, t, o, c, d) for i, o, t, c, d in events]
        for order in _orderings([(e[0], e[1], e) for e in events]):
            succ, fail = [], []
            for i, t, e in order:
                (succ if e[2] == SUCC else fail).append(e)
                got = [x[0] for x in succ]
                if kind is GateKind.AND:
                    if e[2] == FAIL:
                        lose(t)
                        break
                    if len(succ) == n:
                        win(t, [(x[2], x[1], x[3], x[4]) for x in succ])
                        break
                elif kind is GateKind.OR:
                    if e[2] == SUCC:
                        win(t, [(e[2], t, e[3], e[4])])
                        break
                    if len(fail) == n:
                        lose(t)
                        break
                elif kind is GateKind.PAND:
                    if e[2] == FAIL or got != list(range(len(got))):
                        lose(t)
                        break
                    if len(succ) == n:
                        win(t, [(x[2], x[1], x[3], x[4]) for x in succ])
                        break
                elif kind is GateKind.XOR:
                    if len(succ) + len(fail) == n:
                        if len(succ) == 1:
                            x = succ[0]
                            win(t, [(x[2], x[1], x[3], x[4])])
                        else:
                            lose(t)
                        break
                elif kind is GateKind.VOT:
                    k = node.threshold
                    if len(succ) >= k:
                        win(t, [(x[2], x[1], x[3], x[4]) for x in succ])
                        break
                    if len(fail) >= n - k + 1:
                        lose(t)
                        break
                else:
                    raise AssertionError(kind)
    return res


def success_blocks(tree: AttackFaultTree) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
    """Top-level successes as closed blocks (t_lo, t_hi, cost, damage)."""
    pts: dict[tuple, list[Fraction]] = {}
    for o, t, c, d in node_outcomes(tree, tree.root):
        if o == SUCC:
            pts.setdefault((c, d), []).append(t)
    blocks = []
    for (c, d), ts in sorted(pts.items()):
        ts.sort()
        lo = prev = ts[0]
        for t in ts[1:]:
            if t - prev != STEP:
                blocks.append((lo, prev, c, d))
                lo = t
            prev = t
        blocks.append((lo, prev, c, d))
    return blocks
