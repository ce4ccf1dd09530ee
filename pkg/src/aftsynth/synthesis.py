"""Symbolic semantics and reachability synthesis (EFsynth).

A :class:`SymbolicState` pairs a location vector with a polyhedron over
clocks, timing parameters, weight variables and weight parameters.
:func:`ef_synth` explores the symbolic graph breadth first, skipping states
subsumed by an already visited one, and collects the parameter projection of
every state whose locations satisfy the target predicate.

Translated networks are acyclic apart from self-loops that consume one-shot
actions, so the exploration terminates.

Dead variables are projected away as the search goes (``reduce=True``): a
clock is dead when its automaton will reset it before reading it again, a
weight is dead when no automaton can still copy it into another variable or
test it in a guard.  This does not change the projected result but keeps the
polyhedra small.
"""

from __future__ import annotations

import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .polyhedra import (
    LinExpr,
    Polyhedron,
    Sort,
    Universe,
    affine_image,
    covers,
    includes,
    reset,
    time_elapse,
)
from .pwta import Atom, Network, clock_liveness, weight_exports

log = logging.getLogger(__name__)

__all__ = [
    "SymbolicState",
    "ConstraintResult",
    "universe_of",
    "initial_state",
    "symbolic_successors",
    "ef_synth",
    "check_valuation",
    "result_covers",
    "equivalent",
]


def universe_of(net: Network) -> Universe:
    return Universe.of(
        clocks=net.clocks,
        timing=net.timing_parameters,
        weights=net.weights,
        weight_params=net.weight_parameters,
    )


@dataclass(frozen=True)
class SymbolicState:
    locations: tuple[str, ...]
    constraint: Polyhedron

    def __str__(self) -> str:
        return f"({', '.join(self.locations)}) : {self.constraint}"


class _Context:
    """Per-network caches: universe, guard polyhedra, liveness tables."""

    def __init__(self, net: Network, reduce: bool = True):
        self.net = net
        self.universe = universe_of(net)
        self.reduce = reduce
        self._poly: dict = {}
        self._live_clocks = [clock_liveness(a) for a in net.automata]
        self._exports = [weight_exports(a) for a in net.automata]
        self.weights = frozenset(net.weights)

    def atoms(self, atoms: Sequence[Atom]) -> Polyhedron:
        key = tuple(atoms)
        p = self._poly.get(key)
        if p is None:
            u = self.universe
            triples = [(LinExpr.var(a.var), a.rel,
                        LinExpr.var(a.bound) if isinstance(a.bound, str) else LinExpr.constant(a.bound))
                       for a in atoms]
            p = Polyhedron.from_atoms(u, triples)
            self._poly[key] = p
        return p

    def invariant(self, locs: Sequence[str]) -> Polyhedron:
        atoms = tuple(x for a, loc in zip(self.net.automata, locs) for x in a.invariant(loc))
        return self.atoms(atoms)

    def dead(self, locs: Sequence[str], p: Polyhedron) -> list[str]:
        if not self.reduce:
            return []
        live = set()
        exported = set()
        for i, loc in enumerate(locs):
            live |= self._live_clocks[i][loc]
            exported |= self._exports[i][loc]
        present = p.variables
        out = []
        for name in present:
            sort = self.universe.sort(name)
            if sort is Sort.CLOCK and name not in live:
                out.append(name)
            elif sort is Sort.WEIGHT_VARIABLE and name not in exported:
                out.append(name)
        return out

    def tidy(self, locs: Sequence[str], p: Polyhedron) -> Polyhedron:
        dead = self.dead(locs, p)
        return p.eliminate(dead) if dead else p


def initial_state(net: Network, reduce: bool = False, _ctx: _Context | None = None) -> SymbolicState:
    """Clocks and weights at 0, timing parameters non-negative, then time elapses (unless urgent)."""
    ctx = _ctx or _Context(net, reduce)
    u = ctx.universe
    rows = [f"{c} = 0" for c in net.clocks] + [f"{w} = 0" for w in net.weights]
    rows += [f"{p} >= 0" for p in net.timing_parameters]
    p = Polyhedron.parse(u, " & ".join(rows)) if rows else Polyhedron.top(u)
    locs = net.initial_locations()
    inv = ctx.invariant(locs)
    p = p & inv
    if not net.is_urgent(locs):
        p = time_elapse(p, inv)
    return SymbolicState(locs, ctx.tidy(locs, p))


def _combos(net: Network, locs, action):
    choices = []
    for i in net.participants(action):
        opts = [e for e in net.automata[i].outgoing(locs[i]) if e.action == action]
        if not opts:
            return []
        choices.append([(i, e) for e in opts])
    combos = [()]
    for opts in choices:
        combos = [c + (o,) for c in combos for o in opts]
    return combos


def _successors(ctx: _Context, s: SymbolicState) -> list[tuple[str, SymbolicState]]:
    net = ctx.net
    out = []
    actions = sorted({e.action for a, loc in zip(net.automata, s.locations) for e in a.outgoing(loc)})
    for action in actions:
        for combo in _combos(net, s.locations, action):
            guard_atoms = tuple(x for _, e in combo for x in e.guard)
            p = s.constraint & ctx.atoms(guard_atoms) if guard_atoms else s.constraint
            if p.is_empty():
                continue
            resets = set()
            for _, e in combo:
                resets |= e.resets
            if resets:
                p = reset(p, sorted(resets))
            for _, e in combo:  # fixed automaton order, as in the concrete semantics
                if e.update:
                    p = affine_image(p, dict(e.update))
            locs = list(s.locations)
            for i, e in combo:
                locs[i] = e.target
            locs = tuple(locs)
            inv = ctx.invariant(locs)
            p = p & inv
            if p.is_empty():
                continue
            if not net.is_urgent(locs):
                p = time_elapse(p, inv)
            p = ctx.tidy(locs, p)
            out.append((action, SymbolicState(locs, p)))
    return out


def symbolic_successors(net: Network, s: SymbolicState, reduce: bool = False) -> list[tuple[str, SymbolicState]]:
    """All (action, successor) pairs of ``s``; see the module docstring for the steps."""
    return _successors(_Context(net, reduce), s)


# ---------------------------------------------------------------------------
# results


@dataclass
class ConstraintResult:
    """Disjunction of parameter polyhedra, each with one witness action sequence."""

    parameters: tuple[str, ...]
    disjuncts: list[Polyhedron] = field(default_factory=list)
    witnesses: list[tuple[str, ...]] = field(default_factory=list)
    states: int = 0
    seconds: float = 0.0

    def __len__(self) -> int:
        return len(self.disjuncts)

    def __iter__(self):
        return iter(self.disjuncts)

    def is_empty(self) -> bool:
        return not self.disjuncts

    def to_text(self) -> str:
        if not self.disjuncts:
            return "False\n"
        blocks = []
        for d in self.disjuncts:
            rows = d.minimize().to_text(sep="\n& ")
            blocks.append(rows)
        return "\n\nOR\n\n".join(blocks) + "\n"

    def to_json(self) -> dict:
        return {
            "parameters": list(self.parameters),
            "disjuncts": [
                {"constraints": d.minimize().to_json(), "text": d.minimize().to_text(), "witness": list(w)}
                for d, w in zip(self.disjuncts, self.witnesses)
            ],
            "states": self.states,
        }

    @classmethod
    def from_json(cls, universe: Universe, data: Mapping) -> "ConstraintResult":
        res = cls(tuple(data["parameters"]))
        for item in data["disjuncts"]:
            res.disjuncts.append(Polyhedron.from_json(universe, item["constraints"]))
            res.witnesses.append(tuple(item.get("witness", ())))
        return res


def check_valuation(result: ConstraintResult, valuation: Mapping[str, object]) -> bool:
    """True iff the valuation satisfies at least one disjunct (exact)."""
    missing = [p for p in result.parameters if p not in valuation]
    if missing:
        raise KeyError(f"valuation misses parameters {missing}")
    values = {k: Fraction(v) for k, v in valuation.items()}
    return any(d.contains_point(values) for d in result.disjuncts)


def result_covers(result: ConstraintResult | Iterable[Polyhedron], block: Polyhedron) -> bool:
    """``block`` lies inside the union of the result's disjuncts (exact)."""
    return covers(list(result), block)


def equivalent(a: Iterable[Polyhedron], b: Iterable[Polyhedron]) -> bool:
    """Set equality of two disjunctions by mutual coverage."""
    a, b = list(a), list(b)
    return all(covers(b, p) for p in a) and all(covers(a, p) for p in b)


# ---------------------------------------------------------------------------
# exploration


_WORKER_CTX: _Context | None = None


def _worker_init(net: Network, reduce: bool) -> None:
    global _WORKER_CTX
    _WORKER_CTX = _Context(net, reduce)


def _worker_expand(state: SymbolicState):
    return _successors(_WORKER_CTX, state)


def ef_synth(net: Network, target: Callable[[tuple[str, ...]], bool], *, subsumption: bool = True,
             reduce: bool = True, jobs: int = 1, seed: int | None = None,
             max_states: int | None = None) -> ConstraintResult:
    """Parameter valuations for which a location vector satisfying ``target`` is reachable.

    ``jobs > 1`` expands each BFS layer in a process pool; subsumption is
    always decided in the parent, so results do not depend on ``jobs``.
    ``seed`` shuffles the order in which successors are visited.
    """
    started = time.perf_counter()
    ctx = _Context(net, reduce)
    u = ctx.universe
    params = tuple(net.timing_parameters) + tuple(net.weight_parameters)
    drop = [n for n in u.names if n not in params]
    rng = random.Random(seed) if seed is not None else None

    result = ConstraintResult(params)
    visited: dict[tuple, list[Polyhedron]] = {}
    init = initial_state(net, reduce, ctx)
    frontier = [(init, ())]
    count = 0

    def seen(st: SymbolicState) -> bool:
        bucket = visited.setdefault(st.locations, [])
        if subsumption:
            for q in bucket:
                if includes(q, st.constraint):
                    return True
            bucket[:] = [q for q in bucket if not includes(st.constraint, q)]
        bucket.append(st.constraint)
        return False

    seen(init)
    pool = ProcessPoolExecutor(jobs, initializer=_worker_init, initargs=(net, reduce)) if jobs > 1 else None
    try:
        while frontier:
            if rng is not None:
                rng.shuffle(frontier)
            hits = [(s, path) for s, path in frontier if target(s.locations)]
            for s, path in hits:
                _add_disjunct(result, s.constraint.eliminate(drop), path)
            expand = [(s, path) for s, path in frontier if not target(s.locations)]
            count += len(frontier)
            if max_states is not None and count > max_states:
                raise RuntimeError(f"state budget of {max_states} exceeded")
            if pool is not None and len(expand) > 1:
                chunks = max(1, len(expand) // (4 * jobs))
                layers = list(pool.map(_worker_expand, [s for s, _ in expand], chunksize=chunks))
            else:
                layers = [_successors(ctx, s) for s, _ in expand]
            nxt = []
            for (s, path), succs in zip(expand, layers):
                if rng is not None:
                    succs = list(succs)
                    rng.shuffle(succs)
                for action, t in succs:
                    if not seen(t):
                        nxt.append((t, path + (action,)))
            frontier = nxt
            log.debug("layer done: %d states so far, frontier %d", count, len(frontier))
    finally:
        if pool is not None:
            pool.shutdown()
    result.states = count
    result.seconds = time.perf_counter() - started
    log.info("explored %d symbolic states in %.2fs, %d disjuncts", count, result.seconds, len(result))
    return result


def _add_disjunct(result: ConstraintResult, p: Polyhedron, path: tuple[str, ...]) -> None:
    if p.is_empty():
        return
    for q in result.disjuncts:
        if includes(q, p):
            return
    keep = [(q, w) for q, w in zip(result.disjuncts, result.witnesses) if not includes(p, q)]
    result.disjuncts = [q for q, _ in keep] + [p.minimize()]
    result.witnesses = [w for _, w in keep] + [path]
