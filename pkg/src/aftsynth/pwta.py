"""Parametric weighted timed automata, their networks and concrete semantics.

An automaton is a DAG-ish location graph whose edges carry a guard over clocks
and timing parameters, a set of clock resets and a simultaneous affine update
of weight variables.  Automata in a :class:`Network` synchronise by multi-party
handshake: an action fires only when every automaton that knows it moves.

The concrete side works at fixed parameter values with exact rationals.
:func:`run_reaches` searches a digitized state space (delays on a rational
grid fine enough for the constants involved), which is exact for networks with
closed guards and invariants.
"""

from __future__ import annotations

import logging
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

from .polyhedra import LinExpr

log = logging.getLogger(__name__)

__all__ = [
    "Atom",
    "Guard",
    "WeightUpdate",
    "Edge",
    "Pwta",
    "Network",
    "WellFormednessError",
    "ConcreteState",
    "DelayWindow",
    "Successor",
    "Trace",
    "SearchBudgetExceeded",
    "evaluate_update",
    "initial_concrete_state",
    "synchronized_successors",
    "run_reaches",
    "coffee_machine",
    "clock_liveness",
    "weight_exports",
]

Bound = Union[Fraction, str]

_OPS = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}


class WellFormednessError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    """``var rel bound``; ``bound`` is a rational constant or a parameter name."""

    var: str
    rel: str
    bound: Bound

    def __post_init__(self):
        if self.rel not in _OPS:
            raise ValueError(f"bad relation {self.rel!r}")
        if not isinstance(self.bound, str):
            object.__setattr__(self, "bound", Fraction(self.bound))

    @property
    def strict(self) -> bool:
        return self.rel in ("<", ">")

    def holds(self, value: Fraction, env: Mapping[str, Fraction]) -> bool:
        b = env[self.bound] if isinstance(self.bound, str) else self.bound
        return _OPS[self.rel](value, b)

    def __str__(self) -> str:
        b = self.bound if isinstance(self.bound, str) else _fmt(self.bound)
        return f"{self.var} {self.rel} {b}"


Guard = tuple  # tuple[Atom, ...]; the empty tuple is "true"
WeightUpdate = tuple  # tuple[(target, LinExpr), ...]


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def guard_text(guard: Guard) -> str:
    return " & ".join(str(a) for a in guard) if guard else "True"


@dataclass(frozen=True)
class Edge:
    source: str
    guard: Guard
    action: str
    resets: frozenset = frozenset()
    update: WeightUpdate = ()
    target: str = ""

    def __post_init__(self):
        targets = [t for t, _ in self.update]
        if len(targets) != len(set(targets)):
            raise WellFormednessError(f"edge {self.action}: a weight is assigned twice")


@dataclass(frozen=True)
class Pwta:
    """One automaton: Definition-1 tuple plus an urgency flag per location."""

    name: str
    locations: tuple[str, ...]
    initial: str
    edges: tuple[Edge, ...]
    clocks: tuple[str, ...] = ()
    timing_parameters: frozenset = frozenset()
    weights: tuple[str, ...] = ()
    weight_parameters: frozenset = frozenset()
    invariants: Mapping[str, Guard] = field(default_factory=dict)
    urgent: frozenset = frozenset()
    accepting: frozenset = frozenset()
    # only the observer automaton may compare weights with weight parameters
    weight_guards: bool = False

    @property
    def actions(self) -> frozenset[str]:
        return frozenset(e.action for e in self.edges)

    def invariant(self, loc: str) -> Guard:
        return self.invariants.get(loc, ())

    def outgoing(self, loc: str) -> list[Edge]:
        return [e for e in self.edges if e.source == loc]

    def check(self, weight_names: Iterable[str] = ()) -> None:
        """Raise :class:`WellFormednessError` on any scoping violation."""
        locs = set(self.locations)
        weights = set(weight_names) | set(self.weights)
        if self.initial not in locs:
            raise WellFormednessError(f"{self.name}: initial location {self.initial!r} unknown")
        for group in (self.accepting, self.urgent, set(self.invariants)):
            bad = set(group) - locs
            if bad:
                raise WellFormednessError(f"{self.name}: unknown locations {sorted(bad)}")
        for loc in self.urgent:
            if self.invariant(loc):
                raise WellFormednessError(f"{self.name}: urgent location {loc} has an invariant")
        for loc, inv in self.invariants.items():
            for a in inv:
                self._check_clock_atom(a, f"invariant of {loc}")
        for e in self.edges:
            if e.source not in locs or e.target not in locs:
                raise WellFormednessError(f"{self.name}: edge {e.action} has unknown endpoints")
            for a in e.guard:
                if a.var in weights:
                    if not self.weight_guards:
                        raise WellFormednessError(
                            f"{self.name}: weight {a.var} used in a guard of {e.action}")
                    if a.rel != "=" or not isinstance(a.bound, str) or a.bound not in self.weight_parameters:
                        raise WellFormednessError(
                            f"{self.name}: weight guard must be 'weight = weight parameter'")
                else:
                    self._check_clock_atom(a, f"guard of {e.action}")
            for c in e.resets:
                if c not in self.clocks:
                    raise WellFormednessError(f"{self.name}: reset of foreign clock {c}")
            for target, expr in e.update:
                if target not in weights:
                    raise WellFormednessError(f"{self.name}: update of unknown weight {target}")
                for n in expr.names:
                    if n not in weights and n not in self.weight_parameters:
                        raise WellFormednessError(f"{self.name}: update reads unknown {n}")

    def _check_clock_atom(self, a: Atom, where: str) -> None:
        if a.var not in self.clocks:
            raise WellFormednessError(f"{self.name}: {where} constrains non-clock {a.var}")
        if isinstance(a.bound, str) and a.bound not in self.timing_parameters:
            raise WellFormednessError(f"{self.name}: {where} uses undeclared parameter {a.bound}")


@dataclass(frozen=True)
class Network:
    automata: tuple[Pwta, ...]

    def __post_init__(self):
        seen = {}
        for a in self.automata:
            for c in a.clocks:
                if c in seen:
                    raise WellFormednessError(f"clock {c} owned by {seen[c]} and {a.name}")
                seen[c] = a.name
        weights = self.weights
        for a in self.automata:
            a.check(weights)

    def __len__(self) -> int:
        return len(self.automata)

    def __iter__(self) -> Iterator[Pwta]:
        return iter(self.automata)

    def index(self, name: str) -> int:
        for i, a in enumerate(self.automata):
            if a.name == name:
                return i
        raise KeyError(name)

    def __getitem__(self, name: str) -> Pwta:
        return self.automata[self.index(name)]

    @property
    def clocks(self) -> tuple[str, ...]:
        return tuple(c for a in self.automata for c in a.clocks)

    @property
    def weights(self) -> tuple[str, ...]:
        out: dict[str, None] = {}
        for a in self.automata:
            out.update(dict.fromkeys(a.weights))
        return tuple(out)

    @property
    def timing_parameters(self) -> tuple[str, ...]:
        return tuple(sorted(set().union(*(a.timing_parameters for a in self.automata))))

    @property
    def weight_parameters(self) -> tuple[str, ...]:
        return tuple(sorted(set().union(*(a.weight_parameters for a in self.automata))))

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(sorted(set().union(*(a.actions for a in self.automata))))

    def participants(self, action: str) -> tuple[int, ...]:
        return self._participants.get(action, ())

    @property
    def _participants(self) -> dict[str, tuple[int, ...]]:
        cached = self.__dict__.get("_part_cache")
        if cached is None:
            table: dict[str, list[int]] = {}
            for i, a in enumerate(self.automata):
                for act in a.actions:
                    table.setdefault(act, []).append(i)
            cached = {k: tuple(v) for k, v in table.items()}
            object.__setattr__(self, "_part_cache", cached)
        return cached

    def initial_locations(self) -> tuple[str, ...]:
        return tuple(a.initial for a in self.automata)

    def is_urgent(self, locs: Sequence[str]) -> bool:
        return any(loc in a.urgent for a, loc in zip(self.automata, locs))

    def constants(self) -> set[Fraction]:
        out = set()
        for a in self.automata:
            for inv in a.invariants.values():
                out.update(x.bound for x in inv if not isinstance(x.bound, str))
            for e in a.edges:
                out.update(x.bound for x in e.guard if not isinstance(x.bound, str))
        return out

    def has_strict_atoms(self) -> bool:
        return any(
            x.strict
            for a in self.automata
            for g in list(a.invariants.values()) + [e.guard for e in a.edges]
            for x in g
        )


# ---------------------------------------------------------------------------
# liveness


def clock_liveness(aut: "Pwta") -> dict[str, frozenset]:
    """Per location, the clocks that may be read before their next reset."""
    live = {loc: set() for loc in aut.locations}
    clocks = set(aut.clocks)
    for loc in aut.locations:
        live[loc] |= {a.var for a in aut.invariant(loc) if a.var in clocks}
    changed = True
    while changed:
        changed = False
        for e in aut.edges:
            need = {a.var for a in e.guard if a.var in clocks} | (live[e.target] - set(e.resets))
            if not need <= live[e.source]:
                live[e.source] |= need
                changed = True
    return {k: frozenset(v) for k, v in live.items()}


def weight_exports(aut: "Pwta") -> dict[str, frozenset]:
    """Weights an automaton may still read for anything but incrementing themselves."""
    out = {loc: set() for loc in aut.locations}
    changed = True
    while changed:
        changed = False
        for e in aut.edges:
            reads = {a.var for a in e.guard if a.var not in aut.clocks}
            for target, expr in e.update:
                reads |= {n for n in expr.names if n != target}
                if expr.coefficient(target) not in (0, 1):
                    reads.add(target)
            need = reads | out[e.target]
            if not need <= out[e.source]:
                out[e.source] |= need
                changed = True
    return {k: frozenset(v) for k, v in out.items()}


# ---------------------------------------------------------------------------
# concrete semantics


@dataclass(frozen=True)
class ConcreteState:
    locations: tuple[str, ...]
    clocks: tuple[Fraction, ...]
    weights: tuple[Fraction, ...]

    def clock_map(self, net: Network) -> dict[str, Fraction]:
        return dict(zip(net.clocks, self.clocks))

    def weight_map(self, net: Network) -> dict[str, Fraction]:
        return dict(zip(net.weights, self.weights))

    def show(self) -> str:
        locs = ", ".join(self.locations) if len(self.locations) > 1 else self.locations[0]
        clocks = ",".join(_fmt_num(c) for c in self.clocks)
        weights = ",".join(_fmt_num(w) for w in self.weights)
        return f"({locs}, ({clocks}), ({weights}))"


def _fmt_num(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else str(float(q)) if q.denominator in (2, 4, 5, 8, 10) else _fmt(q)


def evaluate_update(update: WeightUpdate | Mapping[str, LinExpr],
                    weight_pvals: Mapping[str, Fraction],
                    weights: Mapping[str, Fraction]) -> dict[str, Fraction]:
    """Apply a simultaneous weight update; right-hand sides read the pre-state."""
    items = update.items() if isinstance(update, Mapping) else update
    env = {**{k: Fraction(v) for k, v in weight_pvals.items()}, **{k: Fraction(v) for k, v in weights.items()}}
    out = dict(weights)
    for target, expr in items:
        out[target] = expr.evaluate(env)
    return out


def initial_concrete_state(net: Network) -> ConcreteState:
    return ConcreteState(
        net.initial_locations(),
        tuple(Fraction(0) for _ in net.clocks),
        tuple(Fraction(0) for _ in net.weights),
    )


@dataclass(frozen=True)
class DelayWindow:
    """Admissible delays ``lo (<|<=) d (<|<=) hi``; ``hi=None`` is unbounded."""

    lo: Fraction = Fraction(0)
    lo_strict: bool = False
    hi: Fraction | None = None
    hi_strict: bool = False

    def contains(self, d: Fraction) -> bool:
        if d < self.lo or (self.lo_strict and d == self.lo):
            return False
        if self.hi is not None and (d > self.hi or (self.hi_strict and d == self.hi)):
            return False
        return True

    def is_empty(self) -> bool:
        if self.hi is None:
            return False
        return self.hi < self.lo or (self.hi == self.lo and (self.lo_strict or self.hi_strict))

    def meet(self, rel: str, value: Fraction) -> "DelayWindow":
        lo, ls, hi, hs = self.lo, self.lo_strict, self.hi, self.hi_strict
        if rel in (">", ">=", "="):
            s = rel == ">"
            if value > lo or (value == lo and s):
                lo, ls = value, s
        if rel in ("<", "<=", "="):
            s = rel == "<"
            if hi is None or value < hi or (value == hi and s):
                hi, hs = value, s
        return DelayWindow(lo, ls, hi, hs)

    def __str__(self) -> str:
        left = "(" if self.lo_strict else "["
        right = "inf)" if self.hi is None else (_fmt(self.hi) + (")" if self.hi_strict else "]"))
        return f"{left}{_fmt(self.lo)}, {right}"


@dataclass(frozen=True)
class Successor:
    """One synchronised action with the delays that enable it."""

    action: str
    edges: tuple[tuple[int, Edge], ...]
    window: DelayWindow
    _net: Network = field(repr=False, compare=False)
    _state: ConcreteState = field(repr=False, compare=False)
    _wvals: Mapping = field(repr=False, compare=False)

    def take(self, delay) -> ConcreteState:
        delay = Fraction(delay)
        if not self.window.contains(delay):
            raise ValueError(f"delay {delay} outside {self.window} for {self.action}")
        return _fire(self._net, self._state, self.edges, delay, self._wvals)


def _env(tvals: Mapping, wvals: Mapping) -> dict[str, Fraction]:
    return {**{k: Fraction(v) for k, v in tvals.items()}, **{k: Fraction(v) for k, v in wvals.items()}}


def _clock_window(atoms: Iterable[Atom], clocks: Mapping[str, Fraction], env: Mapping,
                  window: DelayWindow, frozen: frozenset = frozenset()) -> DelayWindow | None:
    """Restrict ``window`` to delays satisfying clock atoms (``frozen`` clocks do not advance)."""
    for a in atoms:
        b = env[a.bound] if isinstance(a.bound, str) else a.bound
        if a.var in frozen:
            if not _OPS[a.rel](Fraction(0), b):
                return None
            continue
        window = window.meet(a.rel, b - clocks[a.var])
        if window.is_empty():
            return None
    return window


def _edge_combinations(net: Network, locs: Sequence[str], action: str):
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


def synchronized_successors(net: Network, state: ConcreteState, tvals: Mapping, wvals: Mapping
                            ) -> list[Successor]:
    """Every enabled (delay window, action) pair from ``state``.

    The window already accounts for source invariants during the delay, the
    guards, and the target invariants after resets.  From a state with an
    urgent location the window is ``[0, 0]``.
    """
    env = _env(tvals, wvals)
    clocks = state.clock_map(net)
    weights = state.weight_map(net)
    base = DelayWindow(hi=Fraction(0)) if net.is_urgent(state.locations) else DelayWindow()
    source_inv = [a for aut, loc in zip(net.automata, state.locations) for a in aut.invariant(loc)]
    base = _clock_window(source_inv, clocks, env, base)
    if base is None:
        return []
    out = []
    candidate_actions = sorted({e.action for aut, loc in zip(net.automata, state.locations)
                                for e in aut.outgoing(loc)})
    for action in candidate_actions:
        for combo in _edge_combinations(net, state.locations, action):
            window = base
            ok = True
            for i, e in combo:
                clock_atoms = [a for a in e.guard if a.var in clocks]
                for a in e.guard:
                    if a.var not in clocks and not a.holds(weights[a.var], env):
                        ok = False
                window = _clock_window(clock_atoms, clocks, env, window) if ok else None
                if window is None:
                    ok = False
                    break
            if not ok:
                continue
            targets = list(state.locations)
            resets: set[str] = set()
            for i, e in combo:
                targets[i] = e.target
                resets |= e.resets
            target_inv = [a for aut, loc in zip(net.automata, targets) for a in aut.invariant(loc)]
            window = _clock_window(target_inv, clocks, env, window, frozenset(resets))
            if window is None:
                continue
            out.append(Successor(action, combo, window, net, state, dict(wvals)))
    return out


def _fire(net: Network, state: ConcreteState, combo, delay: Fraction, wvals: Mapping) -> ConcreteState:
    clocks = state.clock_map(net)
    clocks = {c: v + delay for c, v in clocks.items()}
    weights = state.weight_map(net)
    locs = list(state.locations)
    for i, e in combo:  # fixed automaton order
        for c in e.resets:
            clocks[c] = Fraction(0)
        weights = evaluate_update(e.update, wvals, weights)
        locs[i] = e.target
    return ConcreteState(tuple(locs), tuple(clocks[c] for c in net.clocks),
                         tuple(weights[w] for w in net.weights))


# ---------------------------------------------------------------------------
# concrete search


class SearchBudgetExceeded(RuntimeError):
    """The step budget ran out before the search space was exhausted."""


@dataclass(frozen=True)
class Trace:
    initial: ConcreteState
    steps: tuple[tuple[str, Fraction, ConcreteState], ...]  # (action, delay, state after)

    @property
    def final(self) -> ConcreteState:
        return self.steps[-1][2] if self.steps else self.initial

    @property
    def actions(self) -> list[str]:
        return [a for a, _, _ in self.steps]

    def show(self) -> str:
        parts = [self.initial.show()]
        for action, delay, st in self.steps:
            parts.append(f" -({action}, {_fmt_num(delay)})-> {st.show()}")
        return "".join(parts)


def _grid(net: Network, tvals: Mapping) -> Fraction:
    values = list(net.constants()) + [Fraction(v) for v in tvals.values()]
    den = 1
    for v in values:
        den = math.lcm(den, Fraction(v).denominator)
    if net.has_strict_atoms():
        den *= len(net.clocks) + 1
    return Fraction(1, den)


def _clock_caps(net: Network, tvals: Mapping, g: Fraction) -> dict[str, Fraction]:
    """Per clock, a value above every constant it is compared with (max-constant extrapolation)."""
    caps = {c: Fraction(0) for c in net.clocks}
    for a in net.automata:
        atoms = [x for inv in a.invariants.values() for x in inv] + [x for e in a.edges for x in e.guard]
        for x in atoms:
            if x.var in caps:
                b = Fraction(tvals[x.bound]) if isinstance(x.bound, str) else x.bound
                caps[x.var] = max(caps[x.var], b)
    return {c: v + g for c, v in caps.items()}


class _Abstraction:
    """Maps concrete states to search keys: capped clocks, dead clocks and weights zeroed."""

    def __init__(self, net: Network, caps: Mapping[str, Fraction]):
        self.net = net
        self.caps = [caps[c] for c in net.clocks]
        self.clock_index = {c: i for i, c in enumerate(net.clocks)}
        self.weight_index = {w: i for i, w in enumerate(net.weights)}
        self.live = [clock_liveness(a) for a in net.automata]
        self.exports = [weight_exports(a) for a in net.automata]

    def live_clocks(self, locs) -> list[int]:
        out = set()
        for i, loc in enumerate(locs):
            out |= self.live[i][loc]
        return sorted(self.clock_index[c] for c in out)

    def key(self, st: ConcreteState):
        live = set(self.live_clocks(st.locations))
        clocks = tuple(min(v, self.caps[i]) if i in live else 0 for i, v in enumerate(st.clocks))
        read = set()
        for i, loc in enumerate(st.locations):
            read |= self.exports[i][loc]
        weights = tuple(w if name in read else 0 for name, w in zip(self.net.weights, st.weights))
        return st.locations, clocks, weights

    def horizon(self, st: ConcreteState) -> Fraction:
        """Delay after which every live clock sits above its cap."""
        live = self.live_clocks(st.locations)
        return max((self.caps[i] - st.clocks[i] for i in live), default=Fraction(0))


def run_reaches(net: Network, tvals: Mapping, wvals: Mapping,
                target: Callable[[tuple[str, ...]], bool] | None = None,
                step_budget: int = 200_000, target_action: str | None = None) -> Trace | None:
    """Depth-first search for a run reaching ``target`` (locations) or firing ``target_action``.

    Delays range over multiples of a grid step derived from the constants and
    parameter values.  Clocks above the largest constant they are compared
    with are capped, and clocks or weights that can no longer be read are
    ignored when detecting revisits; both keep the space finite and small.
    Returns a witness :class:`Trace` or ``None``; raises
    :class:`SearchBudgetExceeded` when ``step_budget`` expansions were not
    enough to decide.
    """
    if step_budget <= 0:
        raise ValueError("step budget must be positive")
    if target is None and target_action is None:
        raise ValueError("need a target predicate or a target action")
    g = _grid(net, tvals)
    absn = _Abstraction(net, _clock_caps(net, tvals, g))
    init = initial_concrete_state(net)
    if target is not None and target(init.locations):
        return Trace(init, ())

    visited = {absn.key(init)}
    stack: list[tuple[ConcreteState, tuple]] = [(init, ())]
    expansions = 0
    while stack:
        state, path = stack.pop()
        expansions += 1
        if expansions > step_budget:
            raise SearchBudgetExceeded(f"gave up after {step_budget} expansions")
        horizon = absn.horizon(state)
        children = []
        for succ in synchronized_successors(net, state, tvals, wvals):
            for d in _grid_delays(succ.window, g, horizon):
                nxt = succ.take(d)
                step = (succ.action, d, nxt)
                if target_action is not None and succ.action == target_action:
                    return Trace(init, path + (step,))
                if target is not None and target(nxt.locations):
                    return Trace(init, path + (step,))
                key = absn.key(nxt)
                if key in visited:
                    continue
                visited.add(key)
                children.append((nxt, path + (step,)))
        stack.extend(reversed(children))
    log.debug("search exhausted after %d expansions", expansions)
    return None


def _grid_delays(window: DelayWindow, g: Fraction, horizon: Fraction) -> list[Fraction]:
    """Grid delays in ``window`` up to ``horizon`` (plus the first one past it)."""
    k = math.ceil(window.lo / g)
    out = []
    while True:
        d = k * g
        if window.hi is not None and d > window.hi:
            break
        if window.contains(d):
            out.append(d)
            if d > horizon:
                break
        k += 1
    return out


# ---------------------------------------------------------------------------
# the small example automaton used in the docs and tests


def coffee_machine() -> Pwta:
    """Three-location coffee machine with timing parameters p1, p2 and weight parameter q."""
    w = LinExpr.var("w")
    q = LinExpr.var("q")
    edges = (
        Edge("l1", (), "press", frozenset({"x", "y"}), (("w", LinExpr.constant(2)),), "l2"),
        Edge("l2", (Atom("y", "<=", 5), Atom("x", ">", 1)), "press", frozenset({"x"}),
             (("w", w + q),), "l2"),
        Edge("l2", (Atom("y", "=", "p1"),), "prepare", frozenset(), (), "l3"),
        Edge("l3", (Atom("y", "=", "p2"),), "serve", frozenset(), (), "l1"),
    )
    return Pwta(
        name="coffee",
        locations=("l1", "l2", "l3"),
        initial="l1",
        edges=edges,
        clocks=("x", "y"),
        timing_parameters=frozenset({"p1", "p2"}),
        weights=("w",),
        weight_parameters=frozenset({"q"}),
        accepting=frozenset({"l1"}),
    )
