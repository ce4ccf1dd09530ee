"""Attack-fault tree to PWTA network.

Every node becomes one automaton that talks to its parent through three
actions, ``start_<n>``, ``success_<n>`` and ``fail_<n>``.  Weights flow upwards:
a node's success edge adds its accumulated cost and damage to its parent's
weight variables.  An observer automaton (``rootTA``) starts the top node and,
when it succeeds, binds the observation parameters ``total_time``,
``total_cost`` and ``total_damage``.

Gate automata are generated from a small decision function per gate kind
(:func:`_decide`) over the vector of child statuses, so adding a gate kind
means adding one rule rather than drawing an automaton by hand.

By default, a finished gate keeps listening to the completion actions of
children that are still running (self-loops on its terminal locations).
Without these loops a late child would be blocked forever, its invariant
would stop time for the whole network, and runs that should succeed would be
cut off.  ``strict_shapes=True`` drops the loops (except on PAND, which has
them in any case) to reproduce the unmodified figures.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .galileo import AttackFaultTree, Const, GateKind, GateNode, LeafNode, Param
from .polyhedra import LinExpr
from .pwta import Atom, Edge, Network, Pwta

__all__ = [
    "TranslationOutput",
    "translate_leaf",
    "translate_gate",
    "build_network",
    "ROOT",
    "OBSERVATION",
]

ROOT = "rootTA"
OBSERVATION = {"time": "total_time", "cost": "total_cost", "damage": "total_damage"}
ROOT_COST = "current_cost_root"
ROOT_DAMAGE = "current_damage_root"
ROOT_CLOCK = "abs_time"

# child status codes inside a gate
IDLE, RUN, SUCC, FAIL = "i", "r", "s", "f"


def _ident(name: str) -> str:
    s = re.sub(r"\W", "_", name)
    return s if s and not s[0].isdigit() else "n_" + s


@dataclass(frozen=True)
class NodeNames:
    """Identifiers derived from one tree node."""

    automaton: str
    start: str
    success: str
    fail: str
    cost: str | None = None  # gate weight variables
    damage: str | None = None
    clock: str | None = None  # leaf clock


def _names(tree: AttackFaultTree) -> dict[str, NodeNames]:
    taken = {ROOT, ROOT_COST, ROOT_DAMAGE, ROOT_CLOCK, *OBSERVATION.values()} | set(tree.parameters)
    out = {}
    for node in tree.walk():
        base = _ident(node.name)
        ident = base
        k = 2
        while ident in taken:
            ident = f"{base}_{k}"
            k += 1
        taken.add(ident)
        if node.is_leaf:
            out[node.name] = NodeNames(ident, f"start_{ident}", f"success_{ident}", f"fail_{ident}",
                                       clock=f"x_{ident}")
        else:
            out[node.name] = NodeNames(ident, f"start_{ident}", f"success_{ident}", f"fail_{ident}",
                                       cost=f"w_cost_{ident}", damage=f"w_dmg_{ident}")
    return out


def _bound(v) -> Fraction | str:
    return v.value if isinstance(v, Const) else v.name


def _weight_term(v) -> LinExpr:
    if isinstance(v, Const):
        return LinExpr.constant(v.value)
    return LinExpr.var(v.name)


def _forward(parent_cost: str, parent_dmg: str, cost: LinExpr, dmg: LinExpr) -> tuple:
    """Update adding ``cost``/``dmg`` to the parent's variables (zero terms dropped)."""
    upd = []
    if cost.terms or cost.const:
        upd.append((parent_cost, LinExpr.var(parent_cost) + cost))
    if dmg.terms or dmg.const:
        upd.append((parent_dmg, LinExpr.var(parent_dmg) + dmg))
    return tuple(upd)


def _params(*values) -> tuple[frozenset, frozenset]:
    return (frozenset(v.name for v in values[:2] if isinstance(v, Param)),
            frozenset(v.name for v in values[2:] if isinstance(v, Param)))


# ---------------------------------------------------------------------------
# leaves


def translate_leaf(leaf: LeafNode, names: NodeNames, parent_cost: str, parent_dmg: str,
                   forced: bool = False) -> Pwta:
    """Four locations: idle, running (``x <= max``), success and fail (both ``x >= min``).

    ``forced`` adds an edge taking ``success`` straight from idle, used for the
    dependent events of an FDEP gate.
    """
    x = names.clock
    lo, hi = _bound(leaf.min_time), _bound(leaf.max_time)
    update = _forward(parent_cost, parent_dmg, _weight_term(leaf.cost), _weight_term(leaf.damage))
    edges = [
        Edge("idle", (), names.start, frozenset({x}), (), "running"),
        Edge("running", (Atom(x, ">=", lo),), names.success, frozenset(), update, "success"),
        Edge("running", (Atom(x, ">=", lo),), names.fail, frozenset(), (), "fail"),
    ]
    if forced:
        edges.append(Edge("idle", (), names.success, frozenset(), update, "success"))
    tparams, wparams = _params(leaf.min_time, leaf.max_time, leaf.cost, leaf.damage)
    return Pwta(
        name=names.automaton,
        locations=("idle", "running", "success", "fail"),
        initial="idle",
        edges=tuple(edges),
        clocks=(x,),
        timing_parameters=tparams,
        weights=tuple(dict.fromkeys((parent_cost, parent_dmg))),
        weight_parameters=wparams,
        invariants={"running": (Atom(x, "<=", hi),)},
        accepting=frozenset({"success"}),
    )


# ---------------------------------------------------------------------------
# gates


Decision = tuple  # ("wait",) | ("activate", [idx...]) | ("success",) | ("fail",) | ("prefail",) | ("force",)


def _initial_activation(kind: GateKind, n: int) -> list[int]:
    if kind in (GateKind.SAND, GateKind.SPARE, GateKind.SOR, GateKind.FDEP):
        return [0]
    return list(range(n))


def _decide(gate: GateNode, status: str, child: int, outcome: str) -> Decision:
    """Next step of ``gate`` after ``child`` reported ``outcome`` (status already updated)."""
    kind = gate.kind
    n = len(status)
    s = status.count(SUCC)
    f = status.count(FAIL)
    if kind is GateKind.AND:
        if outcome == FAIL:
            return ("fail",)
        return ("success",) if s == n else ("wait",)
    if kind is GateKind.OR:
        if outcome == SUCC:
            return ("success",)
        return ("fail",) if f == n else ("wait",)
    if kind in (GateKind.SAND, GateKind.SPARE):
        if outcome == FAIL:
            return ("fail",)
        return ("success",) if child == n - 1 else ("activate", [child + 1])
    if kind is GateKind.SOR:
        if outcome == SUCC:
            return ("success",)
        return ("fail",) if child == n - 1 else ("activate", [child + 1])
    if kind is GateKind.PAND:
        if outcome == FAIL or any(status[i] != SUCC for i in range(child)):
            return ("prefail",)
        return ("success",) if s == n else ("wait",)
    if kind is GateKind.XOR:
        if s + f < n:
            return ("wait",)
        return ("success",) if s == 1 else ("fail",)
    if kind is GateKind.FDEP:
        return ("force",) if outcome == SUCC else ("fail",)
    if kind is GateKind.VOT:
        k = gate.threshold
        if s >= k:
            return ("success",)
        if f >= n - k + 1:
            return ("fail",)
        return ("wait",)
    raise ValueError(f"unsupported gate kind {kind}")


@dataclass
class _Builder:
    name: str
    locations: list = field(default_factory=list)
    urgent: set = field(default_factory=set)
    edges: list = field(default_factory=list)

    def loc(self, name: str, urgent: bool = False) -> str:
        if name not in self.locations:
            self.locations.append(name)
        if urgent:
            self.urgent.add(name)
        return name

    def edge(self, src, action, dst, update=()):
        self.edges.append(Edge(src, (), action, frozenset(), tuple(update), dst))


def translate_gate(gate: GateNode, names: NodeNames, child_names: list[NodeNames],
                   parent_cost: str, parent_dmg: str, strict_shapes: bool = False,
                   forced: bool = False) -> Pwta:
    """Automaton of one gate; see the module docstring for the shared layout."""
    n = len(gate.children)
    b = _Builder(names.automaton)
    b.loc("idle")
    own_cost = LinExpr.var(names.cost) + _weight_term(gate.cost)
    own_dmg = LinExpr.var(names.damage) + _weight_term(gate.damage)
    out_update = _forward(parent_cost, parent_dmg, own_cost, own_dmg)
    ready = b.loc("ready", urgent=True)
    failing = b.loc("failing", urgent=True)
    done = b.loc("done")
    failed = b.loc("failed")
    b.edge(ready, names.success, done, out_update)
    b.edge(failing, names.fail, failed)
    if forced:
        b.edge("idle", names.success, done, _forward(parent_cost, parent_dmg,
                                                    _weight_term(gate.cost), _weight_term(gate.damage)))

    def wait_loc(status: str) -> str:
        return b.loc(f"w_{status}")

    def chain(src: str, status: str, actions: list[str], dst: str, tag: str) -> None:
        """Urgent chain ``src -a1-> . -a2-> ... -> dst``."""
        cur = src
        for k, act in enumerate(actions):
            nxt = dst if k == len(actions) - 1 else b.loc(f"{tag}_{status}_{k}", urgent=True)
            b.edge(cur, act, nxt)
            cur = nxt

    # statuses in which some child is still running when the gate stops
    leftovers: dict[str, set[int]] = {done: set(), failed: set()}
    prefail = None

    init = [IDLE] * n
    first = _initial_activation(gate.kind, n)
    for i in first:
        init[i] = RUN
    init_status = "".join(init)
    start_loc = b.loc("started", urgent=True)
    b.edge("idle", names.start, start_loc)
    chain(start_loc, init_status, [child_names[i].start for i in first], wait_loc(init_status), "act")

    todo = [init_status]
    seen = {init_status}
    while todo:
        status = todo.pop()
        src = wait_loc(status)
        for i, st in enumerate(status):
            if st != RUN:
                continue
            for outcome, act in ((SUCC, child_names[i].success), (FAIL, child_names[i].fail)):
                new = status[:i] + outcome + status[i + 1:]
                decision = _decide(gate, new, i, outcome)
                kind = decision[0]
                if kind == "wait":
                    b.edge(src, act, wait_loc(new))
                    if new not in seen:
                        seen.add(new)
                        todo.append(new)
                elif kind == "activate":
                    nxt = list(new)
                    for j in decision[1]:
                        nxt[j] = RUN
                    nxt = "".join(nxt)
                    mid = b.loc(f"act_{new}", urgent=True)
                    b.edge(src, act, mid)
                    chain(mid, new, [child_names[j].start for j in decision[1]], wait_loc(nxt), "act")
                    if nxt not in seen:
                        seen.add(nxt)
                        todo.append(nxt)
                elif kind == "success":
                    b.edge(src, act, ready)
                    leftovers[done] |= {j for j, c in enumerate(new) if c == RUN}
                elif kind == "fail":
                    b.edge(src, act, failing)
                    leftovers[failed] |= {j for j, c in enumerate(new) if c == RUN}
                elif kind == "prefail":
                    prefail = prefail or b.loc("prefail", urgent=True)
                    b.edge(src, act, prefail)
                    leftovers[failed] |= {j for j, c in enumerate(new) if c == RUN}
                elif kind == "force":
                    mid = b.loc(f"force_{new}", urgent=True)
                    b.edge(src, act, mid)
                    deps = [child_names[j].success for j in range(n) if new[j] == IDLE]
                    chain(mid, new, deps, ready, "force")
    if prefail:
        b.edge(prefail, names.fail, failed)
    absorb = not strict_shapes or gate.kind is GateKind.PAND
    if absorb:
        for loc, kids in leftovers.items():
            for j in sorted(kids):
                b.edge(loc, child_names[j].success, loc)
                b.edge(loc, child_names[j].fail, loc)
        if prefail:
            for j in sorted(leftovers[failed]):
                b.edge(prefail, child_names[j].success, prefail)
                b.edge(prefail, child_names[j].fail, prefail)
    _, wparams = _params(Const(Fraction(0)), Const(Fraction(0)), gate.cost, gate.damage)
    weights = tuple(dict.fromkeys((names.cost, names.damage, parent_cost, parent_dmg)))
    return Pwta(
        name=names.automaton,
        locations=tuple(b.locations),
        initial="idle",
        edges=tuple(b.edges),
        weights=weights,
        weight_parameters=wparams,
        urgent=frozenset(b.urgent),
        accepting=frozenset({done}),
    )


# ---------------------------------------------------------------------------
# the whole network


@dataclass(frozen=True)
class TranslationOutput:
    network: Network
    observation: Mapping[str, str]
    actions: Mapping[str, tuple[str, str, str]]  # node -> (start, success, fail)
    weights: Mapping[str, tuple[str, str]]  # gate -> (cost var, damage var)
    automata: Mapping[str, str]  # node -> automaton name
    strict_shapes: bool = False

    @property
    def root_index(self) -> int:
        return self.network.index(ROOT)

    def target(self, which: str = "success") -> Callable[[tuple], bool]:
        """Location predicate: rootTA in its success (or fail) location."""
        loc = {"success": "success", "fail": "failed"}[which]
        i = self.root_index
        return lambda locs: locs[i] == loc

    @property
    def parameters(self) -> tuple[str, ...]:
        return self.network.timing_parameters + self.network.weight_parameters


def _root(top: NodeNames) -> Pwta:
    guard = (
        Atom(ROOT_CLOCK, "=", OBSERVATION["time"]),
        Atom(ROOT_COST, "=", OBSERVATION["cost"]),
        Atom(ROOT_DAMAGE, "=", OBSERVATION["damage"]),
    )
    edges = (
        Edge("idle", (), top.start, frozenset({ROOT_CLOCK}), (), "running"),
        Edge("running", (), top.success, frozenset(), (), "succeeding"),
        Edge("succeeding", guard, "successRoot", frozenset(), (), "success"),
        Edge("running", (), top.fail, frozenset(), (), "failing"),
        Edge("failing", (), "failRoot", frozenset(), (), "failed"),
    )
    return Pwta(
        name=ROOT,
        locations=("idle", "running", "succeeding", "success", "failing", "failed"),
        initial="idle",
        edges=edges,
        clocks=(ROOT_CLOCK,),
        timing_parameters=frozenset({OBSERVATION["time"]}),
        weights=(ROOT_COST, ROOT_DAMAGE),
        weight_parameters=frozenset({OBSERVATION["cost"], OBSERVATION["damage"]}),
        urgent=frozenset({"succeeding", "failing"}),
        accepting=frozenset({"success"}),
        weight_guards=True,
    )


def build_network(tree: AttackFaultTree, strict_shapes: bool = False) -> TranslationOutput:
    """Translate a validated tree: one automaton per node plus ``rootTA`` (listed last)."""
    names = _names(tree)
    forced = set()
    for gate in tree.gates:
        if gate.kind is GateKind.FDEP:
            forced.update(gate.children[1:])
    parent: dict[str, str] = {}
    for gate in tree.gates:
        for c in gate.children:
            parent[c] = gate.name
    automata = []
    for node in tree.walk():
        nn = names[node.name]
        if node.name in parent:
            pn = names[parent[node.name]]
            pc, pd = pn.cost, pn.damage
        else:
            pc, pd = ROOT_COST, ROOT_DAMAGE
        if node.is_leaf:
            automata.append(translate_leaf(node, nn, pc, pd, forced=node.name in forced))
        else:
            automata.append(translate_gate(node, nn, [names[c] for c in node.children], pc, pd,
                                           strict_shapes=strict_shapes, forced=node.name in forced))
    automata.append(_root(names[tree.root]))
    return TranslationOutput(
        network=Network(tuple(automata)),
        observation=dict(OBSERVATION),
        actions={k: (v.start, v.success, v.fail) for k, v in names.items()},
        weights={k: (v.cost, v.damage) for k, v in names.items() if v.cost},
        automata={k: v.automaton for k, v in names.items()},
        strict_shapes=strict_shapes,
    )
