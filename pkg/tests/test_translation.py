import itertools
from fractions import Fraction

import pytest

from aftsynth.galileo import parse
from aftsynth.pwta import Atom, run_reaches
from aftsynth.translation import ROOT, build_network


def tree2(gate, n=2):
    kids = " ".join(f'"c{i}"' for i in range(n))
    leaves = "".join(f'"c{i}" time={i + 1} cost={10 * (i + 1)};' for i in range(n))
    return parse(f'toplevel "g"; "g" {gate} {kids};{leaves}')


def gate_automaton(out, name="g"):
    return out.network[out.automata[name]]


def completion(aut, out, children, events):
    """Feed child completions to a gate in isolation; returns 'success', 'fail' or None."""
    start, succ, fail = out.actions["g"]
    starts = {out.actions[c][0] for c in children}
    loc = aut.initial

    def settle(loc):
        while True:
            nxt = [e for e in aut.outgoing(loc) if e.action in starts | {succ, fail}]
            if not nxt:
                return loc, None
            e = nxt[0]
            if e.action == succ:
                return e.target, "success"
            if e.action == fail:
                return e.target, "fail"
            loc = e.target

    loc = next(e.target for e in aut.outgoing(loc) if e.action == start)
    loc, res = settle(loc)
    for child, outcome in events:
        if res is not None:
            return res
        act = out.actions[child][1 if outcome else 2]
        edges = [e for e in aut.outgoing(loc) if e.action == act]
        if not edges:
            return "blocked"
        loc, res = settle(edges[0].target)
    return res


def test_leaf_shape():
    out = build_network(parse('toplevel "g"; "g" and "L" "M"; "L" time=5 cost=wL; "M" mintime=50 maxtime=100;'))
    leaf = out.network[out.automata["L"]]
    assert leaf.locations == ("idle", "running", "success", "fail")
    assert leaf.invariant("running") == (Atom("x_L", "<=", Fraction(5)),)
    succ = [e for e in leaf.edges if e.action == "success_L"][0]
    fail = [e for e in leaf.edges if e.action == "fail_L"][0]
    assert succ.guard == fail.guard == (Atom("x_L", ">=", Fraction(5)),)
    (target, expr), = succ.update
    assert target == "w_cost_g" and str(expr) in ("w_cost_g + wL", "wL + w_cost_g")
    m = out.network[out.automata["M"]]
    assert m.invariant("running") == (Atom("x_M", "<=", Fraction(100)),)


@pytest.mark.parametrize("text, count", [
    ('toplevel "L"; "L" time=5 cost=50;', 2),
    ('toplevel "A"; "A" or "B" "C"; "B" time=1; "C" time=2;', 4),
])
def test_automaton_count(text, count):
    assert len(build_network(parse(text)).network) == count


def test_iot_count(iot_tree):
    out = build_network(iot_tree)
    assert len(out.network) == 13
    assert out.network.automata[-1].name == ROOT


def test_and_has_ten_locations():
    for strict in (False, True):
        aut = gate_automaton(build_network(tree2("and"), strict_shapes=strict))
        assert len(aut.locations) == 10


def test_sand_single_success_path():
    out = build_network(tree2("sand", 3), strict_shapes=True)
    aut = gate_automaton(out)
    into_failing = [e for e in aut.edges if e.target == "failing"]
    assert len(into_failing) == 3
    assert len([e for e in aut.edges if e.target == "ready"]) == 1


def test_vot_1of2_behaves_like_or():
    a, b = build_network(tree2("or")), build_network(tree2("1of2"))
    children = ["c0", "c1"]
    for order in itertools.permutations(children):
        for outcomes in itertools.product((True, False), repeat=2):
            ev = list(zip(order, outcomes))
            assert completion(gate_automaton(a), a, children, ev) == completion(gate_automaton(b), b, children, ev)


@pytest.mark.parametrize("gate, outcomes, order, expected", [
    ("and", (1, 1), (0, 1), "success"), ("and", (1, 0), (0, 1), "fail"),
    ("or", (0, 1), (0, 1), "success"), ("or", (0, 0), (1, 0), "fail"),
    ("xor", (1, 0), (1, 0), "success"), ("xor", (1, 1), (0, 1), "fail"), ("xor", (0, 0), (0, 1), "fail"),
    ("pand", (1, 1), (0, 1), "success"), ("pand", (1, 1), (1, 0), "fail"),
    ("2of3", (1, 0, 1), (0, 1, 2), "success"), ("2of3", (1, 0, 0), (0, 1, 2), "fail"),
])
def test_parallel_gate_decisions(gate, outcomes, order, expected):
    n = len(outcomes)
    out = build_network(tree2(gate, n))
    children = [f"c{i}" for i in range(n)]
    ev = [(children[i], bool(outcomes[i])) for i in order]
    assert completion(gate_automaton(out), out, children, ev) == expected


def test_action_names_are_disjoint(iot_tree):
    out = build_network(iot_tree)
    labels = [a for triple in out.actions.values() for a in triple]
    assert len(labels) == len(set(labels))


@pytest.mark.parametrize("gate", ["and", "or", "sand", "sor", "pand", "xor", "fdep", "wsp", "2of3"])
@pytest.mark.parametrize("strict", [False, True])
def test_gate_automata_are_dags_and_live(gate, strict):
    out = build_network(tree2(gate, 3 if gate not in ("xor",) else 2), strict_shapes=strict)
    for aut in out.network:
        aut.check(out.network.weights)
        graph = {loc: {e.target for e in aut.outgoing(loc) if e.target != loc} for loc in aut.locations}
        # acyclic apart from self-loops
        seen = {}

        def visit(v):
            seen[v] = 1
            for w in graph[v]:
                assert seen.get(w) != 1, f"cycle through {w} in {aut.name}"
                if w not in seen:
                    visit(w)
            seen[v] = 2

        for loc in aut.locations:
            if loc not in seen:
                visit(loc)
        if aut.name == out.automata["g"]:
            outputs = {out.actions["g"][1], out.actions["g"][2]}
            emitting = {e.source for e in aut.edges if e.action in outputs}
            reach = set(emitting)
            changed = True
            while changed:
                changed = False
                for loc, succs in graph.items():
                    if loc not in reach and succs & reach:
                        reach.add(loc)
                        changed = True
            terminal = {e.target for e in aut.edges if e.action in outputs}
            assert set(aut.locations) - terminal <= reach


def test_weight_flow_conservation():
    tree = parse('toplevel "g"; "g" sand "a" "h"; "h" or "b" "c" cost=3; "a" time=1 cost=5;'
                 '"b" time=2 cost=7; "c" time=4 cost=11 damage=2;')
    out = build_network(tree)
    costs = {"g": 0, "a": 5, "b": 7, "c": 11, "h": 3}
    for total_time, total_cost in ((3, 15), (5, 19)):
        trace = run_reaches(out.network, {"total_time": total_time},
                            {"total_cost": total_cost, "total_damage": 2 if total_cost == 19 else 0},
                            out.target())
        assert trace is not None
        fired = {n for n, (_, s, _) in out.actions.items() if s in trace.actions}
        w = trace.final.weight_map(out.network)
        assert w["current_cost_root"] == sum(costs[n] for n in fired)
