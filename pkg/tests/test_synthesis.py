import json
from fractions import Fraction

import pytest

from aftsynth.galileo import parse
from aftsynth.polyhedra import Polyhedron
from aftsynth.pwta import Network, coffee_machine
from aftsynth.synthesis import (
    ConstraintResult, check_valuation, ef_synth, equivalent, initial_state, result_covers,
    symbolic_successors, universe_of,
)
from aftsynth.translation import build_network
from conftest import synth

F = Fraction
PARAMETRIC = 'toplevel "g"; "g" or "a" "b"; "a" mintime=2 maxtime=p cost=c; "b" time=3 cost=4 damage=1;'


def blocks(out, *texts):
    u = universe_of(out.network)
    return [Polyhedron.parse(u, t) for t in texts]


def test_single_leaf(leaf_tree):
    _, result = synth(leaf_tree)
    assert result.to_text() == "total_time = 5\n& total_cost = 50\n& total_damage = 0\n"


def test_paper_or_example(or_tree):
    out, result = synth(or_tree)
    want = blocks(out,
                  "30 <= total_time & total_time <= 70 & total_cost = 30 & total_damage = 0",
                  "50 <= total_time & total_time <= 100 & total_cost = 50 & total_damage = 0")
    assert equivalent(result.disjuncts, want)
    assert "\n\nOR\n\n" in result.to_text()


def test_parametric_leaf():
    out, result = synth(parse(PARAMETRIC))
    want = blocks(out,
                  "2 <= total_time & total_time <= p & total_cost = c & total_damage = 0",
                  "total_time = 3 & total_cost = 4 & total_damage = 1 & p >= 2")
    assert equivalent(result.disjuncts, want), result.to_text()


@pytest.mark.parametrize("options", [
    dict(subsumption=False), dict(reduce=False), dict(seed=7), dict(jobs=2),
])
def test_options_do_not_change_the_result(options):
    tree = parse(PARAMETRIC)
    _, base = synth(tree)
    _, other = synth(tree, **options)
    assert equivalent(base.disjuncts, other.disjuncts)


def test_subsumption_saves_states(iot_tree):
    out = build_network(iot_tree)
    a = ef_synth(out.network, out.target())
    b = ef_synth(out.network, out.target(), subsumption=False, max_states=200_000)
    assert a.states <= b.states
    assert equivalent(a.disjuncts, b.disjuncts)


def test_state_budget():
    out = build_network(parse(PARAMETRIC))
    with pytest.raises(RuntimeError):
        ef_synth(out.network, out.target(), max_states=2)


def test_fail_target(or_tree):
    out, result = synth(or_tree, target="fail")
    # the observer's fail edge binds nothing; only timing parameters stay non-negative
    assert len(result) == 1
    assert result.disjuncts[0].same_set(blocks(out, "total_time >= 0")[0])


def test_check_valuation():
    _, result = synth(parse(PARAMETRIC))
    base = {"p": 5, "c": 9, "total_damage": 0}
    assert check_valuation(result, {**base, "total_time": 4, "total_cost": 9})
    assert not check_valuation(result, {**base, "total_time": 6, "total_cost": 9})
    assert check_valuation(result, {**base, "total_time": 3, "total_cost": 4, "total_damage": 1})
    with pytest.raises(KeyError):
        check_valuation(result, {"p": 1})


def test_json_roundtrip():
    out, result = synth(parse(PARAMETRIC))
    data = json.loads(json.dumps(result.to_json()))
    again = ConstraintResult.from_json(universe_of(out.network), data)
    assert equivalent(again.disjuncts, result.disjuncts)
    assert again.witnesses == result.witnesses
    assert all(result_covers(again, d) for d in result.disjuncts)


def test_witness_reaches_observer(or_tree):
    _, result = synth(or_tree)
    for w in result.witnesses:
        assert w[-1] == "successRoot" and w[0] == "start_A"


def test_initial_state_and_successors():
    net = Network((coffee_machine(),))
    s = initial_state(net)
    u = s.constraint.universe
    assert s.locations == ("l1",)
    assert s.constraint.same_set(Polyhedron.parse(u, "x = y & y >= 0 & w = 0 & p1 >= 0 & p2 >= 0"))
    (action, nxt), = symbolic_successors(net, s)
    assert action == "press" and nxt.locations == ("l2",)
    assert nxt.constraint.includes(Polyhedron.parse(u, "x = y & y = 1 & w = 2 & p1 >= 0 & p2 >= 0"))
    assert not nxt.constraint.contains_point({"x": 1, "y": 2, "w": 2, "p1": 0, "p2": 0, "q": 0})
