import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from aftsynth.polyhedra import (
    LinExpr, Polyhedron, PolyhedronSyntaxError, Sort, Universe, UniverseMismatch, affine_image,
    covers, difference, eliminate, includes, intersect, reset, time_elapse,
)
from fm_oracle import fibre_nonempty, random_system

U = Universe.of(clocks=["x", "y"], timing=["p", "q"], weights=["w"], weight_params=["c"])
V4 = Universe.of(timing=["v0", "v1", "v2", "v3"])


def P(text, u=U):
    return Polyhedron.parse(u, text)


# -- construction and text ----------------------------------------------------

def test_universe_sorts():
    assert U.sort("x") is Sort.CLOCK
    assert U.sort("c") is Sort.WEIGHT_PARAMETER
    assert U.names_of(Sort.TIMING_PARAMETER) == ("p", "q")
    with pytest.raises(ValueError):
        Universe(("a", "a"), (Sort.CLOCK, Sort.CLOCK))
    with pytest.raises(TypeError):
        Universe.of(bogus=["a"])


@pytest.mark.parametrize("text, expected", [
    ("2*p + 3 >= 2*x", "2*p + 3 >= 2*x"),
    ("c + 180 = w", "c + 180 = w"),
    ("x <= 5", "5 >= x"),
    ("13 >= p >= 8", "13 >= p & p >= 8"),
    ("True", "True"),
    ("False", "False"),
])
def test_text_form(text, expected):
    assert P(text).same_set(P(expected))
    assert P(P(text).to_text()).same_set(P(text))


def test_chain_and_fractions():
    p = P("1/2 <= x < 3/2 & p = 2.5")
    assert p.contains_point({"x": Fraction(1, 2), "p": Fraction(5, 2)})
    assert not p.contains_point({"x": Fraction(3, 2), "p": Fraction(5, 2)})


@pytest.mark.parametrize("bad", ["x <=", "x <= 5 &", "2*z <= 1", "x <= 5 )"])
def test_parse_errors(bad):
    with pytest.raises((PolyhedronSyntaxError, KeyError)):
        P(bad)


def test_json_roundtrip():
    p = P("2*p + 3 >= 2*x & x > 1/3 & c + 180 = w")
    assert Polyhedron.from_json(U, p.to_json()).same_set(p)
    assert Polyhedron.from_json(U, Polyhedron.bottom(U).to_json()).is_empty()


def test_universe_mismatch():
    with pytest.raises(UniverseMismatch):
        intersect(P("x <= 1"), Polyhedron.top(V4))


# -- emptiness, inclusion, projection ----------------------------------------

@pytest.mark.parametrize("text, empty", [
    ("x <= 1 & x >= 2", True),
    ("x < 1 & x >= 1", True),
    ("x <= 1 & x >= 1", False),
    ("x - y <= 0 & y - p <= 0 & p - x < 0", True),
    ("2*x = 1 & 4*x = 2", False),
    ("x + y <= 1 & x >= 1 & y > 0", True),
])
def test_emptiness(text, empty):
    assert P(text).is_empty() is empty


def test_eliminate_exact():
    p = P("x <= p & p <= 3 & x >= 1")
    assert eliminate(p, ["p"]).same_set(P("1 <= x & x <= 3"))
    assert p.project(["p"]).same_set(P("1 <= p & p <= 3"))
    # strictness survives combination
    q = P("x < p & p <= 3")
    assert q.eliminate(["p"]).same_set(P("x < 3"))


def test_includes_free_variable():
    assert not includes(P("x <= 1"), P("y <= 1"))
    assert includes(P("x <= 2"), P("x <= 1 & y <= 1"))
    assert includes(Polyhedron.top(U), Polyhedron.bottom(U))


def test_time_elapse_and_reset():
    p = P("x = 0 & y = 2")
    assert time_elapse(p).same_set(P("y - x = 2 & x >= 0"))
    assert time_elapse(p, P("x <= 5")).same_set(P("y - x = 2 & 0 <= x & x <= 5"))
    assert reset(P("x = 3 & y = 4 & p = x"), ["x"]).same_set(P("x = 0 & y = 4 & p = 3"))
    with pytest.raises(ValueError):
        reset(p, ["p"])


def test_affine_image():
    p = P("w = 2 & c >= 0")
    assert affine_image(p, {"w": LinExpr.parse("w + c")}).same_set(P("w - c = 2 & c >= 0"))
    assert affine_image(p, {"w": LinExpr.parse("3")}).same_set(P("w = 3 & c >= 0"))
    with pytest.raises(ValueError):
        affine_image(p, {"x": LinExpr.parse("1")})
    with pytest.raises(ValueError):
        affine_image(p, {"w": LinExpr.parse("x")})


def test_difference_and_covers():
    a, b = P("0 <= x & x <= 4"), P("1 <= x & x <= 2")
    pieces = difference(a, b)
    assert all((x & b).is_empty() for x in pieces)
    for s, t in itertools.combinations(pieces, 2):
        assert (s & t).is_empty()
    assert covers(pieces + [b], a)
    assert not covers(pieces, a)
    assert covers([P("x <= 2"), P("x >= 2")], Polyhedron.top(U))
    assert not covers([P("x < 2"), P("x > 2")], P("x >= -5 & x <= 5"))
    assert not covers([P("x <= 2 & y <= 0")], P("x <= 1"))


def test_bounds_and_samples():
    p = P("1 < x & x <= 3 & p = x")
    assert p.bounds("x") == (1, True, 3, False)
    pts = p.sample_points()
    assert pts and all(p.contains_point(pt) for pt in pts)


# -- property-based -----------------------------------------------------------

coef = st.integers(-5, 5)
row = st.tuples(st.lists(coef, min_size=4, max_size=4), st.sampled_from(["<=", "<", "="]),
                st.integers(-6, 6))


def build(rows, u=V4):
    atoms = []
    for cs, rel, b in rows:
        e = LinExpr.build({f"v{i}": c for i, c in enumerate(cs) if c})
        atoms.append((e, rel, LinExpr.constant(b)))
    return Polyhedron.from_atoms(u, atoms)


points = st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=4), min_size=4, max_size=4)


@settings(max_examples=200, deadline=None)
@given(st.lists(row, min_size=1, max_size=4), points)
def test_membership_matches_rows(rows, pt):
    p = build(rows)
    env = {f"v{i}": v for i, v in enumerate(pt)}
    expected = all(
        {"<=": lambda a, b: a <= b, "<": lambda a, b: a < b, "=": lambda a, b: a == b}[rel](
            sum(c * v for c, v in zip(cs, pt)), b)
        for cs, rel, b in rows
    )
    assert p.contains_point(env) == expected
    if expected:
        assert not p.is_empty()


@settings(max_examples=200, deadline=None)
@given(st.lists(row, min_size=1, max_size=4), st.lists(row, min_size=1, max_size=3))
def test_lattice_laws(r1, r2):
    a, b = build(r1), build(r2)
    ab = a & b
    assert includes(a, ab) and includes(b, ab)
    assert covers([a], ab)
    assert a.minimize().same_set(a)
    pieces = difference(a, b)
    assert covers(pieces + [ab], a)
    for piece in pieces:
        assert (piece & b).is_empty()


@settings(max_examples=150, deadline=None)
@given(st.lists(row, min_size=1, max_size=4), st.sampled_from(["v0", "v1", "v2", "v3"]))
def test_projection_contains_points(rows, var):
    p = build(rows)
    proj = p.eliminate([var])
    assert includes(proj, p)
    for pt in p.sample_points(limit=8):
        assert proj.contains_point({k: v for k, v in pt.items() if k != var} | {var: 0})


# -- brute-force FM oracle ----------------------------------------------------

def _grid(k: int):
    step = Fraction(1, 2) if k <= 2 else Fraction(1)
    vals = []
    v = Fraction(-3)
    while v <= 3:
        vals.append(v)
        v += step
    return itertools.product(vals, repeat=k)


def fm_agreement(seed: int) -> list[str]:
    """Compare FM projection with the vertex oracle on a rational grid; returns mismatches."""
    rng = random.Random(seed)
    nvars = rng.randint(2, 4)
    rows = random_system(rng, nvars)
    names = [f"v{i}" for i in range(nvars)]
    u = Universe.of(timing=names)
    p = build([(cs, rel, b) for cs, rel, b in rows], u)
    gone = sorted(rng.sample(range(nvars), rng.randint(1, nvars - 1)))
    kept = [i for i in range(nvars) if i not in gone]
    proj = p.eliminate([names[i] for i in gone])
    bad = []
    for pt in _grid(len(kept)):
        x = dict(zip(kept, pt))
        want = fibre_nonempty(rows, x, gone)
        got = proj.contains_point({names[i]: v for i, v in x.items()} | {names[i]: 0 for i in gone})
        if want != got:
            bad.append(f"seed {seed} at {x}: oracle {want}, projection {got}")
    return bad


@pytest.mark.parametrize("seed", range(40))
def test_fm_against_vertex_oracle(seed):
    assert fm_agreement(seed) == []
