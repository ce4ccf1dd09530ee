import sys
from fractions import Fraction
from pathlib import Path

import pytest

from aftsynth import model_path
from aftsynth.galileo import parse, parse_file
from aftsynth.synthesis import ef_synth
from aftsynth.translation import build_network

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = Path(__file__).parent / "golden"


def synth(tree, target="success", **kw):
    out = build_network(tree, strict_shapes=kw.pop("strict_shapes", False))
    return out, ef_synth(out.network, out.target(target), **kw)


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture(scope="session")
def iot_tree():
    return parse_file(model_path("iot.galileo"))


@pytest.fixture(scope="session")
def spacex_tree():
    return parse_file(model_path("spacex.galileo"))


@pytest.fixture(scope="session")
def iot_result(iot_tree):
    return synth(iot_tree)


@pytest.fixture(scope="session")
def spacex_result(spacex_tree):
    return synth(spacex_tree)


@pytest.fixture
def or_tree():
    return parse_file(model_path("galileo_or.galileo"))


@pytest.fixture
def leaf_tree():
    return parse('toplevel "L"; "L" time=5 cost=50;')


def F(x):
    return Fraction(x)
