"""Reader, validator and canonical printer for the extended Galileo dialect.

The dialect is line oriented and every statement ends with ``;``::

    toplevel "A";
    "A" or "B" "C";
    "B" mintime=50 maxtime=100 cost=50;
    "C" mintime=30 maxtime=70 cost=CostC;    # identifier -> weight parameter

An attribute value that lexes as an identifier declares a parameter; its sort
(timing or weight) follows from the attribute it appears in.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Union

__all__ = [
    "Const",
    "Param",
    "AttributeValue",
    "LeafKind",
    "GateKind",
    "LeafNode",
    "GateNode",
    "AttackFaultTree",
    "Diagnostic",
    "GalileoError",
    "parse",
    "parse_file",
    "validate",
    "pretty",
]

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# names that the translation or the observer automaton claim for themselves
RESERVED = frozenset({"total_time", "total_cost", "total_damage", "abs_time", "toplevel"})


class GalileoError(ValueError):
    """Input error with an optional source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __str__(self) -> str:
        return _fmt(self.value)


@dataclass(frozen=True)
class Param:
    name: str

    def __str__(self) -> str:
        return self.name


AttributeValue = Union[Const, Param]

ZERO = Const(Fraction(0))


class LeafKind(enum.Enum):
    BAS = "bas"
    BCF = "bcf"


class GateKind(enum.Enum):
    AND = "and"
    SAND = "sand"
    PAND = "pand"
    OR = "or"
    SOR = "sor"
    XOR = "xor"
    FDEP = "fdep"
    SPARE = "wsp"
    VOT = "vot"


@dataclass(frozen=True)
class LeafNode:
    name: str
    min_time: AttributeValue
    max_time: AttributeValue
    cost: AttributeValue = ZERO
    damage: AttributeValue = ZERO
    kind: LeafKind = LeafKind.BAS
    line: int | None = field(default=None, compare=False)

    is_leaf = True


@dataclass(frozen=True)
class GateNode:
    name: str
    kind: GateKind
    children: tuple[str, ...]
    threshold: int | None = None  # k of a VOT gate
    cost: AttributeValue = ZERO
    damage: AttributeValue = ZERO
    declared_arity: int | None = field(default=None, compare=False)  # n of "kofn"
    line: int | None = field(default=None, compare=False)

    is_leaf = False

    @property
    def label(self) -> str:
        if self.kind is GateKind.VOT:
            return f"{self.threshold}of{len(self.children)}"
        return self.kind.value


Node = Union[LeafNode, GateNode]


@dataclass(frozen=True)
class AttackFaultTree:
    root: str
    nodes: Mapping[str, Node]
    timing_parameters: frozenset[str] = frozenset()
    weight_parameters: frozenset[str] = frozenset()
    # statements that redefined an existing name, kept for validate()
    duplicates: tuple[Node, ...] = field(default=(), compare=False)

    def __getitem__(self, name: str) -> Node:
        return self.nodes[name]

    @property
    def leaves(self) -> list[LeafNode]:
        return [n for n in self.walk() if n.is_leaf]

    @property
    def gates(self) -> list[GateNode]:
        return [n for n in self.walk() if not n.is_leaf]

    @property
    def parameters(self) -> frozenset[str]:
        return self.timing_parameters | self.weight_parameters

    def walk(self) -> Iterator[Node]:
        """Pre-order traversal from the root (each name visited once)."""
        seen = set()
        stack = [self.root]
        while stack:
            name = stack.pop()
            if name in seen or name not in self.nodes:
                continue
            seen.add(name)
            node = self.nodes[name]
            yield node
            if not node.is_leaf:
                stack.extend(reversed(node.children))

    def parent_of(self) -> dict[str, str]:
        parents = {}
        for node in self.nodes.values():
            if not node.is_leaf:
                for c in node.children:
                    parents.setdefault(c, node.name)
        return parents

    def is_concrete(self) -> bool:
        return not self.parameters


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    node: str | None
    message: str
    line: int | None = None

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line else ""
        subject = f"{self.node}: " if self.node else ""
        return f"{where}{subject}{self.message} [{self.rule}]"


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*|//[^\n]*)
  | (?P<str>"[^"\n]*")
  | (?P<vot>\d+of\d+\b)
  | (?P<num>[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.\-]*)
  | (?P<eq>=)
  | (?P<semi>;)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise GalileoError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "vot":
                kind = "ident"
            out.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    return out


# ---------------------------------------------------------------------------
# parser

_GATES = {
    "and": GateKind.AND,
    "sand": GateKind.SAND,
    "pand": GateKind.PAND,
    "or": GateKind.OR,
    "sor": GateKind.SOR,
    "xor": GateKind.XOR,
    "fdep": GateKind.FDEP,
    "wsp": GateKind.SPARE,
    "spare": GateKind.SPARE,
}
_VOT_RE = re.compile(r"(\d+)of(\d+)\Z")

# classic DFT vocabulary outside this dialect
_UNSUPPORTED_GATES = {"csp", "hsp", "seq", "mutex", "pdep", "inhibit", "por", "spor", "fand"}
_UNSUPPORTED_ATTRS = {
    "prob": "probabilities",
    "lambda": "failure rates",
    "rate": "failure rates",
    "phases": "phase-type distributions",
    "dorm": "dormancy factors",
    "repair": "repair",
    "res": "repair",
    "cov": "coverage factors",
    "mu": "repair rates",
}
_LEAF_ATTRS = {"mintime", "maxtime", "time", "cost", "damage", "kind"}
_GATE_ATTRS = {"cost", "damage"}


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _name(tok: _Tok) -> str:
    return tok.text[1:-1] if tok.kind == "str" else tok.text


def _number(tok: _Tok) -> Fraction:
    try:
        return Fraction(tok.text)
    except (ValueError, ZeroDivisionError):
        raise GalileoError(f"malformed number {tok.text!r}", tok.line, tok.col) from None


class _Parser:
    def __init__(self, text: str):
        self.tokens = _lex(text)
        self.i = 0

    def statements(self) -> Iterator[list[_Tok]]:
        current: list[_Tok] = []
        for tok in self.tokens:
            if tok.kind == "semi":
                if current:
                    yield current
                current = []
            else:
                current.append(tok)
        if current:
            last = current[-1]
            raise GalileoError("missing ';' at end of statement", last.line, last.col + len(last.text))


def _value(tok: _Tok, attr: str) -> AttributeValue:
    if tok.kind == "num":
        value = _number(tok)
        if attr in ("mintime", "maxtime", "time") and value < 0:
            raise GalileoError(f"{attr} must be non-negative", tok.line, tok.col)
        return Const(value)
    if tok.kind == "ident" and IDENT.match(tok.text):
        return Param(tok.text)
    raise GalileoError(f"bad value {tok.text!r} for {attr}", tok.line, tok.col)


def _attributes(toks: list[_Tok], allowed: set[str]) -> tuple[dict[str, tuple[_Tok, _Tok]], list[_Tok]]:
    """Split trailing ``key=value`` groups from the leading words."""
    attrs: dict[str, tuple[_Tok, _Tok]] = {}
    words: list[_Tok] = []
    k = 0
    while k < len(toks):
        tok = toks[k]
        if k + 1 < len(toks) and toks[k + 1].kind == "eq":
            if tok.kind != "ident":
                raise GalileoError(f"attribute name expected, got {tok.text!r}", tok.line, tok.col)
            key = tok.text.lower()
            if key in _UNSUPPORTED_ATTRS:
                raise GalileoError(
                    f"attribute '{key}' ({_UNSUPPORTED_ATTRS[key]}) is not supported in this dialect",
                    tok.line, tok.col)
            if key not in allowed:
                raise GalileoError(f"unknown attribute '{tok.text}'", tok.line, tok.col)
            if k + 2 >= len(toks):
                raise GalileoError(f"missing value for '{key}'", tok.line, tok.col)
            if key in attrs:
                raise GalileoError(f"attribute '{key}' given twice", tok.line, tok.col)
            attrs[key] = (tok, toks[k + 2])
            k += 3
            continue
        if attrs:
            raise GalileoError(f"unexpected {tok.text!r} after attributes", tok.line, tok.col)
        words.append(tok)
        k += 1
    return attrs, words


def parse(text: str) -> AttackFaultTree:
    """Parse Galileo text into an :class:`AttackFaultTree` (structure unchecked)."""
    parser = _Parser(text)
    root = None
    order: list[Node] = []
    references: list[_Tok] = []
    for stmt in parser.statements():
        head = stmt[0]
        if head.kind == "ident" and head.text.lower() == "toplevel":
            if len(stmt) != 2 or stmt[1].kind not in ("str", "ident"):
                raise GalileoError("expected: toplevel \"<name>\";", head.line, head.col)
            if root is not None:
                raise GalileoError("toplevel declared twice", head.line, head.col)
            root = stmt[1]
            continue
        if head.kind not in ("str", "ident"):
            raise GalileoError(f"node name expected, got {head.text!r}", head.line, head.col)
        name = _name(head)
        rest = stmt[1:]
        if rest and rest[0].kind == "ident" and (
                rest[0].text.lower() in _GATES or _VOT_RE.match(rest[0].text.lower())
                or rest[0].text.lower() in _UNSUPPORTED_GATES):
            order.append(_gate(name, head, rest, references))
        else:
            order.append(_leaf(name, head, rest))
    if root is None:
        raise GalileoError("toplevel missing")
    nodes: dict[str, Node] = {}
    duplicates = []
    for node in order:
        if node.name in nodes:
            duplicates.append(node)
        else:
            nodes[node.name] = node
    if _name(root) not in nodes:
        raise GalileoError(f"undefined node '{_name(root)}'", root.line, root.col)
    for ref in references:
        if _name(ref) not in nodes:
            raise GalileoError(f"undefined node '{_name(ref)}'", ref.line, ref.col)
    timing, weights = set(), set()
    for node in list(nodes.values()) + duplicates:
        if node.is_leaf:
            for v in (node.min_time, node.max_time):
                if isinstance(v, Param):
                    timing.add(v.name)
        for v in (node.cost, node.damage):
            if isinstance(v, Param):
                weights.add(v.name)
    return AttackFaultTree(_name(root), nodes, frozenset(timing), frozenset(weights), tuple(duplicates))


def parse_file(path) -> AttackFaultTree:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def _gate(name: str, head: _Tok, rest: list[_Tok], references: list[_Tok]) -> GateNode:
    kind_tok = rest[0]
    word = kind_tok.text.lower()
    if word in _UNSUPPORTED_GATES:
        raise GalileoError(f"gate type '{kind_tok.text}' is not supported", kind_tok.line, kind_tok.col)
    attrs, children = _attributes(rest[1:], _GATE_ATTRS)
    for c in children:
        if c.kind not in ("str", "ident"):
            raise GalileoError(f"child name expected, got {c.text!r}", c.line, c.col)
    references.extend(children)
    m = _VOT_RE.match(word)
    threshold = declared = None
    if m:
        kind = GateKind.VOT
        threshold, declared = int(m.group(1)), int(m.group(2))
        if threshold < 1:
            raise GalileoError("VOT threshold must be positive", kind_tok.line, kind_tok.col)
    else:
        kind = _GATES[word]
    values = {k: _value(v, k) for k, (_, v) in attrs.items()}
    return GateNode(
        name=name,
        kind=kind,
        children=tuple(_name(c) for c in children),
        threshold=threshold,
        cost=values.get("cost", ZERO),
        damage=values.get("damage", ZERO),
        declared_arity=declared,
        line=head.line,
    )


def _leaf(name: str, head: _Tok, rest: list[_Tok]) -> LeafNode:
    attrs, words = _attributes(rest, _LEAF_ATTRS)
    if words:
        w = words[0]
        raise GalileoError(f"unknown gate type or stray token {w.text!r}", w.line, w.col)
    kind = LeafKind.BAS
    if "kind" in attrs:
        key_tok, val = attrs.pop("kind")
        try:
            kind = LeafKind(val.text.lower())
        except ValueError:
            raise GalileoError(f"kind must be bas or bcf, got {val.text!r}", val.line, val.col) from None
    values = {k: _value(v, k) for k, (_, v) in attrs.items()}
    if "time" in values:
        if "mintime" in values or "maxtime" in values:
            tok = attrs["time"][0]
            raise GalileoError("'time' cannot be combined with mintime/maxtime", tok.line, tok.col)
        lo = hi = values["time"]
    else:
        lo = values.get("mintime", values.get("maxtime", ZERO))
        hi = values.get("maxtime", lo)
    return LeafNode(
        name=name,
        min_time=lo,
        max_time=hi,
        cost=values.get("cost", ZERO),
        damage=values.get("damage", ZERO),
        kind=kind,
        line=head.line,
    )


# ---------------------------------------------------------------------------
# validation


def validate(tree: AttackFaultTree) -> list[Diagnostic]:
    """Structural checks; an empty list means the tree can be translated."""
    diags: list[Diagnostic] = []
    for dup in tree.duplicates:
        diags.append(Diagnostic("duplicate-definition", dup.name,
                                f"node defined more than once", dup.line))
    parents: dict[str, list[str]] = {}
    for node in tree.nodes.values():
        if node.is_leaf:
            continue
        counts = Counter(node.children)
        for child, k in counts.items():
            if k > 1:
                diags.append(Diagnostic("shared-subtree", child,
                                        f"shared subtree not supported: listed {k} times under {node.name}",
                                        node.line))
            parents.setdefault(child, []).append(node.name)
    for child, ps in parents.items():
        if len(ps) > 1:
            diags.append(Diagnostic("shared-subtree", child,
                                    f"shared subtree not supported: children of {', '.join(ps)}",
                                    tree.nodes[child].line))
    if tree.root in parents:
        diags.append(Diagnostic("cycle", tree.root, "toplevel node is used as a child",
                                tree.nodes[tree.root].line))
    diags.extend(_cycles(tree))
    reachable = {n.name for n in tree.walk()}
    for name, node in tree.nodes.items():
        if name not in reachable:
            diags.append(Diagnostic("unreachable", name, "node not reachable from toplevel", node.line))
    for node in tree.nodes.values():
        if name_problem := _name_problem(node.name):
            diags.append(Diagnostic("bad-name", node.name, name_problem, node.line))
        if node.is_leaf:
            lo, hi = node.min_time, node.max_time
            if isinstance(lo, Const) and isinstance(hi, Const) and lo.value > hi.value:
                diags.append(Diagnostic("time-interval", node.name,
                                        f"min time {lo} exceeds max time {hi}", node.line))
            continue
        diags.extend(_arity(node))
    both = tree.timing_parameters & tree.weight_parameters
    for p in sorted(both):
        diags.append(Diagnostic("parameter-sort", p, "parameter used both as a time and as a weight"))
    for p in sorted(tree.parameters & RESERVED):
        diags.append(Diagnostic("reserved-name", p, "parameter name is reserved"))
    clash = tree.parameters & set(tree.nodes)
    for p in sorted(clash):
        diags.append(Diagnostic("parameter-sort", p, "parameter has the same name as a node"))
    return diags


def _name_problem(name: str) -> str | None:
    if not name:
        return "empty node name"
    if name in RESERVED:
        return "node name is reserved"
    return None


def _arity(node: GateNode) -> list[Diagnostic]:
    n = len(node.children)
    out = []

    def bad(message):
        out.append(Diagnostic("arity", node.name, message, node.line))

    if n == 0:
        bad("gate has no children")
    elif node.kind is GateKind.XOR and n != 2:
        bad(f"XOR needs exactly 2 children, has {n}")
    elif node.kind in (GateKind.FDEP, GateKind.SPARE) and n < 2:
        bad(f"{node.kind.name} needs at least 2 children, has {n}")
    if node.kind is GateKind.VOT:
        if node.threshold > n:
            out.append(Diagnostic("vot-threshold", node.name,
                                  f"VOT threshold exceeds arity ({node.threshold} > {n})", node.line))
        if node.declared_arity is not None and node.declared_arity != n:
            bad(f"declared {node.threshold}of{node.declared_arity} but {n} children given")
    return out


def _cycles(tree: AttackFaultTree) -> list[Diagnostic]:
    colour: dict[str, int] = {}
    found: list[Diagnostic] = []

    def visit(start: str) -> None:
        stack = [(start, iter(_kids(tree, start)))]
        colour[start] = 1
        while stack:
            name, it = stack[-1]
            for child in it:
                state = colour.get(child, 0)
                if state == 1:
                    found.append(Diagnostic("cycle", child, "node is its own descendant",
                                            tree.nodes[child].line))
                elif state == 0:
                    colour[child] = 1
                    stack.append((child, iter(_kids(tree, child))))
                    break
            else:
                colour[name] = 2
                stack.pop()

    for name in tree.nodes:
        if colour.get(name, 0) == 0:
            visit(name)
    return found


def _kids(tree: AttackFaultTree, name: str) -> tuple[str, ...]:
    node = tree.nodes.get(name)
    return () if node is None or node.is_leaf else node.children


# ---------------------------------------------------------------------------
# printing


def _quote(name: str) -> str:
    return f'"{name}"'


def pretty(tree: AttackFaultTree) -> str:
    """Canonical text: toplevel first, then nodes in pre-order, all attributes explicit."""
    lines = [f"toplevel {_quote(tree.root)};"]
    seen = set()
    ordered = list(tree.walk())
    seen.update(n.name for n in ordered)
    ordered += [n for name, n in tree.nodes.items() if name not in seen]
    for node in ordered:
        if node.is_leaf:
            parts = [_quote(node.name), f"mintime={node.min_time}", f"maxtime={node.max_time}",
                     f"cost={node.cost}", f"damage={node.damage}"]
            if node.kind is LeafKind.BCF:
                parts.append("kind=bcf")
        else:
            parts = [_quote(node.name), node.label] + [_quote(c) for c in node.children]
            if node.cost != ZERO:
                parts.append(f"cost={node.cost}")
            if node.damage != ZERO:
                parts.append(f"damage={node.damage}")
        lines.append(" ".join(parts) + ";")
    return "\n".join(lines) + "\n"
