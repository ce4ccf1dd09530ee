"""Exact convex polyhedra over the rationals, in constraint (H-) form.

A :class:`Polyhedron` is a conjunction of affine rows ``sum(c_i * v_i) REL b``
with ``REL`` one of ``<=``, ``<`` or ``=``.  Coefficients are integers with
gcd 1 and bounds are exact rationals (``gmpy2.mpq`` when available, otherwise
:class:`fractions.Fraction`), so every operation is exact.
Projection is Fourier-Motzkin elimination with strictness tracking; emptiness
and inclusion are decided by eliminating every variable.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

try:  # GMP rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

__all__ = [
    "LE",
    "LT",
    "EQ",
    "Sort",
    "Universe",
    "Row",
    "AffineInequality",
    "LinExpr",
    "Polyhedron",
    "UniverseMismatch",
    "PolyhedronSyntaxError",
    "intersect",
    "is_empty",
    "eliminate",
    "time_elapse",
    "reset",
    "affine_image",
    "includes",
    "difference",
    "covers",
]

LE, LT, EQ = "<=", "<", "="

Number = Union[int, Fraction]


class Sort(enum.Enum):
    CLOCK = "clock"
    TIMING_PARAMETER = "timing_parameter"
    WEIGHT_VARIABLE = "weight_variable"
    WEIGHT_PARAMETER = "weight_parameter"


class UniverseMismatch(ValueError):
    pass


class PolyhedronSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Universe:
    """Ordered, sorted variable set shared by every polyhedron of an analysis."""

    names: tuple[str, ...]
    sorts: tuple[Sort, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if len(self.names) != len(self.sorts):
            raise ValueError("names and sorts differ in length")
        index = {}
        for i, name in enumerate(self.names):
            if name in index:
                raise ValueError(f"duplicate variable {name!r}")
            index[name] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def of(cls, **groups: Iterable[str]) -> "Universe":
        """Build from keyword groups: ``clocks``, ``timing``, ``weights``, ``weight_params``."""
        order = [
            ("clocks", Sort.CLOCK),
            ("timing", Sort.TIMING_PARAMETER),
            ("weights", Sort.WEIGHT_VARIABLE),
            ("weight_params", Sort.WEIGHT_PARAMETER),
        ]
        unknown = set(groups) - {k for k, _ in order}
        if unknown:
            raise TypeError(f"unknown variable groups {sorted(unknown)}")
        names, sorts = [], []
        for key, sort in order:
            for name in groups.get(key, ()):
                names.append(name)
                sorts.append(sort)
        return cls(tuple(names), tuple(sorts))

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def sort(self, name: str) -> Sort:
        return self.sorts[self.index(name)]

    @functools.cached_property
    def clock_indices(self) -> frozenset[int]:
        return self.indices_of(Sort.CLOCK)

    def indices_of(self, *sorts: Sort) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.sorts) if s in sorts)

    def names_of(self, *sorts: Sort) -> tuple[str, ...]:
        return tuple(n for n, s in zip(self.names, self.sorts) if s in sorts)


class Row(NamedTuple):
    """One affine constraint ``sum(c * v) rel bound`` over universe indices."""

    coeffs: tuple[tuple[int, int], ...]
    bound: Fraction
    rel: str


AffineInequality = Row


# ---------------------------------------------------------------------------
# row arithmetic


def _normalize(coeffs: Mapping[int, Number], bound: Number, rel: str):
    """Canonical row, or a bool for a variable-free row (its truth value)."""
    items = sorted((i, c) for i, c in coeffs.items() if c)
    bound = Q(bound)
    if not items:
        if rel == LE:
            return bound >= 0
        if rel == LT:
            return bound > 0
        return bound == 0
    if any(type(c) is not int for _, c in items):
        den = 1
        for _, c in items:
            den = math.lcm(den, int(Q(c).denominator))
        items = [(i, int(Q(c) * den)) for i, c in items]
        bound *= den
    g = 0
    for _, c in items:
        g = math.gcd(g, c)
    if rel == EQ and items[0][1] < 0:
        g = -g
    if g != 1:
        items = [(i, c // g) for i, c in items]
        bound /= g
    return Row(tuple(items), bound, rel)


def _neg_coeffs(c):
    return tuple((i, -k) for i, k in c)


def _coef(row: Row, v: int) -> int:
    for i, c in row.coeffs:
        if i == v:
            return c
        if i > v:
            return 0
    return 0


def _combine(r1: Row, m1: int, r2: Row, m2: int, rel: str):
    acc = {i: m1 * c for i, c in r1.coeffs}
    for i, c in r2.coeffs:
        acc[i] = acc.get(i, 0) + m2 * c
    return _normalize(acc, m1 * r1.bound + m2 * r2.bound, rel)


def _reduce(rows: Iterable) -> list[Row] | None:
    """Merge parallel rows and drop constant ones; ``None`` means infeasible."""
    eqs: dict = {}
    ups: dict = {}
    los: dict = {}
    for r in rows:
        if r is True:
            continue
        if r is False:
            return None
        c = r.coeffs
        if r.rel == EQ:
            old = eqs.get(c)
            if old is None:
                eqs[c] = r.bound
            elif old != r.bound:
                return None
            continue
        strict = r.rel == LT
        if c[0][1] > 0:
            cur = ups.get(c)
            if cur is None or r.bound < cur[0] or (r.bound == cur[0] and strict):
                ups[c] = (r.bound, strict)
        else:
            key = _neg_coeffs(c)
            b = -r.bound
            cur = los.get(key)
            if cur is None or b > cur[0] or (b == cur[0] and strict):
                los[key] = (b, strict)
    out = []
    for key, v in eqs.items():
        u = ups.pop(key, None)
        lo = los.pop(key, None)
        if u is not None and (v > u[0] or (v == u[0] and u[1])):
            return None
        if lo is not None and (v < lo[0] or (v == lo[0] and lo[1])):
            return None
        out.append(Row(key, v, EQ))
    for key, (ub, us) in ups.items():
        lo = los.pop(key, None)
        if lo is not None:
            lb, ls = lo
            if lb > ub or (lb == ub and (ls or us)):
                return None
            if lb == ub:
                out.append(Row(key, ub, EQ))
                continue
            out.append(Row(_neg_coeffs(key), -lb, LT if ls else LE))
        out.append(Row(key, ub, LT if us else LE))
    for key, (lb, ls) in los.items():
        out.append(Row(_neg_coeffs(key), -lb, LT if ls else LE))
    out.sort()
    return out


def _eliminate_var(rows: list[Row], v: int) -> list:
    """One exact elimination step (substitution when an equality mentions ``v``)."""
    pivot = None
    for r in rows:
        if r.rel == EQ:
            c = _coef(r, v)
            if c and (pivot is None or abs(c) < abs(pivot[1]) or
                      (abs(c) == abs(pivot[1]) and len(r.coeffs) < len(pivot[0].coeffs))):
                pivot = (r, c)
    out = []
    if pivot is not None:
        e, ce = pivot
        m = abs(ce)
        sign = 1 if ce > 0 else -1
        for r in rows:
            if r is e:
                continue
            cr = _coef(r, v)
            if cr == 0:
                out.append(r)
            else:
                out.append(_combine(r, m, e, -sign * cr, r.rel))
        return out
    pos, neg = [], []
    for r in rows:
        c = _coef(r, v)
        if c > 0:
            pos.append((r, c))
        elif c < 0:
            neg.append((r, -c))
        else:
            out.append(r)
    for (rp, cp), (rn, cn) in itertools.product(pos, neg):
        rel = LT if (rp.rel == LT or rn.rel == LT) else LE
        out.append(_combine(rp, cn, rn, cp, rel))
    return out


def _variables(rows: Iterable[Row]) -> set[int]:
    out: set[int] = set()
    for r in rows:
        for i, _ in r.coeffs:
            out.add(i)
    return out


def _pick(rows: list[Row], candidates: set[int]) -> int:
    eq_vars = set()
    pos: dict = {}
    neg: dict = {}
    for r in rows:
        for i, c in r.coeffs:
            if i not in candidates:
                continue
            if r.rel == EQ:
                eq_vars.add(i)
            elif c > 0:
                pos[i] = pos.get(i, 0) + 1
            else:
                neg[i] = neg.get(i, 0) + 1
    if eq_vars:
        return min(eq_vars)
    best, best_score = None, None
    for i in sorted(candidates):
        p, n = pos.get(i, 0), neg.get(i, 0)
        score = p * n - p - n
        if best_score is None or score < best_score:
            best, best_score = i, score
    return best


def _eliminate(rows: Iterable, variables: Iterable[int]) -> list[Row] | None:
    current = _reduce(rows)
    todo = set(variables)
    while current is not None:
        todo &= _variables(current)
        if not todo:
            return current
        v = _pick(current, todo)
        todo.discard(v)
        current = _reduce(_eliminate_var(current, v))
    return None


def _rows_empty(rows: Iterable) -> bool:
    current = _reduce(rows)
    while current is not None:
        if not current:
            return False
        live = _variables(current)
        v = _pick(current, live)
        current = _reduce(_eliminate_var(current, v))
    return True


def _negations(r: Row) -> list[Row]:
    neg = _neg_coeffs(r.coeffs)
    if r.rel == LE:
        return [Row(neg, -r.bound, LT)]
    if r.rel == LT:
        return [Row(neg, -r.bound, LE)]
    return [Row(r.coeffs, r.bound, LT), Row(neg, -r.bound, LT)]


def _syntactically_entailed(rows: list[Row], r: Row) -> bool:
    for s in rows:
        if s.coeffs == r.coeffs:
            if r.rel == EQ:
                if s.rel == EQ and s.bound == r.bound:
                    return True
                continue
            if s.bound < r.bound or (s.bound == r.bound and (s.rel != LE or r.rel == LE)):
                return True
        elif s.rel == EQ and r.rel != EQ and s.coeffs == _neg_coeffs(r.coeffs):
            # -key = bound  entails  -key <= / < r.bound
            if -s.bound < r.bound or (-s.bound == r.bound and r.rel == LE):
                return True
        elif s.rel == EQ and r.rel != EQ and _neg_coeffs(s.coeffs) == r.coeffs:
            if -s.bound < r.bound or (-s.bound == r.bound and r.rel == LE):
                return True
    return False


def _entails(rows: list[Row], r: Row) -> bool:
    if _syntactically_entailed(rows, r):
        return True
    return all(_rows_empty(rows + [n]) for n in _negations(r))


# ---------------------------------------------------------------------------
# linear expressions and text syntax

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<op><=|>=|==|=|<|>|\+|-|\*|&|\(|\)))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolyhedronSyntaxError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


@dataclass(frozen=True)
class LinExpr:
    """Affine expression ``sum(coef * name) + const`` with rational coefficients."""

    terms: tuple[tuple[str, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @classmethod
    def build(cls, terms: Mapping[str, Number] | None = None, const: Number = 0) -> "LinExpr":
        merged: dict[str, Fraction] = {}
        for name, c in (terms or {}).items():
            merged[name] = merged.get(name, Fraction(0)) + Fraction(c)
        return cls(tuple(sorted((n, c) for n, c in merged.items() if c)), Fraction(const))

    @classmethod
    def var(cls, name: str) -> "LinExpr":
        return cls(((name, Fraction(1)),), Fraction(0))

    @classmethod
    def constant(cls, value: Number) -> "LinExpr":
        return cls((), Fraction(value))

    @classmethod
    def parse(cls, text: str) -> "LinExpr":
        tokens = _tokenize(text)
        expr, rest = _parse_expr(tokens)
        if rest:
            raise PolyhedronSyntaxError(f"trailing tokens in expression {text!r}")
        return expr

    def __add__(self, other: "LinExpr | Number") -> "LinExpr":
        if not isinstance(other, LinExpr):
            other = LinExpr.constant(other)
        terms = dict(self.terms)
        for n, c in other.terms:
            terms[n] = terms.get(n, Fraction(0)) + c
        return LinExpr.build(terms, self.const + other.const)

    def __sub__(self, other: "LinExpr | Number") -> "LinExpr":
        if not isinstance(other, LinExpr):
            other = LinExpr.constant(other)
        return self + other.scale(-1)

    def scale(self, k: Number) -> "LinExpr":
        k = Fraction(k)
        return LinExpr.build({n: c * k for n, c in self.terms}, self.const * k)

    @property
    def names(self) -> frozenset[str]:
        return frozenset(n for n, _ in self.terms)

    def coefficient(self, name: str) -> Fraction:
        return dict(self.terms).get(name, Fraction(0))

    def evaluate(self, env: Mapping[str, Number]) -> Fraction:
        total = self.const
        for n, c in self.terms:
            total += c * Fraction(env[n])
        return total

    def __str__(self) -> str:
        parts = []
        for n, c in self.terms:
            mag = abs(c)
            body = n if mag == 1 else f"{_fmt(mag)}*{n}"
            parts.append(("- " if c < 0 else "+ ") + body)
        if self.const or not parts:
            parts.append(("- " if self.const < 0 else "+ ") + _fmt(abs(self.const)))
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _fmt(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _parse_number(tok: str) -> Fraction:
    return Fraction(tok)


def _parse_expr(tokens):
    terms: dict[str, Fraction] = {}
    const = Fraction(0)
    sign = 1
    expect_term = True
    i = 0
    while i < len(tokens):
        kind, tok = tokens[i]
        if kind == "op" and tok in "+-" and expect_term:
            if tok == "-":
                sign = -sign
            i += 1
            continue
        if not expect_term:
            if kind == "op" and tok in "+-":
                sign = 1 if tok == "+" else -1
                expect_term = True
                i += 1
                continue
            break
        if kind == "num":
            value = _parse_number(tok)
            if i + 2 < len(tokens) + 0 and i + 1 < len(tokens) and tokens[i + 1] == ("op", "*"):
                if i + 2 >= len(tokens) or tokens[i + 2][0] != "name":
                    raise PolyhedronSyntaxError("expected variable after '*'")
                name = tokens[i + 2][1]
                terms[name] = terms.get(name, Fraction(0)) + sign * value
                i += 3
            else:
                const += sign * value
                i += 1
        elif kind == "name":
            name = tok
            coef = Fraction(1)
            if i + 2 < len(tokens) and tokens[i + 1] == ("op", "*") and tokens[i + 2][0] == "num":
                coef = _parse_number(tokens[i + 2][1])
                i += 2
            terms[name] = terms.get(name, Fraction(0)) + sign * coef
            i += 1
        else:
            raise PolyhedronSyntaxError(f"unexpected token {tok!r}")
        sign = 1
        expect_term = False
    if expect_term:
        raise PolyhedronSyntaxError("expression expected")
    return LinExpr.build(terms, const), tokens[i:]


_RELATIONS = {"<=", ">=", "<", ">", "=", "=="}


def _parse_atoms(text: str) -> list[tuple[LinExpr, str, LinExpr]]:
    out = []
    chunks = re.split(r"&|\band\b|,", " ".join(text.split()))
    if len(chunks) > 1 and not all(c.strip() for c in chunks):
        raise PolyhedronSyntaxError(f"empty conjunct in {text!r}")
    for chunk in chunks:
        tokens = _tokenize(chunk)
        if [t for t in tokens] == [("name", "True")]:
            continue
        exprs, rels = [], []
        rest = tokens
        while True:
            expr, rest = _parse_expr(rest)
            exprs.append(expr)
            if not rest:
                break
            kind, tok = rest[0]
            if kind != "op" or tok not in _RELATIONS:
                raise PolyhedronSyntaxError(f"relation expected in {chunk!r}")
            rels.append("=" if tok == "==" else tok)
            rest = rest[1:]
        if not rels:
            raise PolyhedronSyntaxError(f"no relation in {chunk!r}")
        for k, rel in enumerate(rels):
            out.append((exprs[k], rel, exprs[k + 1]))
    return out


def _atom_row(universe: Universe, lhs: LinExpr, rel: str, rhs: LinExpr):
    diff = lhs - rhs
    if rel in (">=", ">"):
        diff = diff.scale(-1)
        rel = "<=" if rel == ">=" else "<"
    coeffs = {universe.index(n): c for n, c in diff.terms}
    return _normalize(coeffs, -diff.const, {"<=": LE, "<": LT, "=": EQ}[rel])


# ---------------------------------------------------------------------------
# the polyhedron value


@dataclass(frozen=True)
class Polyhedron:
    """Immutable conjunction of rows over a :class:`Universe`.

    ``rows`` is kept in reduced form: no constant rows, no two parallel rows
    with the same orientation.  ``rows is None`` encodes a syntactically
    infeasible system.
    """

    universe: Universe
    rows: tuple[Row, ...] | None

    @classmethod
    def from_rows(cls, universe: Universe, rows: Iterable) -> "Polyhedron":
        reduced = _reduce(rows)
        return cls(universe, None if reduced is None else tuple(reduced))

    @classmethod
    def top(cls, universe: Universe) -> "Polyhedron":
        return cls(universe, ())

    @classmethod
    def bottom(cls, universe: Universe) -> "Polyhedron":
        return cls(universe, None)

    @classmethod
    def parse(cls, universe: Universe, text: str) -> "Polyhedron":
        """Parse ``&``-joined affine atoms, e.g. ``"p <= x & x <= 5"``."""
        text = text.strip()
        if text in ("", "True"):
            return cls.top(universe)
        if text == "False":
            return cls.bottom(universe)
        rows = [_atom_row(universe, l, r, h) for l, r, h in _parse_atoms(text)]
        return cls.from_rows(universe, rows)

    @classmethod
    def from_atoms(cls, universe: Universe,
                   atoms: Iterable[tuple[LinExpr, str, LinExpr]]) -> "Polyhedron":
        return cls.from_rows(universe, [_atom_row(universe, l, r, h) for l, r, h in atoms])

    @classmethod
    def point(cls, universe: Universe, values: Mapping[str, Number]) -> "Polyhedron":
        rows = [_normalize({universe.index(n): 1}, v, EQ) for n, v in values.items()]
        return cls.from_rows(universe, rows)

    # -- basic queries --------------------------------------------------------

    def _check(self, other: "Polyhedron") -> None:
        if self.universe is not other.universe and self.universe != other.universe:
            raise UniverseMismatch("polyhedra live in different universes")

    @functools.cached_property
    def _empty(self) -> bool:
        return self.rows is None or _rows_empty(self.rows)

    def is_empty(self) -> bool:
        return self._empty

    def is_top(self) -> bool:
        return self.rows == ()

    @property
    def variables(self) -> frozenset[str]:
        if not self.rows:
            return frozenset()
        return frozenset(self.universe.names[i] for i in _variables(self.rows))

    def __and__(self, other: "Polyhedron") -> "Polyhedron":
        return intersect(self, other)

    def constrain(self, text: str) -> "Polyhedron":
        return intersect(self, Polyhedron.parse(self.universe, text))

    def includes(self, other: "Polyhedron") -> bool:
        return includes(self, other)

    def same_set(self, other: "Polyhedron") -> bool:
        return includes(self, other) and includes(other, self)

    def eliminate(self, names: Iterable[str]) -> "Polyhedron":
        return eliminate(self, names)

    def project(self, keep: Iterable[str]) -> "Polyhedron":
        keep = set(keep)
        return eliminate(self, [n for n in self.universe.names if n not in keep])

    def contains_point(self, values: Mapping[str, Number]) -> bool:
        """Exact membership; every variable mentioned by a row must be valued."""
        if self.rows is None:
            return False
        names = self.universe.names
        for r in self.rows:
            total = Q(0)
            for i, c in r.coeffs:
                try:
                    total += c * Q(values[names[i]])
                except KeyError:
                    raise KeyError(f"no value for {names[i]!r}") from None
            if r.rel == LE and not total <= r.bound:
                return False
            if r.rel == LT and not total < r.bound:
                return False
            if r.rel == EQ and total != r.bound:
                return False
        return True

    def substitute(self, values: Mapping[str, Number]) -> "Polyhedron":
        """Fix some variables to constants (they disappear from the rows)."""
        if self.rows is None:
            return self
        fixed = {self.universe.index(n): Q(v) for n, v in values.items()}
        rows = []
        for r in self.rows:
            coeffs, bound = {}, r.bound
            for i, c in r.coeffs:
                if i in fixed:
                    bound -= c * fixed[i]
                else:
                    coeffs[i] = c
            rows.append(_normalize(coeffs, bound, r.rel))
        return Polyhedron.from_rows(self.universe, rows)

    def minimize(self) -> "Polyhedron":
        """Drop every row entailed by the remaining ones (exact, quadratic)."""
        if self._empty:
            return Polyhedron.bottom(self.universe)
        rows = list(self.rows)
        i = 0
        while i < len(rows):
            others = rows[:i] + rows[i + 1:]
            if _entails(others, rows[i]):
                rows = others
            else:
                i += 1
        return Polyhedron(self.universe, tuple(rows))

    def bounds(self, name: str):
        """Exact ``(lo, lo_strict, hi, hi_strict)`` of one variable; ``None`` = unbounded."""
        v = self.universe.index(name)
        proj = _eliminate(self.rows or [], _variables(self.rows or []) - {v})
        if self.rows is None or proj is None:
            raise ValueError("empty polyhedron has no bounds")
        lo = hi = None
        lo_s = hi_s = False
        for r in proj:
            (_, c), = r.coeffs
            val = r.bound / c
            if r.rel == EQ:
                return _frac(val), False, _frac(val), False
            if c > 0:
                if hi is None or val < hi or (val == hi and r.rel == LT):
                    hi, hi_s = val, r.rel == LT
            else:
                if lo is None or val > lo or (val == lo and r.rel == LT):
                    lo, lo_s = val, r.rel == LT
        return _frac(lo), lo_s, _frac(hi), hi_s

    def sample_points(self, limit: int = 64) -> list[dict[str, Fraction]]:
        """Rational points inside the polyhedron: per variable its extreme and middle values."""
        if self._empty:
            return []
        names = sorted(self.variables, key=self.universe.index)
        out: list[dict[str, Fraction]] = []

        def walk(poly: Polyhedron, k: int, acc: dict) -> None:
            if len(out) >= limit:
                return
            if k == len(names):
                out.append(dict(acc))
                return
            name = names[k]
            if name not in poly.variables:
                acc[name] = Fraction(0)
                walk(poly, k + 1, acc)
                return
            for value in _candidates(*poly.bounds(name)):
                nxt = poly.substitute({name: value})
                if nxt.is_empty():
                    continue
                acc[name] = value
                walk(nxt, k + 1, acc)
            acc.pop(name, None)

        walk(self, 0, {})
        return out

    # -- text / json ----------------------------------------------------------

    def row_text(self, r: Row) -> str:
        names = self.universe.names
        den = r.bound.denominator
        left, right = [], []
        for i, c in r.coeffs:
            c *= den
            (right if c > 0 and r.rel != EQ else left if c > 0 else right if r.rel == EQ else left).append(
                (abs(c), names[i]))
        b = r.bound.numerator
        if r.rel == EQ:
            # a.v = b  ->  positive terms (+ -b) = negative terms (+ b)
            lhs = [(c, n) for c, n in left]
            rhs = [(c, n) for c, n in right]
            lconst, rconst = (-b, 0) if b < 0 else (0, b)
            return f"{_side(lhs, lconst)} = {_side(rhs, rconst)}"
        # a.v <= b  ->  b - a.v >= 0 : negative-coefficient terms and b on the left
        lhs = [(c, n) for c, n in left]
        rhs = [(c, n) for c, n in right]
        lconst, rconst = (b, 0) if b > 0 else (0, -b)
        op = ">=" if r.rel == LE else ">"
        return f"{_side(lhs, lconst)} {op} {_side(rhs, rconst)}"

    def to_text(self, sep: str = " & ") -> str:
        if self.rows is None:
            return "False"
        if not self.rows:
            return "True"
        return sep.join(self.row_text(r) for r in self.rows)

    def __str__(self) -> str:
        return self.to_text()

    def to_json(self) -> list[dict]:
        if self.rows is None:
            return [{"coefficients": {}, "relation": "<", "constant": "0"}]
        names = self.universe.names
        return [
            {
                "coefficients": {names[i]: str(c) for i, c in r.coeffs},
                "relation": r.rel,
                "constant": _fmt(r.bound),
            }
            for r in self.rows
        ]

    @classmethod
    def from_json(cls, universe: Universe, data: Sequence[Mapping]) -> "Polyhedron":
        rows = []
        for item in data:
            coeffs = {universe.index(n): Fraction(c) for n, c in item["coefficients"].items()}
            rel = item["relation"]
            if rel not in (LE, LT, EQ):
                raise ValueError(f"bad relation {rel!r}")
            rows.append(_normalize(coeffs, Fraction(item["constant"]), rel))
        return cls.from_rows(universe, rows)


def _frac(q) -> Fraction | None:
    return None if q is None else Fraction(int(q.numerator), int(q.denominator))


def _side(terms, const) -> str:
    parts = [n if c == 1 else f"{c}*{n}" for c, n in terms]
    if const:
        parts.append(str(const))
    return " + ".join(parts) if parts else "0"


def _candidates(lo, lo_s, hi, hi_s) -> list[Fraction]:
    if lo is not None and hi is not None:
        if lo == hi:
            return [lo]
        mid = (lo + hi) / 2
        vals = [lo if not lo_s else (lo + mid) / 2, mid, hi if not hi_s else (mid + hi) / 2]
    elif lo is not None:
        vals = [lo if not lo_s else lo + Fraction(1, 2), lo + 1, lo + 10]
    elif hi is not None:
        vals = [hi if not hi_s else hi - Fraction(1, 2), hi - 1, hi - 10]
    else:
        vals = [Fraction(0), Fraction(1), Fraction(-1)]
    seen, out = set(), []
    for v in vals:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


# ---------------------------------------------------------------------------
# operations


def intersect(a: Polyhedron, b: Polyhedron) -> Polyhedron:
    a._check(b)
    if a.rows is None or b.rows is None:
        return Polyhedron.bottom(a.universe)
    if not b.rows:
        return a
    if not a.rows:
        return b
    return Polyhedron.from_rows(a.universe, a.rows + b.rows)


def is_empty(p: Polyhedron) -> bool:
    return p.is_empty()


def eliminate(p: Polyhedron, names: Iterable[str]) -> Polyhedron:
    """Exact existential projection of ``names`` out of ``p``."""
    idx = {p.universe.index(n) for n in names}
    if p.rows is None or not idx:
        return p
    rows = _eliminate(p.rows, idx)
    return Polyhedron(p.universe, None if rows is None else tuple(rows))


def time_elapse(p: Polyhedron, invariant: Polyhedron | None = None) -> Polyhedron:
    """Let every clock advance by the same ``d >= 0``; other sorts stay put."""
    if p.rows is None:
        return p
    clocks = p.universe.clock_indices
    d = len(p.universe)
    rows = []
    for r in p.rows:
        s = sum(c for i, c in r.coeffs if i in clocks)
        if s == 0:
            rows.append(r)
            continue
        coeffs = dict(r.coeffs)
        coeffs[d] = -s
        rows.append(_normalize(coeffs, r.bound, r.rel))
    rows.append(Row(((d, -1),), Q(0), LE))
    out = _eliminate(rows, {d})
    result = Polyhedron(p.universe, None if out is None else tuple(out))
    if invariant is not None:
        result = intersect(result, invariant)
    return result


def reset(p: Polyhedron, clocks: Iterable[str]) -> Polyhedron:
    clocks = list(clocks)
    if not clocks or p.rows is None:
        return p
    for c in clocks:
        if p.universe.sort(c) is not Sort.CLOCK:
            raise ValueError(f"{c!r} is not a clock")
    projected = eliminate(p, clocks)
    if projected.rows is None:
        return projected
    zero = [Row(((p.universe.index(c), 1),), Q(0), EQ) for c in clocks]
    return Polyhedron.from_rows(p.universe, projected.rows + tuple(zero))


_WEIGHT_SORTS = (Sort.WEIGHT_VARIABLE, Sort.WEIGHT_PARAMETER)


def affine_image(p: Polyhedron, assignments: Mapping[str, LinExpr]) -> Polyhedron:
    """Simultaneous update ``w := expr`` of weight variables."""
    u = p.universe
    for target, expr in assignments.items():
        if u.sort(target) is not Sort.WEIGHT_VARIABLE:
            raise ValueError(f"update target {target!r} is not a weight variable")
        for n in expr.names:
            if u.sort(n) not in _WEIGHT_SORTS:
                raise ValueError(f"update of {target!r} reads non-weight {n!r}")
    if not assignments or p.rows is None:
        return p
    targets = {u.index(t) for t in assignments}
    translation = all(
        expr.coefficient(t) == 1 and not ({u.index(n) for n in expr.names if n != t} & targets)
        for t, expr in assignments.items()
    )
    if translation:
        # w := w + e with e free of targets: substitute w_old = w_new - e
        shift = {}
        for t, expr in assignments.items():
            shift[u.index(t)] = (expr - LinExpr.var(t))
        rows = []
        for r in p.rows:
            coeffs = dict(r.coeffs)
            bound = r.bound
            touched = False
            for i, c in r.coeffs:
                if i in shift:
                    touched = True
                    e = shift[i]
                    for n, k in e.terms:
                        j = u.index(n)
                        coeffs[j] = coeffs.get(j, 0) - c * k
                    bound += c * e.const
            rows.append(_normalize(coeffs, bound, r.rel) if touched else r)
        return Polyhedron.from_rows(u, rows)
    base = len(u)
    primes = {}
    rows = list(p.rows)
    for k, (t, expr) in enumerate(sorted(assignments.items())):
        j = base + k
        primes[j] = u.index(t)
        coeffs = {j: Fraction(1)}
        for n, c in expr.terms:
            i = u.index(n)
            coeffs[i] = coeffs.get(i, 0) - c
        rows.append(_normalize(coeffs, expr.const, EQ))
    out = _eliminate(rows, targets)
    if out is None:
        return Polyhedron.bottom(u)
    renamed = [
        _normalize({primes.get(i, i): c for i, c in r.coeffs}, r.bound, r.rel) for r in out
    ]
    return Polyhedron.from_rows(u, renamed)


def includes(a: Polyhedron, b: Polyhedron) -> bool:
    """True iff every point of ``b`` lies in ``a``."""
    a._check(b)
    if b.is_empty():
        return True
    if a.rows is None:
        return False
    brows = list(b.rows)
    # b is a cylinder along any variable it leaves free, so a row of a on such
    # a variable cannot contain it
    if not _variables(a.rows) <= _variables(brows):
        return False
    return all(_entails(brows, r) for r in a.rows)


def difference(a: Polyhedron, b: Polyhedron) -> list[Polyhedron]:
    """``a`` minus ``b`` as a list of pairwise disjoint non-empty polyhedra."""
    a._check(b)
    if a.is_empty():
        return []
    if b.is_empty():
        return [a]
    pieces = []
    acc = a
    for r in b.rows:
        for n in _negations(r):
            piece = Polyhedron.from_rows(a.universe, acc.rows + (n,))
            if not piece.is_empty():
                pieces.append(piece)
        acc = Polyhedron.from_rows(a.universe, acc.rows + (r,))
        if acc.is_empty():
            break
    return pieces


def covers(disjuncts: Iterable[Polyhedron], p: Polyhedron) -> bool:
    """Exact test of ``p`` being inside the union of ``disjuncts``."""
    remaining = [] if p.is_empty() else [p]
    for q in disjuncts:
        if not remaining:
            break
        remaining = [piece for x in remaining for piece in difference(x, q)]
    return not remaining
