"""Brute-force projection oracle for small rational systems.

Membership of a point ``x`` in the projection of ``{(x, y) : rows}`` is decided
by enumerating the vertices of the (bounded) fibre over ``y``: every subset of
rows of the right size is solved as a system of equalities with Fractions.
The strict rows are then checked at the barycentre of the vertices, which lies
in the relative interior of the fibre's closure.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

REL = ("<=", "<", "=")


def random_system(rng: random.Random, nvars: int, box: int = 3):
    """Rows ``(coeffs, rel, bound)`` plus a box ``-box <= v <= box`` on every variable."""
    rows = []
    for _ in range(rng.randint(1, 4)):
        coeffs = [rng.randint(-5, 5) for _ in range(nvars)]
        if not any(coeffs):
            coeffs[rng.randrange(nvars)] = rng.choice((-1, 1))
        rel = rng.choices(REL, weights=(5, 3, 1))[0]
        rows.append((coeffs, rel, Fraction(rng.randint(-6, 6))))
    for i in range(nvars):
        unit = [0] * nvars
        unit[i] = 1
        rows.append((unit, "<=", Fraction(box)))
        rows.append(([-c for c in unit], "<=", Fraction(box)))
    return rows


def _solve(a: list[list[Fraction]], b: list[Fraction]):
    """Unique solution of a square system, or None."""
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def _holds(lhs: Fraction, rel: str, bound: Fraction, closure: bool = False) -> bool:
    if rel == "=":
        return lhs == bound
    if rel == "<" and not closure:
        return lhs < bound
    return lhs <= bound


def fibre_nonempty(rows, x: dict[int, Fraction], free: list[int]) -> bool:
    """Is there ``y`` over ``free`` with ``(x, y)`` satisfying all rows?"""
    fixed = []
    for coeffs, rel, bound in rows:
        rest = bound - sum(Fraction(coeffs[i]) * v for i, v in x.items())
        fixed.append(([Fraction(coeffs[j]) for j in free], rel, rest))
    if not free:
        return all(_holds(Fraction(0), rel, b) for _, rel, b in fixed)
    active = [r for r in fixed if any(r[0])]
    if not all(_holds(Fraction(0), rel, b) for c, rel, b in fixed if not any(c)):
        return False
    k = len(free)
    vertices = []
    for subset in itertools.combinations(active, k):
        y = _solve([list(r[0]) for r in subset], [r[2] for r in subset])
        if y is None:
            continue
        if all(_holds(sum(c * v for c, v in zip(cs, y)), rel, b, closure=True) for cs, rel, b in active):
            vertices.append(y)
    if not vertices:
        return False
    centre = [sum(v[i] for v in vertices) / len(vertices) for i in range(k)]
    return all(_holds(sum(c * v for c, v in zip(cs, centre)), rel, b) for cs, rel, b in active)
