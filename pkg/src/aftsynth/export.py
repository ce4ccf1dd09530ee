"""Write a translated network in the textual model format of IMITATOR 2.x.

The output is write-only (it is never parsed back) and byte-stable, so it can
be kept as a golden file.  Weight variables become ``discrete`` variables,
timing and weight parameters both become ``parameter``.
"""

from __future__ import annotations

from fractions import Fraction

from .pwta import Atom, Network, Pwta
from .translation import ROOT, TranslationOutput

__all__ = ["to_imitator"]


def _num(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _atom(a: Atom) -> str:
    rel = {"=": "="}.get(a.rel, a.rel)
    bound = a.bound if isinstance(a.bound, str) else _num(a.bound)
    return f"{a.var} {rel} {bound}"


def _conj(atoms) -> str:
    return " & ".join(_atom(a) for a in atoms) if atoms else "True"


def _expr(expr) -> str:
    parts = []
    for name, c in expr.terms:
        if c == 1:
            parts.append(f"+ {name}")
        elif c == -1:
            parts.append(f"- {name}")
        else:
            parts.append(f"{'-' if c < 0 else '+'} {_num(abs(c))} * {name}")
    if expr.const or not parts:
        parts.append(f"{'-' if expr.const < 0 else '+'} {_num(abs(expr.const))}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _automaton(aut: Pwta) -> list[str]:
    lines = [f"automaton {aut.name}"]
    actions = sorted(aut.actions)
    lines.append(f"synclabs: {', '.join(actions)};")
    lines.append("")
    for loc in aut.locations:
        prefix = "urgent loc" if loc in aut.urgent else "loc"
        lines.append(f"{prefix} {loc}: invariant {_conj(aut.invariant(loc))}")
        for e in aut.outgoing(loc):
            updates = [f"{c}' = 0" for c in sorted(e.resets)]
            updates += [f"{w}' = {_expr(x)}" for w, x in e.update]
            lines.append(f"\twhen {_conj(e.guard)} sync {e.action} do {{{', '.join(updates)}}} goto {e.target};")
        lines.append("")
    lines.append("end (* " + aut.name + " *)")
    return lines


def _decl(names, kind: str) -> list[str]:
    if not names:
        return []
    return ["\t" + ",\n\t".join(names) + f"\n\t\t: {kind};"]


def to_imitator(out: TranslationOutput, target: str = "success") -> str:
    """Model text with an EF property on the observer's success (or fail) location."""
    net: Network = out.network
    lines = ["(*", " * Network translated from an attack-fault tree.",
             f" * {len(net)} automata; property: reachability of {ROOT} {target}.", " *)", "", "var"]
    lines += _decl(list(net.clocks), "clock")
    lines += _decl(list(net.weights), "discrete")
    lines += _decl(list(net.timing_parameters) + list(net.weight_parameters), "parameter")
    lines.append("")
    for aut in net.automata:
        lines += _automaton(aut)
        lines.append("")
    init = [f"\t& loc[{a.name}] = {a.initial}" for a in net.automata]
    init += [f"\t& {c} = 0" for c in net.clocks]
    init += [f"\t& {w} = 0" for w in net.weights]
    init += [f"\t& {p} >= 0" for p in net.timing_parameters]
    lines.append("init := True")
    lines += init
    lines.append(";")
    lines.append("")
    loc = {"success": "success", "fail": "failed"}[target]
    lines.append(f"property := unreachable loc[{ROOT}] = {loc};")
    lines.append("")
    lines.append("end")
    return "\n".join(lines) + "\n"
