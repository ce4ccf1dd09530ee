"""Command-line interface: ``aftsynth analyze|export|check|simulate``.

Exit codes: 0 result found, 1 input error, 2 internal error, 3 empty result
(``analyze``) or a mismatch (``check``).
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .export import to_imitator
from .galileo import AttackFaultTree, GalileoError, parse_file, validate
from .oracle import UnsupportedTree, crosscheck
from .polyhedra import Polyhedron
from .pwta import SearchBudgetExceeded, run_reaches
from .synthesis import ConstraintResult, check_valuation, ef_synth, equivalent, universe_of
from .translation import ROOT, TranslationOutput, build_network

log = logging.getLogger("aftsynth")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_EMPTY = 0, 1, 2, 3


class InputError(Exception):
    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


def _load(path: str) -> AttackFaultTree:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{path}: no such file")
    try:
        tree = parse_file(p)
    except GalileoError as exc:
        raise InputError(f"{path}: {exc}") from None
    diags = validate(tree)
    if diags:
        raise InputError(f"{path}: invalid tree", [f"{path}: {d}" for d in diags])
    return tree


def _fired_leaves(out: TranslationOutput, tree: AttackFaultTree, witness) -> list[str]:
    success = {v[1]: k for k, v in out.actions.items()}
    leaves = {leaf.name for leaf in tree.leaves}
    return [success[a] for a in witness if a in success and success[a] in leaves]


def _fmt(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# analyze


def _synthesize(args, tree):
    out = build_network(tree, strict_shapes=args.paper_shapes)
    result = ef_synth(out.network, out.target(args.target), subsumption=not args.no_subsumption,
                      jobs=args.jobs, seed=args.seed)
    return out, result


def result_document(path, target, out, tree, result: ConstraintResult) -> dict:
    doc = result.to_json()
    doc["model"] = str(path)
    doc["target"] = target
    doc["seconds"] = round(result.seconds, 3)
    for item, w in zip(doc["disjuncts"], result.witnesses):
        item["fired"] = _fired_leaves(out, tree, w)
    return doc


def cmd_analyze(args) -> int:
    tree = _load(args.model)
    out, result = _synthesize(args, tree)
    if args.format == "json":
        print(json.dumps(result_document(args.model, args.target, out, tree, result), indent=2))
    else:
        print(f"# {args.model}: {len(result)} disjunct(s), {result.states} symbolic states, "
              f"{result.seconds:.2f}s")
        for i, (d, w) in enumerate(zip(result.disjuncts, result.witnesses), 1):
            fired = ", ".join(_fired_leaves(out, tree, w)) or "none"
            if i > 1:
                print("\nOR\n")
            print(f"# [{i}] leaves that succeeded: {fired}")
            print(d.minimize().to_text(sep="\n& "))
        if result.is_empty():
            print("False")
    return EXIT_OK if len(result) else EXIT_EMPTY


# ---------------------------------------------------------------------------
# export


def cmd_export(args) -> int:
    tree = _load(args.model)
    out = build_network(tree, strict_shapes=args.paper_shapes)
    text = to_imitator(out, args.target)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {args.output}: {exc}") from None
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def parse_grid(spec: str) -> dict[str, list[Fraction]]:
    """``p=0..12step3,q=5,r=1|2`` -> value lists (ranges include both ends)."""
    grid: dict[str, list[Fraction]] = {}
    if not spec:
        return grid
    for part in spec.split(","):
        if "=" not in part:
            raise InputError(f"bad grid entry {part!r} (expected name=values)")
        name, values = (s.strip() for s in part.split("=", 1))
        try:
            if ".." in values:
                lo, rest = values.split("..", 1)
                hi, _, step = rest.partition("step")
                lo, hi = Fraction(lo), Fraction(hi)
                step = Fraction(step) if step else Fraction(1)
                if step <= 0:
                    raise ValueError("step must be positive")
                vals = []
                v = lo
                while v <= hi:
                    vals.append(v)
                    v += step
            else:
                vals = [Fraction(v) for v in values.split("|")]
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad grid values for {name}: {exc}") from None
        grid[name] = vals
    return grid


def _observation_samples(result: ConstraintResult, fixed: dict) -> list[dict]:
    """Observation values to try at one model valuation: inside and just outside each disjunct."""
    obs = ("total_time", "total_cost", "total_damage")
    points = []
    for d in result.disjuncts:
        restricted = d.substitute(fixed)
        for pt in restricted.sample_points(limit=12):
            base = {k: pt.get(k, Fraction(0)) for k in obs}
            points.append(base)
            points.append({**base, "total_time": base["total_time"] + Fraction(1, 2)})
            points.append({**base, "total_cost": base["total_cost"] + 1})
    if not points:
        points.append({k: Fraction(0) for k in obs})
    unique = []
    for p in points:
        if p not in unique and p["total_time"] >= 0:
            unique.append(p)
    return unique


def grid_agreement(out: TranslationOutput, result: ConstraintResult, grid: dict,
                   budget: int = 500_000) -> tuple[int, list[str]]:
    """Compare ``check_valuation`` with the concrete search over a parameter grid."""
    net = out.network
    model_params = [p for p in result.parameters if p not in out.observation.values()]
    missing = [p for p in model_params if p not in grid]
    if missing:
        raise InputError(f"grid does not cover parameters {missing}")
    timing = set(net.timing_parameters)
    checked, mismatches = 0, []
    names = list(model_params)
    for combo in itertools.product(*(grid[n] for n in names)):
        fixed = dict(zip(names, combo))
        for obs in _observation_samples(result, fixed):
            val = {**fixed, **obs}
            tvals = {k: v for k, v in val.items() if k in timing}
            wvals = {k: v for k, v in val.items() if k not in timing}
            expected = check_valuation(result, val)
            try:
                trace = run_reaches(net, tvals, wvals, out.target(), step_budget=budget)
            except SearchBudgetExceeded:
                mismatches.append(f"{_show(val)}: search budget exhausted")
                continue
            checked += 1
            if (trace is not None) != expected:
                mismatches.append(f"{_show(val)}: constraints say {expected}, simulation says {trace is not None}")
    return checked, mismatches


def _show(val: dict) -> str:
    return ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(val.items()))


def cmd_check(args) -> int:
    tree = _load(args.model)
    out, result = _synthesize(args, tree)
    failures: list[str] = []
    lines: list[str] = []
    if args.expected:
        try:
            data = json.loads(Path(args.expected).read_text(encoding="utf-8"))
            expected = ConstraintResult.from_json(universe_of(out.network), data)
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot read expected result {args.expected}: {exc}") from None
        if equivalent(result.disjuncts, expected.disjuncts):
            lines.append("expected result: PASS")
        else:
            from .synthesis import result_covers
            for d in expected.disjuncts:
                if not result_covers(result, d):
                    failures.append(f"- expected but not produced: {d.minimize()}")
            for d in result.disjuncts:
                if not result_covers(expected, d):
                    failures.append(f"+ produced but not expected: {d.minimize()}")
            lines.append("expected result: FAIL")
    grid = parse_grid(args.grid) if args.grid else None
    if grid is None and not args.expected:
        if tree.is_concrete():
            try:
                report = crosscheck(tree, result)
                lines.append(f"oracle: {report.to_text()}")
                failures += report.mismatches
            except UnsupportedTree as exc:
                lines.append(f"oracle not applicable ({exc}); falling back to simulation")
                grid = {}
        else:
            raise InputError("parametric model: give --grid to check it by simulation")
    if grid is not None:
        checked, mism = grid_agreement(out, result, grid)
        lines.append(f"simulation: {'PASS' if not mism else 'FAIL'}: {checked} valuations, "
                     f"{len(mism)} mismatches")
        failures += mism
    for line in lines:
        print(line)
    for f in failures:
        print("  " + f)
    print("PASS" if not failures else "FAIL")
    return EXIT_OK if not failures else EXIT_EMPTY


# ---------------------------------------------------------------------------
# simulate


def _assignments(items) -> dict[str, Fraction]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"bad assignment {item!r} (expected name=value)")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"bad value in {item!r}") from None
    return out


def cmd_simulate(args) -> int:
    tree = _load(args.model)
    out = build_network(tree, strict_shapes=args.paper_shapes)
    net = out.network
    vals = _assignments(args.set)
    params = set(net.timing_parameters) | set(net.weight_parameters)
    unknown = set(vals) - params
    if unknown:
        raise InputError(f"unknown parameters {sorted(unknown)}")
    observed = set(out.observation.values())
    missing = sorted(params - observed - set(vals))
    if missing:
        raise InputError(f"missing values for {missing}")
    timing = set(net.timing_parameters)
    tvals = {k: v for k, v in vals.items() if k in timing}
    wvals = {k: v for k, v in vals.items() if k not in timing}
    if observed <= set(vals):
        trace = run_reaches(net, tvals, wvals, out.target(args.target), step_budget=args.budget)
    else:
        # observation values not given: stop when the top node reports
        tvals.setdefault("total_time", Fraction(0))
        for k in ("total_cost", "total_damage"):
            wvals.setdefault(k, Fraction(0))
        action = out.actions[tree.root][1 if args.target == "success" else 2]
        trace = run_reaches(net, tvals, wvals, target_action=action, step_budget=args.budget)
    if trace is None:
        print(f"{ROOT} {args.target}: unreachable")
        return EXIT_EMPTY
    print(f"# automata: {', '.join(a.name for a in net.automata)}")
    print(f"# clocks: {', '.join(net.clocks)}")
    print(f"# weights: {', '.join(net.weights)}")
    for action, delay, st in trace.steps:
        print(f"wait {_fmt(delay)}, {action}")
    final = trace.final
    w = final.weight_map(net)
    c = final.clock_map(net)
    print(f"# {ROOT} {args.target} at abs_time={_fmt(c['abs_time'])}, cost={_fmt(w['current_cost_root'])}, "
          f"damage={_fmt(w['current_damage_root'])}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aftsynth",
                                     description="Parameter synthesis for attack-fault trees.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, synth=True):
        p.add_argument("model", help="Galileo file")
        p.add_argument("--target", choices=("success", "fail"), default="success")
        p.add_argument("--paper-shapes", action="store_true",
                       help="gate automata without late-completion self-loops")
        if synth:
            p.add_argument("--jobs", type=int, default=1, help="worker processes for the exploration")
            p.add_argument("--no-subsumption", action="store_true")
            p.add_argument("--seed", type=int, default=None, help="shuffle exploration order")

    p = sub.add_parser("analyze", help="synthesize parameter constraints")
    common(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("export", help="write the network as an IMITATOR model")
    common(p, synth=False)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("check", help="cross-check the synthesized constraints")
    common(p)
    p.add_argument("--grid", default=None, help="e.g. tMax_Break=0..12step3,CostFindLAN_AP=0..40step20")
    p.add_argument("--expected", default=None, help="JSON result to compare against")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="print a witness run at fixed parameter values")
    common(p, synth=False)
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--budget", type=int, default=1_000_000)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("AFTSYNTH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = getattr(args, "format", "text")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except InputError as exc:
        if fmt == "json":
            print(json.dumps({"error": str(exc), "diagnostics": exc.diagnostics}, indent=2))
        else:
            print(f"error: {exc}", file=sys.stderr)
            for d in exc.diagnostics:
                print(f"  {d}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort reporting
        log.debug("internal error", exc_info=True)
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
