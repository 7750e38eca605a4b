"""``promptcut`` command line: check, cutoff, verify-param, construct.

Exit codes: 0 holds / satisfied / verified, 1 violated or verification
failed, 2 usage, load or applicability errors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from pathlib import Path

from . import __version__
from .checker import (NoCutoffError, Verdict, check, check_parameterized,
                      check_parameterized_token, holds)
from .constructions import LEMMAS, PreconditionError, min_fair_bound, min_token_bound
from .cutoff import CutoffQuery, NoKnownCutoff, SideConditionError, cutoff_for, reduce_indexed
from .formula import FormulaSyntaxError, atoms_of, conjunction, parse_formula, substitute_indices, to_text
from .loaders import LoadError, load_system, parse_graph, parse_token
from .protocol import FairnessSpec, GuardedSystem, ReplayError
from .serialize import SchemaError, digest, dumps, lasso_from_json, lasso_to_json
from .tokens import TokenSystem

__all__ = ["main", "build_parser"]


class UsageError(Exception):
    pass


def _add_system_args(p):
    p.add_argument("--system", help="guarded system file (templates plus a system block)")
    p.add_argument("--templates", nargs="*", default=[], help="extra template files")
    p.add_argument("--token", help="token process file")
    p.add_argument("--graph", help="token graph file")


def _add_output_args(p):
    p.add_argument("--json", metavar="OUT", help="write the JSON report here ('-' for stdout)")
    p.add_argument("--no-meta", action="store_true", help="omit timestamps and timings")
    p.add_argument("--threads", type=int, default=1, help="accepted for scripting; search is sequential")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="promptcut", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", help="check one system instance")
    _add_system_args(c)
    c.add_argument("--formula", required=True)
    c.add_argument("--n", type=int, help="number of B processes (guarded systems)")
    c.add_argument("--fairness", choices=["gb", "lb"], required=True)
    c.add_argument("--b", type=int, required=True)
    c.add_argument("--k-max", default="auto")
    _add_output_args(c)

    q = sub.add_parser("cutoff", help="look up the cutoff for a system class")
    q.add_argument("--class", dest="system_class", required=True, choices=["disj", "conj", "token"])
    q.add_argument("--fairness", choices=["gb", "lb"], required=True)
    q.add_argument("--logic", choices=["ltl", "prompt"], required=True)
    q.add_argument("--h", type=int, required=True)
    q.add_argument("--qb", type=int)
    q.add_argument("--not-bounded-initializing", action="store_true",
                   help="declare that B is not bounded initializing")
    _add_output_args(q)

    v = sub.add_parser("verify-param", help="decide a property for all system sizes")
    _add_system_args(v)
    v.add_argument("--formula", required=True)
    v.add_argument("--fairness", choices=["gb", "lb"], required=True)
    v.add_argument("--b-range", required=True, help="e.g. 1..3 or 1,2,4")
    v.add_argument("--n", type=int, help="override the cutoff size")
    v.add_argument("--indices", default="1,2", help="graph vertices bound to the two indices (token)")
    v.add_argument("--k-max", default="auto")
    _add_output_args(v)

    k = sub.add_parser("construct", help="apply a run transformation and verify it")
    _add_system_args(k)
    k.add_argument("--lemma", required=True, choices=sorted(LEMMAS))
    k.add_argument("--run", required=True, help="input lasso JSON")
    k.add_argument("--b", type=int, help="fairness bound of the input (default: tightest)")
    k.add_argument("--copy", type=int, default=2, help="copied or shared B index")
    k.add_argument("--mode", choices=["lb", "gb"], default="lb")
    k.add_argument("--g", type=int, default=1)
    k.add_argument("--h", dest="hh", type=int, default=2)
    k.add_argument("--reroute", type=int, help="rerouted vertex for mon-token")
    _add_output_args(k)
    return ap


# --------------------------------------------------------------------------
# helpers


def _b_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad b range {text!r}") from None
    if not out or min(out) < 1:
        raise UsageError(f"b range {text!r} must list bounds >= 1")
    return out


def _k_max(text: str):
    if text == "auto":
        return "auto"
    if not text.isdigit():
        raise UsageError("--k-max takes a non-negative integer or 'auto'")
    return int(text)


def _load_kind(args):
    if args.system and (args.token or args.graph):
        raise UsageError("give either --system or --token/--graph")
    if args.system:
        a, b = load_system(args.system, args.templates)
        return "guarded", (a, b), [args.system, *args.templates]
    if args.token and args.graph:
        t = parse_token(Path(args.token).read_text(), args.token)
        g = parse_graph(Path(args.graph).read_text(), args.graph)
        return "token", (t, g), [args.token, args.graph]
    raise UsageError("a system needs --system, or --token together with --graph")


def _formula(path: str):
    try:
        return parse_formula(Path(path).read_text())
    except FormulaSyntaxError as e:
        raise LoadError(f"formula: {e}", source=path) from None


def _meta(args, files, t0):
    if args.no_meta:
        return {}
    return {"meta": {"version": __version__, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                     "seconds": round(time.perf_counter() - t0, 3)}}


def _emit(args, report: dict):
    text = dumps(report)
    if args.json == "-":
        sys.stdout.write(text)
    elif args.json:
        Path(args.json).write_text(text)


def _strip_timing(stats: dict, no_meta: bool) -> dict:
    return {k: v for k, v in stats.items() if not (no_meta and k == "seconds")}


def _verdict_json(v, kind: str, no_meta: bool) -> dict:
    if isinstance(v, Verdict):
        out = {"holds": v.holds, "stats": _strip_timing(v.stats, no_meta), "deadlocks": v.deadlocks}
        if v.counterexample is not None:
            out["counterexample"] = lasso_to_json(v.counterexample, kind)
        return out
    out = {"outcome": v.outcome, "satisfied": v.satisfied, "k": v.k, "k_max": v.k_max, "b": v.b,
           "certified": v.certified, "tried": v.tried, "rechecked_next": v.rechecked_next,
           "stats": _strip_timing(v.stats, no_meta), "deadlocks": v.deadlocks}
    if v.witnesses:
        out["witnesses"] = {str(k): lasso_to_json(x, kind) for k, x in v.witnesses.items()
                            if x is not None}
    return out


def _describe(v) -> str:
    if isinstance(v, Verdict):
        return "holds" if v.holds else "violated"
    return v.outcome


def _token_body(phi, g):
    """Conjunction over every assignment of distinct vertices to the index variables."""
    if not phi.variables:
        return phi.body
    out = []
    for combo in itertools.permutations(range(1, g.n + 1), phi.h):
        out.append(substitute_indices(phi.body, dict(zip(phi.variables, combo))))
    return conjunction(out)


# --------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    t0 = time.perf_counter()
    kind, parts, files = _load_kind(args)
    phi = _formula(args.formula)
    k_max = _k_max(args.k_max)
    if args.b < 1:
        raise UsageError("--b must be at least 1")
    if kind == "guarded":
        if args.n is None or args.n < 1:
            raise UsageError("guarded checks need --n >= 1")
        system = GuardedSystem(*parts, args.n)
        try:
            body = reduce_indexed(phi, args.n)
        except ValueError as e:
            raise UsageError(str(e)) from None
        top = max([a.process for a in atoms_of(body)] + [max(phi.h, 1)])
        fairness = FairnessSpec.gb(args.b) if args.fairness == "gb" else \
            FairnessSpec.lb(args.b, range(0, top + 1))
    else:
        system = TokenSystem(*parts)
        body = _token_body(phi, parts[1])
        fairness = FairnessSpec.gb(args.b)
    v = check(system, body, fairness, k_max)
    report = {"schema": 1, "command": "check", "inputs": {f: digest(f) for f in files + [args.formula]},
              "formula": to_text(body), "fairness": args.fairness, "b": args.b,
              "n": args.n if kind == "guarded" else parts[1].n,
              "verdict": _verdict_json(v, kind, args.no_meta), **_meta(args, files, t0)}
    _emit(args, report)
    print(f"{_describe(v)}  ({to_text(body)}, {args.fairness} b={args.b})")
    return 0 if holds(v) else 1


def cmd_cutoff(args) -> int:
    t0 = time.perf_counter()
    try:
        q = CutoffQuery(args.system_class, args.fairness, args.logic, args.h, args.qb,
                        False if args.not_bounded_initializing else None)
    except ValueError as e:
        raise UsageError(str(e)) from None
    try:
        res = cutoff_for(q)
    except SideConditionError as e:
        print(f"side condition violated: {e}", file=sys.stderr)
        return 2
    report = {"schema": 1, "command": "cutoff", "query": {
        "class": q.system_class, "fairness": q.fairness, "logic": q.logic, "h": q.h, "qb": q.qb},
        **_meta(args, [], t0)}
    if isinstance(res, NoKnownCutoff):
        report["cutoff"] = None
        report["reason"] = res.reason
        _emit(args, report)
        print(res.describe())
        return 1
    report.update(cutoff=res.c, side_conditions=list(res.side_conditions), citation=res.rule)
    _emit(args, report)
    print(res.describe())
    return 0


def cmd_verify_param(args) -> int:
    t0 = time.perf_counter()
    kind, parts, files = _load_kind(args)
    phi = _formula(args.formula)
    bs = _b_range(args.b_range)
    k_max = _k_max(args.k_max)
    try:
        if kind == "guarded":
            rep = check_parameterized(*parts, phi, args.fairness, bs, n=args.n, k_max=k_max)
        else:
            idx = [int(t) for t in args.indices.split(",")]
            rep = check_parameterized_token(*parts, phi, idx, bs, k_max=k_max)
    except (NoCutoffError, SideConditionError) as e:
        print(f"no applicable cutoff: {e}", file=sys.stderr)
        _emit(args, {"schema": 1, "command": "verify-param", "error": str(e), **_meta(args, files, t0)})
        return 2
    report = {"schema": 1, "command": "verify-param",
              "inputs": {f: digest(f) for f in files + [args.formula]},
              "formula": str(phi), "cutoff": rep.cutoff.c, "checked_size": rep.n,
              "side_conditions": list(rep.cutoff.side_conditions), "citation": rep.cutoff.rule,
              "claim": rep.claim, "notes": rep.notes,
              "sweep": [{"b": b, **_verdict_json(v, kind, args.no_meta)} for b, v in rep.sweep.entries],
              **_meta(args, files, t0)}
    if rep.graph is not None:
        report["reduced_graph"] = {"n": rep.graph.n, "edges": sorted(rep.graph.edges)}
    _emit(args, report)
    for b, v in rep.sweep.entries:
        print(f"b={b}: {_describe(v)}")
    for note in rep.notes:
        print(f"note: {note}")
    print(rep.claim)
    return 0 if rep.holds else 1


def cmd_construct(args) -> int:
    t0 = time.perf_counter()
    kind, parts, files = _load_kind(args)
    try:
        doc = json.loads(Path(args.run).read_text())
        x, xkind = lasso_from_json(doc)
    except (json.JSONDecodeError, SchemaError) as e:
        raise LoadError(f"run: {e}", source=args.run) from None
    if xkind != kind:
        raise UsageError(f"run is a {xkind} lasso but the system is {kind}")
    lemma = args.lemma
    token_lemma = lemma.endswith("token")
    if token_lemma != (kind == "token"):
        raise UsageError(f"{lemma} needs a {'token' if token_lemma else 'guarded'} system")
    width = len(x.state(0))
    try:
        if kind == "guarded":
            system = GuardedSystem(*parts, width - 1)
            x.validate(system)
            procs = range(width) if args.mode == "gb" or lemma == "bound-conj" else (0, 1)
            b = args.b or min_fair_bound(x, procs)
            if b is None:
                raise PreconditionError("input is not fair for any bound")
            if lemma in ("mon-disj", "mon-conj"):
                rep = LEMMAS[lemma](system, x, b, i=args.copy, mode=args.mode)
            else:
                rep = LEMMAS[lemma](system, x, b)
        else:
            system = TokenSystem(parts[0], parts[1])
            if parts[1].n != width:
                raise UsageError(f"run has {width} processes, graph has {parts[1].n}")
            x.validate(system)
            b = args.b or min_token_bound(x, width)
            if b is None:
                raise PreconditionError("input is not fair for any bound")
            if lemma == "mon-token":
                rep = LEMMAS[lemma](system, x, b, args.g, args.hh, args.reroute)
            else:
                rep = LEMMAS[lemma](system, x, b, args.g, args.hh)
    except ReplayError as e:
        print(f"replay failed at step {e.step}: {e}", file=sys.stderr)
        return 2
    except PreconditionError as e:
        print(f"precondition: {e}", file=sys.stderr)
        return 2
    extra = {k: (list(v) if isinstance(v, tuple) else v) for k, v in rep.extra.items()}
    report = {"schema": 1, "command": "construct", "lemma": lemma,
              "inputs": {f: digest(f) for f in files + [args.run]},
              "input_bound": b, "claimed_d": rep.claimed_d, "measured_d": rep.measured_d,
              "claimed_bound": rep.claimed_bound, "fairness": rep.fairness_kind,
              "verifications": {"valid": rep.valid, "d_equiv": rep.d_ok, "fair": rep.fair,
                                **{k: v for k, v in extra.items() if k.endswith("_ok")}},
              "failures": rep.failures, "errors": rep.errors,
              "details": {k: v for k, v in extra.items() if not k.endswith("_ok")},
              "output": lasso_to_json(rep.output, kind), **_meta(args, files, t0)}
    _emit(args, report)
    if rep.ok:
        print(f"{lemma}: all verifications passed (d={rep.measured_d} <= {rep.claimed_d}, "
              f"fair at b={rep.claimed_bound})")
        return 0
    print(f"{lemma}: verification failed: {', '.join(rep.failures)}")
    return 1


COMMANDS = {"check": cmd_check, "cutoff": cmd_cutoff, "verify-param": cmd_verify_param,
            "construct": cmd_construct}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.cmd](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except LoadError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
