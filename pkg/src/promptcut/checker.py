"""Verdicts for LTL\\X and Prompt-LTL\\X under bounded fairness.

Prompt formulas are decided per fairness bound b by searching for the
least k at which the unfolded formula holds on every fair run.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cutoff import CutoffQuery, CutoffResult, NoKnownCutoff, cutoff_for, reduce_indexed
from .formula import (FALSE, Formula, IndexedFormula, Prompt, Until, TRUE, _rebuild, atoms_of, children,
                      eval_formula, instantiate_k, is_prompt_free, negate)
from .omega import RunGraph, lasso_bound, ltl_to_buchi, periodic_counterexample
from .protocol import (FairnessSpec, GuardedSystem, ProcessTemplate, SystemLasso, classify,
                       find_deadlocks, is_fair, project, reachable)
from .tokens import TokenGraph, TokenProcess, TokenSystem, connectivity_vector, \
    synth_reduction_graph, token_fair

__all__ = ["Verdict", "PromptVerdict", "SweepReport", "ParamReport", "check_ltl", "check_prompt",
           "check", "b_sweep", "check_parameterized", "check_parameterized_token",
           "relax_prompt", "lasso_violations", "lasso_emitted", "k_rechecks", "NoCutoffError", "has_fair_run"]

# unfolded prompt chains nest one Next per unit of k
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

K_CAP = 256
# every counterexample emitted in this process, checked against its length bound
lasso_violations: list[str] = []
lasso_emitted = [0]
# (k, holds at k+1) for every satisfied prompt verdict
k_rechecks: list[tuple[int, bool]] = []


class NoCutoffError(ValueError):
    pass


@dataclass
class Verdict:
    holds: bool
    counterexample: SystemLasso | None = None
    trace: list | None = None
    stats: dict = field(default_factory=dict)
    deadlocks: int = 0


@dataclass
class PromptVerdict:
    """``satisfied`` with the least passing k, or violated for every k up to ``k_max``.

    ``certified`` marks a violation that holds for every k, shown by a fair
    run falsifying the formula with each prompt-eventually read as plain
    eventually.
    """

    satisfied: bool
    k: int | None
    k_max: int
    b: int | None
    certified: bool = False
    witnesses: dict = field(default_factory=dict)
    tried: list = field(default_factory=list)
    rechecked_next: bool | None = None
    stats: dict = field(default_factory=dict)
    deadlocks: int = 0

    @property
    def outcome(self) -> str:
        if self.satisfied:
            return f"satisfied-with(k={self.k})"
        return "violated-for-all-k" if self.certified else f"violated-up-to(k={self.k_max})"


def _fairness_sets(system, fairness: FairnessSpec):
    procs = list(system.processes)
    if isinstance(system, TokenSystem):
        if fairness.kind == "unconditional":
            raise ValueError("token systems are checked under bounded token fairness")
        return procs, [], fairness.b
    match fairness.kind:
        case "global-bounded":
            return procs, [], fairness.b
        case "local-bounded":
            scope = sorted(p for p in fairness.scope if p in procs)
            return scope, [p for p in procs if p not in fairness.scope], fairness.b
    return [], procs, None


def _highest_index(phi: Formula) -> int:
    return max((a.process for a in atoms_of(phi)), default=0)


def _bound_for(system, fairness: FairnessSpec, aut_size: int) -> int | None:
    if fairness.b is None:
        return None
    if isinstance(system, GuardedSystem):
        return lasso_bound(len(system.a.states), len(system.b.states), system.n, fairness.b, aut_size)
    n = system.n
    return 2 * len(system.t.states) ** n * fairness.b ** n * aut_size


def is_fair_for(system, x: SystemLasso, fairness: FairnessSpec) -> bool:
    if isinstance(system, TokenSystem):
        return token_fair(x, fairness.b, system.n)
    return is_fair(x, fairness, system.processes)


def _graph(system, phi: Formula, fairness: FairnessSpec, symmetry: bool) -> RunGraph:
    counted, tracked, b = _fairness_sets(system, fairness)
    sym: Sequence[int] = ()
    if symmetry and isinstance(system, GuardedSystem):
        top = max(_highest_index(phi), max((p for p in fairness.scope), default=0))
        sym = range(top + 1, system.n + 1)
    return RunGraph(system, ltl_to_buchi(negate(phi)), counted=counted, tracked=tracked, b=b,
                    symmetric=sym)


def check_ltl(system, phi: Formula, fairness: FairnessSpec, *, symmetry: bool = True,
              deadlock_check: bool = True) -> Verdict:
    """Does every fair infinite run satisfy the prompt-free ``phi``?"""
    if not is_prompt_free(phi):
        raise ValueError("check_ltl needs a prompt-free formula; use check_prompt")
    t0 = time.perf_counter()
    g = _graph(system, phi, fairness, symmetry)
    lasso = g.find_lasso()
    stats = {"automaton_states": len(g.aut), "expanded": g.expanded}
    dead = len(_deadlocks(system)) if deadlock_check else 0
    if lasso is None:
        stats["seconds"] = time.perf_counter() - t0
        return Verdict(True, stats=stats, deadlocks=dead)
    bound = _bound_for(system, fairness, len(g.aut))
    x, conc = periodic_counterexample(g, lasso)
    lasso_emitted[0] += 1
    if bound is not None and (len(x.prefix) > bound or len(x.period) > bound):
        lasso_violations.append(f"|u|={len(x.prefix)} |v|={len(x.period)} bound={bound}")
    assert bound is None or (len(x.prefix) <= bound and len(x.period) <= bound), \
        f"counterexample lengths {len(x.prefix)}/{len(x.period)} exceed {bound}"
    _certify(system, x, phi, fairness)
    stats["seconds"] = time.perf_counter() - t0
    trace = [(v[0], v[1], v[3]) for v, _ in conc.stem + conc.cycle]
    return Verdict(False, x, trace, stats, dead)


def _certify(system, x: SystemLasso, phi: Formula, fairness: FairnessSpec, k: int = 0) -> None:
    x.validate(system)
    if not is_fair_for(system, x, fairness):
        raise AssertionError("emitted counterexample is not fair")
    w = project(x, system.processes, system)
    if eval_formula(w, phi, 0, k):
        raise AssertionError("emitted counterexample satisfies the formula")


def _deadlocks(system) -> set:
    if isinstance(system, GuardedSystem):
        return find_deadlocks(system)
    seen = reachable(system.initial_states(), lambda s: [t for t, _ in system.successors(s)])
    return {s for s in seen if not system.successors(s)}


def relax_prompt(phi: Formula) -> Formula:
    """Read every prompt-eventually as plain eventually."""
    if isinstance(phi, Prompt):
        return Until(TRUE, relax_prompt(phi.operand))
    kids = children(phi)
    return phi if not kids else _rebuild(phi, tuple(relax_prompt(c) for c in kids))


def check_prompt(system, phi: Formula, fairness: FairnessSpec, k_max: int | str = "auto",
                 *, symmetry: bool = True, k_cap: int = K_CAP) -> PromptVerdict:
    """Least k with every fair run satisfying ``phi`` at bound k, searched up to ``k_max``.

    The search doubles k until a pass and then bisects, which returns the
    same least k as scanning upward because satisfaction is monotone in k.
    """
    if fairness.kind == "unconditional":
        raise ValueError("prompt checks need a bounded fairness notion")
    t0 = time.perf_counter()
    dead = len(_deadlocks(system))
    relaxed = check_ltl(system, relax_prompt(phi), fairness, symmetry=symmetry, deadlock_check=False)
    if k_max == "auto":
        g0 = _graph(system, instantiate_k(phi, 0), fairness, symmetry)
        k_max = min(g0.count_reachable() + 1, k_cap)
    k_max = int(k_max)
    if not relaxed.holds:
        return PromptVerdict(False, None, k_max, fairness.b, True, {"relaxed": relaxed.counterexample},
                             stats={"seconds": time.perf_counter() - t0}, deadlocks=dead)
    results: dict[int, Verdict] = {}

    def at(k):
        if k not in results:
            results[k] = check_ltl(system, instantiate_k(phi, k), fairness, symmetry=symmetry,
                                   deadlock_check=False)
        return results[k].holds

    lo, hi = -1, None  # lo fails (or is -1), hi passes
    k = 0
    while k <= k_max:
        if at(k):
            hi = k
            break
        lo = k
        k = 1 if k == 0 else 2 * k
    if hi is None and lo < k_max:
        if at(k_max):
            hi = k_max
        else:
            lo = k_max
    if hi is not None:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if at(mid):
                hi = mid
            else:
                lo = mid
        nxt = at(hi + 1)
        k_rechecks.append((hi, nxt))
        assert nxt, f"formula holds at k={hi} but not at k={hi + 1}"
    wit = {k: v.counterexample for k, v in sorted(results.items()) if not v.holds}
    stats = {"seconds": time.perf_counter() - t0, "checks": len(results)}
    if hi is None:
        return PromptVerdict(False, None, k_max, fairness.b, False, wit, sorted(results), stats=stats,
                             deadlocks=dead)
    return PromptVerdict(True, hi, k_max, fairness.b, False, wit, sorted(results), True, stats, dead)


def check(system, phi: Formula, fairness: FairnessSpec, k_max: int | str = "auto", **kw):
    if is_prompt_free(phi):
        return check_ltl(system, phi, fairness, **kw)
    return check_prompt(system, phi, fairness, k_max, **kw)


def holds(v) -> bool:
    return v.holds if isinstance(v, Verdict) else v.satisfied


@dataclass
class SweepReport:
    entries: list  # (b, verdict)

    @property
    def summary(self) -> str:
        if not self.entries:
            return "empty range: no verdict"
        top = max(b for b, _ in self.entries)
        bad = [b for b, v in self.entries if not holds(v)]
        if bad:
            return f"violated from b = {min(bad)}"
        return f"holds for all b <= {top}"

    @property
    def holds(self) -> bool | None:
        return None if not self.entries else all(holds(v) for _, v in self.entries)


def has_fair_run(system, fairness: FairnessSpec) -> bool:
    """Whether any fair infinite run exists; verdicts without one hold vacuously."""
    return not check_ltl(system, FALSE, fairness, symmetry=True, deadlock_check=False).holds


def _vacuity_notes(system, kind: str, b_range, scope=()) -> list[str]:
    out = []
    for b in sorted(set(b_range)):
        f = FairnessSpec.gb(b) if kind == "gb" else FairnessSpec.lb(b, scope)
        if not has_fair_run(system, f):
            out.append(f"no fair run exists at b={b}; the verdict there holds vacuously")
    return out


def b_sweep(make_system, phi: Formula, kind: str, b_range: Iterable[int],
            scope: Sequence[int] = (), k_max: int | str = "auto", **kw) -> SweepReport:
    """Per-b verdicts; a violation at b must persist for every larger b."""
    entries = []
    for b in sorted(set(b_range)):
        system = make_system(b) if callable(make_system) else make_system
        f = FairnessSpec.gb(b) if kind == "gb" else FairnessSpec.lb(b, scope)
        entries.append((b, check(system, phi, f, k_max, **kw)))
    for (b1, v1), (b2, v2) in zip(entries, entries[1:]):
        if not holds(v1):
            assert not holds(v2) or (isinstance(v1, PromptVerdict) and not v1.certified
                                     and v2.k > v1.k_max), \
                f"violation at b={b1} disappeared at b={b2}"
    return SweepReport(entries)


@dataclass
class ParamReport:
    cutoff: CutoffResult
    n: int
    formula: Formula
    sweep: SweepReport
    graph: TokenGraph | None = None
    notes: list = field(default_factory=list)

    @property
    def holds(self) -> bool | None:
        return self.sweep.holds

    @property
    def claim(self) -> str:
        scope = f"for all n >= {self.cutoff.c}" if self.graph is None else \
            "for every graph sharing the connectivity vector"
        return f"{self.sweep.summary}, {scope} ({self.cutoff.rule})"


def _logic(phi: Formula) -> str:
    return "ltl" if is_prompt_free(phi) else "prompt"


def check_parameterized(a: ProcessTemplate, b: ProcessTemplate, phi: IndexedFormula, kind: str,
                        b_range: Iterable[int], *, n: int | None = None, **kw) -> ParamReport:
    """Decide ``A || B^n |= phi`` for all n at or above the cutoff, per swept b."""
    b_range = list(b_range)
    cls = classify(a, b)
    if cls.kind == "mixed":
        raise NoCutoffError("templates mix guard kinds; " + "; ".join(cls.notes))
    q = CutoffQuery(cls.kind, kind, _logic(phi.body), max(phi.h, 1), len(b.states),
                    cls.bounded_initializing)
    res = cutoff_for(q)
    if isinstance(res, NoKnownCutoff):
        raise NoCutoffError(res.reason)
    size = res.c if n is None else n
    body = reduce_indexed(phi, size)
    scope = range(0, phi.h + 1)
    system = GuardedSystem(a, b, size)
    sweep = b_sweep(system, body, kind, b_range, scope, **kw)
    notes = list(cls.notes) + _vacuity_notes(system, kind, b_range, scope)
    return ParamReport(res, size, body, sweep, notes=notes)


def check_parameterized_token(t: TokenProcess, g: TokenGraph, phi: IndexedFormula,
                              indices: Sequence[int], b_range: Iterable[int], **kw) -> ParamReport:
    """Reduce a 2-indexed check on ``T^n_G`` to the synthesized 4-vertex graph."""
    b_range = list(b_range)
    if phi.h != 2 or len(indices) != 2:
        raise NoCutoffError("token reduction is implemented for two quantified indices")
    gi, hi = indices
    v = connectivity_vector(g, gi, hi)
    g2 = synth_reduction_graph(v)
    res = cutoff_for(CutoffQuery("token", "gb", _logic(phi.body), 2))
    body = reduce_indexed(phi, 4)
    reduced = TokenSystem(t, g2)
    sweep = b_sweep(reduced, body, "gb", b_range, **kw)
    notes = [f"connectivity vector {v}"] + _vacuity_notes(reduced, "gb", b_range)
    return ParamReport(res, 4, body, sweep, g2, notes)
