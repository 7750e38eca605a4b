"""Randomized experiments behind the acceptance suite.

``construction_trials`` feeds random fair lassos to each construction and
collects its reports. ``cutoff_consistency`` checks random templates at the
cutoff and the next two sizes and lists every row whose verdicts differ.
Both are seeded and deterministic.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .checker import check, has_fair_run
from .constructions import (ConstructionReport, bound_conj, bound_disj, bound_token,
                            min_fair_bound, min_token_bound, mon_conj, mon_disj, mon_token)
from .cutoff import CutoffQuery, NoKnownCutoff, cutoff_for
from .formula import Atom, to_text
from .generators import (random_conjunctive, random_disjunctive, random_fair_lasso, random_graph,
                         random_property, random_token_process)
from .protocol import FairnessSpec, GuardedSystem
from .tokens import TokenSystem, connectivity_vector, ring

__all__ = ["construction_trials", "cutoff_consistency", "Discrepancy", "ConsistencyReport",
           "CONSTRUCTIONS"]

CONSTRUCTIONS = ("mon_disj", "bound_disj", "mon_conj", "bound_conj", "mon_token", "bound_token")


def _guarded_input(rng, make, n_choices, walk_b, mode):
    while True:
        a, b = make(rng)
        system = GuardedSystem(a, b, rng.choice(n_choices))
        procs = list(system.processes)
        if mode == "gb":
            x = random_fair_lasso(rng, system, b=walk_b, counted=procs, tries=40)
        else:
            x = random_fair_lasso(rng, system, b=walk_b, counted=(0, 1), tracked=procs[2:], tries=40)
        if x is not None:
            return system, x


def _token_input(rng, make_graph, walk_b):
    while True:
        t = random_token_process(rng, 2)
        g = make_graph(rng)
        system = TokenSystem(t, g)
        x = random_fair_lasso(rng, system, b=walk_b(g.n), counted=tuple(system.processes), tries=20)
        if x is not None:
            return system, x


def _u2_u5_graph(rng):
    while True:
        g = random_graph(rng, 5, 0.25)
        v = connectivity_vector(g, 1, 2)
        if v[1] and v[4]:
            return g


def construction_trials(name: str, count: int = 100, seed: int = 0) -> list[ConstructionReport]:
    """``count`` reports of construction ``name`` on random inputs, each at the input's tightest bound."""
    rng = random.Random(f"{name}/{seed}")
    disj = lambda r: random_disjunctive(r, 2, r.choice((2, 3)))
    disj2 = lambda r: random_disjunctive(r, 2, 2)
    conj = lambda r: random_conjunctive(r, 2, r.choice((2, 3)))
    out = []
    for trial in range(count):
        mode = "gb" if trial % 2 else "lb"
        if name == "mon_disj":
            s, x = _guarded_input(rng, disj, (2, 3), 4, mode)
            b = min_fair_bound(x, s.processes if mode == "gb" else (0, 1))
            out.append(mon_disj(s, x, b, i=rng.randint(1, s.n), mode=mode))
        elif name == "bound_disj":
            s, x = _guarded_input(rng, disj2, (5, 6), 4, "lb")
            out.append(bound_disj(s, x, min_fair_bound(x, (0, 1))))
        elif name == "mon_conj":
            s, x = _guarded_input(rng, conj, (2, 3), 4, mode)
            b = min_fair_bound(x, s.processes if mode == "gb" else (0, 1))
            out.append(mon_conj(s, x, b, i=rng.randint(2, s.n), mode=mode))
        elif name == "bound_conj":
            s, x = _guarded_input(rng, conj, (2, 3), 4, "gb")
            out.append(bound_conj(s, x, min_fair_bound(x, s.processes)))
        elif name == "mon_token":
            s, x = _token_input(rng, lambda r: ring(r.choice((3, 4))), lambda n: 2 * n + 2)
            out.append(mon_token(s, x, min_token_bound(x, s.n), a=rng.choice(range(3, s.n + 1))))
        elif name == "bound_token":
            s, x = _token_input(rng, _u2_u5_graph, lambda n: 2 * n + 2)
            out.append(bound_token(s, x, min_token_bound(x, s.n)))
        else:
            raise ValueError(f"unknown construction {name!r}")
    return out


# --------------------------------------------------------------------------
# cutoff consistency


@dataclass
class Discrepancy:
    family: str
    row: str
    formula: str
    sizes: tuple
    verdicts: dict  # size -> tuple of per-b outcomes
    vacuous: dict  # size -> tuple of per-b "no fair run" flags

    def __str__(self) -> str:
        return f"{self.family} {self.row} {self.formula}: " + "; ".join(
            f"n={n}: {v}" for n, v in self.verdicts.items())


@dataclass
class ConsistencyReport:
    comparisons: int = 0
    discrepancies: list = field(default_factory=list)
    vacuous_cells: int = 0
    cells: int = 0
    seconds: float = 0.0

    @property
    def vacuity_driven(self) -> list:
        """Discrepancies where some differing cell has no fair run at all."""
        out = []
        for d in self.discrepancies:
            if any(any(v) for v in d.vacuous.values()):
                out.append(d)
        return out


def _outcome(v) -> str:
    if hasattr(v, "outcome"):
        return "satisfied" if v.satisfied else "violated"
    return "holds" if v.holds else "violated"


def _compare(rep: ConsistencyReport, family, row, phi_text, cells):
    rep.comparisons += 1
    verdicts = {n: tuple(o for o, _ in vs) for n, vs in cells.items()}
    vac = {n: tuple(f for _, f in vs) for n, vs in cells.items()}
    rep.cells += sum(len(v) for v in vac.values())
    rep.vacuous_cells += sum(sum(v) for v in vac.values())
    if len(set(verdicts.values())) > 1:
        rep.discrepancies.append(Discrepancy(family, row, phi_text, tuple(cells), verdicts, vac))


def _guarded_rows(kind):
    out = []
    for fair in ("lb", "gb"):
        for logic in ("ltl", "prompt"):
            out.append((fair, logic))
    return out


def cutoff_consistency(seed: int = 0, n_disj: int = 30, n_conj: int = 30, n_token: int = 10,
                       bs=(1, 2, 3), k_max: int | str = "auto") -> ConsistencyReport:
    rng = random.Random(seed)
    rep = ConsistencyReport()
    t0 = time.perf_counter()
    for family, count in (("disjunctive", n_disj), ("conjunctive", n_conj)):
        for _ in range(count):
            if family == "disjunctive":
                a, b = random_disjunctive(rng, 2, rng.randint(1, 3))
            else:
                a, b = random_conjunctive(rng, 2, rng.randint(2, 3))
            atoms = [Atom("A", None, q) for q in a.states] + [Atom("B", 1, q) for q in b.states]
            for fair, logic in _guarded_rows(family):
                res = cutoff_for(CutoffQuery(family, fair, logic, 1, len(b.states), True))
                if isinstance(res, NoKnownCutoff):
                    continue
                phi = random_property(rng, atoms, logic == "prompt")
                cells = {}
                for n in (res.c, res.c + 1, res.c + 2):
                    system = GuardedSystem(a, b, n)
                    row = []
                    for bb in bs:
                        f = FairnessSpec.gb(bb) if fair == "gb" else FairnessSpec.lb(bb, (0, 1))
                        row.append((_outcome(check(system, phi, f, k_max)), not has_fair_run(system, f)))
                    cells[n] = row
                _compare(rep, family, f"{fair}/{logic}", to_text(phi), cells)
    for _ in range(n_token):
        t = random_token_process(rng, rng.randint(1, 2))
        atoms = [Atom("B", i, q) for i in (1, 2) for q in t.states]
        res = cutoff_for(CutoffQuery("token", "gb", "ltl", 2))
        for logic in ("ltl", "prompt"):
            phi = random_property(rng, atoms, logic == "prompt")
            cells = {}
            for n in (res.c, res.c + 1, res.c + 2):
                system = TokenSystem(t, ring(n))
                row = []
                for bb in bs:
                    f = FairnessSpec.gb(bb)
                    row.append((_outcome(check(system, phi, f, k_max)), not has_fair_run(system, f)))
                cells[n] = row
            _compare(rep, "token", f"gb/{logic}", to_text(phi), cells)
    rep.seconds = time.perf_counter() - t0
    return rep
