import random
from pathlib import Path

from hypothesis import given, settings, strategies as st

from promptcut.formula import FALSE, Atom, LassoWord, Lit, Release, Until, TRUE, eval_formula
from promptcut.generators import default_atoms, random_formula, random_word
from promptcut.loaders import load_system
from promptcut.omega import (BuchiAutomaton, RunGraph, accepts, loop_erase, ltl_to_buchi,
                             nested_dfs, splice_cycle)
from promptcut.protocol import BoundedFairSystem, FAILURE, GuardedSystem, reachable

from oracles import product_states

MODELS = Path(__file__).resolve().parent.parent / "models"
W, R = load_system(MODELS / "reader_writer.sys")
Q = Atom("A", None, "q")
q = Lit(Q)


def lw(u, v):
    return LassoWord(tuple(u), tuple(v))


def test_globally_rejects_a_gap():
    aut = ltl_to_buchi(Release(FALSE, q))
    assert accepts(aut, lw([], [{Q}]))
    assert not accepts(aut, lw([{Q}, {Q}, set()], [{Q}]))


def test_eventually_accepts_late_hit():
    aut = ltl_to_buchi(Until(TRUE, q))
    assert accepts(aut, lw([set(), set(), set(), {Q}], [set()]))
    assert not accepts(aut, lw([], [set()]))


def test_false_has_empty_language():
    aut = ltl_to_buchi(FALSE)
    assert aut.is_empty_language or not accepts(aut, lw([], [{Q}]))
    s = GuardedSystem(W, R, 1)
    assert RunGraph(s, aut, counted=(0, 1), b=2).find_lasso() is None


def _two_state():
    w = Lit(Atom("A", None, "w"))
    return BuchiAutomaton((0, 1), 0, frozenset({1}),
                          {0: [(frozenset(), 0), (frozenset({w}), 1)], 1: [(frozenset(), 1)]})


def _product_with_automaton(system, aut, b):
    """Reachable (state, counters, automaton state) triples, enumerated directly."""
    procs = list(system.processes)
    start = [(s, (0,) * len(procs), aut.initial) for s in system.initial_states()]
    seen, todo = set(start), list(start)
    while todo:
        s, ctr, a = todo.pop()
        qs = aut.step(a, lambda l: system.holds(l.atom, s) == l.positive)
        for s2, lab in system.successors(s):
            c2 = tuple(0 if p in system.credited(lab) else c + 1 for p, c in zip(procs, ctr))
            if max(c2) > b:
                continue
            for a2 in qs:
                if (s2, c2, a2) not in seen:
                    seen.add((s2, c2, a2))
                    todo.append((s2, c2, a2))
    return seen


def test_run_graph_size_matches_enumeration():
    s = GuardedSystem(W, R, 1)
    aut = _two_state()
    g = RunGraph(s, aut, counted=tuple(s.processes), b=2)
    assert g.count_reachable() == len(_product_with_automaton(s, aut, 2))


def test_universal_automaton_mirrors_bounded_fair_system():
    s = GuardedSystem(W, R, 2)
    aut = BuchiAutomaton((0,), 0, frozenset({0}), {0: [(frozenset(), 0)]})
    g = RunGraph(s, aut, counted=tuple(s.processes), b=2)
    assert g.count_reachable() == len(product_states(s, 2))


def test_nested_dfs_examples():
    succ = lambda v: [(v, None)]
    found = nested_dfs([0], succ, lambda v: v == 0)
    assert found.stem == () and len(found.cycle) == 1
    assert nested_dfs([0], lambda v: [((v + 1) % 3, None)], lambda v: False) is None
    line = lambda v: [(v + 1, None)] if v < 3 else [(1, None)]
    found = nested_dfs([0], line, lambda v: v == 2)
    vs = found.vertices()
    assert 2 in [v for v, _ in found.cycle]
    for (v, _), (w, _) in zip(found.stem + found.cycle, (found.stem + found.cycle)[1:]):
        assert (w, None) in line(v)
    assert (found.cycle[0][0], None) in line(found.cycle[-1][0]) and vs


def test_loop_erase_and_splice():
    assert loop_erase([(0, "a"), (1, "b"), (0, "c"), (2, "d")]) == [(0, "c"), (2, "d")]
    assert loop_erase([(0, "a"), (1, "b")]) == [(0, "a"), (1, "b")]
    cyc = [(0, "a"), (1, "b"), (2, "c"), (1, "d"), (3, "e")]
    assert splice_cycle(cyc, lambda c: True) == [(0, "a"), (1, "d"), (3, "e")]
    assert splice_cycle(cyc, lambda c: any(v == 2 for v, _ in c)) == cyc


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
@settings(max_examples=100)
def test_automaton_agrees_with_eval(seed):
    rng = random.Random(seed)
    atoms = default_atoms(2)
    phi = random_formula(rng, atoms, 3, prompt=False)
    w = random_word(rng, atoms, 6)
    assert accepts(ltl_to_buchi(phi), w) == eval_formula(w, phi)
