import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from promptcut.checker import (NoCutoffError, b_sweep, check, check_ltl, check_parameterized,
                               check_prompt, has_fair_run)
from promptcut.formula import (Atom, Lit, Or, Prompt, eval_formula, globally, parse_formula,
                               substitute_indices)
from promptcut.generators import random_conjunctive, random_disjunctive, random_property
from promptcut.loaders import load_system
from promptcut.protocol import (FairnessSpec, Guard, GuardedSystem, ProcessTemplate, Transition,
                                is_fair, project)
from promptcut.serialize import lasso_from_json

MODELS = Path(__file__).resolve().parent.parent / "models"
W, R = load_system(MODELS / "reader_writer.sys")


def formula(name):
    text = "\n".join(l for l in (MODELS / name).read_text().splitlines() if not l.startswith("#"))
    return parse_formula(text)


def chain(length):
    """A walks a0 -> ... -> a<length> on its own; B may only move once A is done."""
    a_states = tuple(f"a{i}" for i in range(length + 1))
    anything = frozenset(a_states) | {"b0"}
    ts = [Transition(f"a{i}", Guard("exists", anything), f"a{i + 1}") for i in range(length)]
    ts.append(Transition(a_states[-1], Guard("exists", anything), a_states[-1]))
    a = ProcessTemplate("Chain", a_states, "a0", tuple(ts))
    b = ProcessTemplate("Idle", ("b0",), "b0",
                        (Transition("b0", Guard("exists", {a_states[-1]}), "b0"),))
    return a, b


def test_writer_response_fails_under_global_bound():
    s = GuardedSystem(W, R, 2)
    phi = parse_formula("G (!A.w | F B[1].nr)").body
    assert check_ltl(s, phi, FairnessSpec.gb(2)).holds
    v = check_ltl(s, phi, FairnessSpec.gb(4))
    assert not v.holds
    # the sample run keeps reader 1 reading while the writer writes
    x = lasso_from_json(json.loads((MODELS / "rw_sample_run.json").read_text()))[0]
    assert is_fair(x, FairnessSpec.gb(4), s.processes)
    assert not eval_formula(project(x, s.processes, s), phi)


def test_safety_violation_ships_replayable_lasso():
    s = GuardedSystem(W, R, 2)
    phi = globally(Lit(Atom("A", None, "w"), False))
    v = check_ltl(s, phi, FairnessSpec.gb(2))
    assert not v.holds
    v.counterexample.validate(s)
    assert is_fair(v.counterexample, FairnessSpec.gb(2), s.processes)
    w = project(v.counterexample, s.processes, s)
    assert not eval_formula(w, phi)
    assert any(Atom("A", None, "w") in w.letter(t) for t in range(len(w)))


def test_check_ltl_refuses_prompt():
    with pytest.raises(ValueError):
        check_ltl(GuardedSystem(W, R, 1), Prompt(Lit(Atom("A", None, "w"))), FairnessSpec.gb(1))


def test_forced_chain_needs_exactly_three():
    a, b = chain(3)
    s = GuardedSystem(a, b, 1)
    v = check_prompt(s, Prompt(Lit(Atom("A", None, "a3"))), FairnessSpec.lb(1, {0}))
    assert v.satisfied and v.k == 3
    assert 2 in v.witnesses and v.witnesses[2] is not None


def test_unreachable_target_is_violated_for_every_k():
    a, b = chain(2)
    s = GuardedSystem(a, b, 1)
    v = check_prompt(s, Prompt(Lit(Atom("A", None, "nowhere"))), FairnessSpec.lb(1, {0}))
    assert not v.satisfied and v.certified
    assert v.outcome == "violated-for-all-k"
    assert v.witnesses["relaxed"] is not None


def test_reader_returns_sweep():
    s = GuardedSystem(W, R, 5)
    phi = formula("rw_reader_returns.pltl")
    body = substitute_indices(phi.body, {"i": 1})
    rep = b_sweep(s, body, "lb", [1, 2, 3], scope=(0, 1))
    ks = [v.k for _, v in rep.entries]
    assert rep.holds and ks == sorted(ks) and ks == [0, 3, 4]
    assert rep.summary == "holds for all b <= 3"


def test_violation_persists_to_larger_bounds():
    s = GuardedSystem(W, R, 2)
    phi = parse_formula("G (!A.w | F B[1].nr)").body
    rep = b_sweep(s, phi, "gb", [3, 4])
    assert [v.holds for _, v in rep.entries] == [False, False]
    assert rep.summary == "violated from b = 3"


def test_empty_sweep():
    rep = b_sweep(GuardedSystem(W, R, 1), parse_formula("G A.w").body, "gb", [])
    assert rep.entries == [] and rep.holds is None and "no verdict" in rep.summary


def test_reader_writer_checks_at_five():
    rep = check_parameterized(W, R, formula("rw_reader_returns.pltl"), "lb", [1, 2])
    assert rep.cutoff.c == 5 and rep.n == 5 and rep.holds
    assert "for all n >= 5" in rep.claim


def test_conjunctive_ltl_checks_at_two():
    rng = random.Random(3)
    a, b = random_conjunctive(rng, 2, 2)
    phi = parse_formula(f"forall i . G F (B[i].{b.init} | !B[i].{b.init})")
    rep = check_parameterized(a, b, phi, "lb", [1])
    assert rep.cutoff.c == 2 and rep.n == 2


def test_disjunctive_prompt_global_is_refused():
    with pytest.raises(NoCutoffError):
        check_parameterized(W, R, formula("rw_reader_returns.pltl"), "gb", [1])


def test_vacuous_bounds_are_noted():
    s = GuardedSystem(W, R, 3)
    assert not has_fair_run(s, FairnessSpec.gb(1))
    rep = check_parameterized(W, R, parse_formula("forall i . G B[i].nr"), "gb", [1])
    assert rep.holds and any("vacuously" in n for n in rep.notes)


seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 3))
@settings(max_examples=25)
def test_symmetry_reduction_matches_plain_search(seed, b):
    rng = random.Random(seed)
    a, bt = random_disjunctive(rng, 2, 2)
    s = GuardedSystem(a, bt, 3)
    atoms = [Atom("A", None, q) for q in a.states] + [Atom("B", 1, q) for q in bt.states]
    phi = random_property(rng, atoms, False)
    for f in (FairnessSpec.gb(b + 2), FairnessSpec.lb(b, {0, 1})):
        assert check_ltl(s, phi, f).holds == check_ltl(s, phi, f, symmetry=False).holds


@given(seeds)
@settings(max_examples=15)
def test_universal_index_reduction_matches_every_binding(seed):
    rng = random.Random(seed)
    a, bt = random_disjunctive(rng, 2, 2)
    s = GuardedSystem(a, bt, 3)
    atoms = [Atom("A", None, q) for q in a.states] + [Atom("B", "i", q) for q in bt.states]
    body = random_property(rng, atoms, False)
    f = FairnessSpec.gb(4)
    per_index = [check_ltl(s, substitute_indices(body, {"i": i}), f, symmetry=False).holds
                 for i in (1, 2, 3)]
    assert len(set(per_index)) == 1


@given(seeds)
@settings(max_examples=15)
def test_prompt_verdicts_are_monotone_in_b(seed):
    rng = random.Random(seed)
    a, bt = random_disjunctive(rng, 2, 2)
    s = GuardedSystem(a, bt, 2)
    atoms = [Atom("A", None, q) for q in a.states] + [Atom("B", 1, q) for q in bt.states]
    phi = random_property(rng, atoms, True)
    vs = [check(s, phi, FairnessSpec.gb(b)) for b in (2, 3, 4)]
    for lo, hi in zip(vs, vs[1:]):
        if hi.satisfied:
            assert lo.satisfied and lo.k <= hi.k
