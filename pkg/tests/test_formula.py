import random

import pytest
from hypothesis import given, strategies as st

from promptcut.formula import (FALSE, TRUE, And, Atom, FormulaSyntaxError, LassoWord, Lit, Next,
                               Or, Prompt, Release, Until, atoms_of, eval_formula, globally,
                               eventually, instantiate_k, is_prompt_free, negate, parse_formula,
                               to_text)
from promptcut.generators import default_atoms, random_formula, random_word

Q = Atom("A", None, "q")
R = Atom("A", None, "r")
q, r = Lit(Q), Lit(R)
ATOMS = default_atoms(2)


def word(*letters, prefix=()):
    return LassoWord(tuple(prefix), tuple(letters))


# parsing

def test_implication_is_rejected_with_hint():
    with pytest.raises(FormulaSyntaxError, match="->"):
        parse_formula("forall i . G (A.w -> Fp (A.w & B[i].nr))")


def test_rewritten_reader_writer_formula():
    phi = parse_formula("forall i . G (!A.w | Fp (A.w & B[i].nr))")
    assert phi.h == 1 and phi.variables == ("i",)
    w, nr = Atom("A", None, "w"), Atom("B", "i", "nr")
    assert phi.body == globally(Or(Lit(w, False), Prompt(And(Lit(w), Lit(nr)))))


def test_single_atom():
    phi = parse_formula("A.q")
    assert phi.h == 0 and phi.body == q


def test_negation_only_on_atoms():
    with pytest.raises(FormulaSyntaxError, match="negation only on atoms"):
        parse_formula("!(A.q & A.r)")


@pytest.mark.parametrize("text", ["X A.q", "B[i].q", "A.q &", "forall i . B[j].q", "(A.q"])
def test_malformed_inputs(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_concrete_index_atom():
    assert parse_formula("G B[3].q").body == globally(Lit(Atom("B", 3, "q")))


@given(st.integers(0, 10_000))
def test_text_round_trip(seed):
    phi = random_formula(random.Random(seed), ATOMS, 3)
    assert parse_formula(to_text(phi)).body == phi


# evaluation

def test_prompt_window_scan():
    w = word({Q}, set(), set())
    phi = globally(Prompt(q))
    assert eval_formula(w, phi, 0, 2)
    assert not eval_formula(w, phi, 0, 1)


def test_atom_at_start():
    assert eval_formula(word({Q}, set(), prefix=[{Q, R}]), q, 0, 7)


def test_stretched_word_needs_larger_bound():
    phi = globally(Prompt(q))
    assert eval_formula(word({Q}, set()), phi, 0, 1)
    assert eval_formula(word({Q}, {Q}, set(), set()), phi, 0, 2)
    assert not eval_formula(word({Q}, {Q}, set(), set()), phi, 0, 1)


def test_until_and_release_on_lasso():
    w = word({R}, prefix=[{Q}, {Q}])
    assert eval_formula(w, Until(q, r))
    assert not eval_formula(word({Q}), Until(q, r))
    assert eval_formula(word({Q}), Release(r, q))


def test_unresolved_index_is_an_error():
    with pytest.raises(ValueError, match="unresolved"):
        eval_formula(word(set()), Lit(Atom("B", "i", "q")))


# instantiation and negation

def test_instantiate_examples():
    assert instantiate_k(Prompt(q), 0) == q
    assert instantiate_k(Prompt(q), 2) == Or(q, Next(Or(q, Next(q))))
    assert instantiate_k(Until(q, r), 5) == Until(q, r)


def test_negate_examples():
    assert negate(globally(q)) == eventually(Lit(Q, False))
    assert negate(Until(q, r)) == Release(Lit(Q, False), Lit(R, False))
    assert negate(Or(q, Next(r))) == And(Lit(Q, False), Next(Lit(R, False)))


def test_negate_refuses_prompt():
    with pytest.raises(ValueError):
        negate(Prompt(q))


def test_prompt_free():
    assert is_prompt_free(Until(q, r)) and not is_prompt_free(Or(q, Prompt(r)))
    assert atoms_of(Or(q, Prompt(r))) == {Q, R}


# properties

seeds = st.integers(0, 2**32 - 1)


def _case(seed, prompt=True):
    rng = random.Random(seed)
    return rng, random_word(rng, ATOMS, 8), random_formula(rng, ATOMS, 4, prompt)


@given(seeds, st.integers(0, 6), st.integers(0, 12))
def test_monotone_in_k(seed, k, i):
    _, w, phi = _case(seed)
    if eval_formula(w, phi, i, k):
        assert eval_formula(w, phi, i, k + 1)


@given(seeds, st.integers(0, 6), st.integers(0, 12))
def test_instantiation_soundness(seed, k, i):
    _, w, phi = _case(seed)
    assert eval_formula(w, phi, i, k) == eval_formula(w, instantiate_k(phi, k), i)


@given(seeds, st.integers(0, 12))
def test_negate_involution_and_complement(seed, i):
    _, w, phi = _case(seed, prompt=False)
    assert eval_formula(w, negate(negate(phi)), i) == eval_formula(w, phi, i)
    assert eval_formula(w, negate(phi), i) != eval_formula(w, phi, i)


@given(seeds, st.integers(0, 5), st.integers(0, 12))
def test_fold_correctness(seed, k, i):
    _, w, phi = _case(seed)
    unrolled = LassoWord(w.prefix + w.period, w.period)
    assert eval_formula(w, phi, i, k) == eval_formula(unrolled, phi, i, k)


def test_constants():
    w = word(set())
    assert eval_formula(w, TRUE) and not eval_formula(w, FALSE)
