import math
import random

import pytest
from hypothesis import given, strategies as st

from promptcut.formula import Atom, LassoWord
from promptcut.generators import default_atoms, random_stutter_pair, random_word
from promptcut.stutter import (NotStutterEquivalent, condense, d_equiv, expand, min_d,
                               position_map)

a, b = frozenset({Atom("A", None, "a")}), frozenset({Atom("A", None, "b")})
INF = math.inf


def lw(u, v):
    return LassoWord(tuple(u), tuple(v))


def test_condense_finite_then_infinite_run():
    c = condense(lw([a, a, b], [b]))
    assert c.prefix == ((a, 2),) and c.period == ((b, INF),)


def test_condense_periodic():
    assert condense(lw([], [a, b])).period in (((a, 1), (b, 1)), ((b, 1), (a, 1)))
    c = condense(lw([], [a, a, b, b]))
    assert sorted(m for _, m in c.period) == [2, 2]
    assert all(expand(c).letter(t) == lw([], [a, a, b, b]).letter(t) for t in range(20))


def test_square_versus_fourth_power():
    w, w2 = lw([a, a], [b]), lw([a] * 4, [b])
    assert not d_equiv(w, w2, 1) and d_equiv(w, w2, 2)
    assert min_d(w, w2) == 2


def test_identical_words():
    w = lw([a, b], [a, a, b])
    assert d_equiv(w, w, 1) and min_d(w, w) == 1


def test_shifted_alternation_never_equivalent():
    w, w2 = lw([], [a, b]), lw([], [b, a])
    assert not any(d_equiv(w, w2, d) for d in range(1, 65))
    assert min_d(lw([a], [b]), lw([b], [a])) is None


def test_finite_run_never_matches_infinite():
    assert min_d(lw([a], [b]), lw([a], [b, a])) is None


def test_d_must_be_positive():
    with pytest.raises(ValueError):
        d_equiv(lw([], [a]), lw([], [a]), 0)


def test_unrolled_period_is_one_equivalent():
    w = lw([a], [b, b, a])
    assert min_d(w, lw([a, b, b, a], [b, b, a] * 2)) == 1


def test_position_map_example():
    f = position_map(lw([a, a], [b]), lw([a] * 4, [b]))
    assert set(f(0)) == {0, 1, 2, 3} and set(f(1)) == {0, 1, 2, 3}
    assert all(j >= 4 for j in f(2))


def test_position_map_rejects_inequivalent():
    with pytest.raises(NotStutterEquivalent):
        position_map(lw([], [a, b]), lw([], [b, a]))


seeds = st.integers(0, 2**32 - 1)
ATOMS = default_atoms(2)


@given(seeds, st.integers(1, 3))
def test_generated_pairs_are_equivalent_and_symmetric(seed, d):
    w, w2 = random_stutter_pair(random.Random(seed), ATOMS, d)
    assert d_equiv(w, w2, d) and d_equiv(w2, w, d)
    assert min_d(w, w2) == min_d(w2, w) <= d


@given(seeds)
def test_reflexive_and_expand_round_trip(seed):
    w = random_word(random.Random(seed), ATOMS, 10)
    assert d_equiv(w, w, 1)
    e = expand(condense(w))
    assert all(e.letter(t) == w.letter(t) for t in range(3 * len(w) + 3))


@given(seeds, seeds, st.integers(1, 3))
def test_symmetry_on_arbitrary_pairs(s1, s2, d):
    w = random_word(random.Random(s1), ATOMS, 6, alphabet=2)
    w2 = random_word(random.Random(s2), ATOMS, 6, alphabet=2)
    assert d_equiv(w, w2, d) == d_equiv(w2, w, d)


@given(seeds, st.integers(1, 3), st.integers(0, 20))
def test_position_map_letters_and_suffixes(seed, d, j):
    w, w2 = random_stutter_pair(random.Random(seed), ATOMS, d)
    f = position_map(w, w2)
    for j2 in f(j):
        assert w2.letter(j2) == w.letter(j)
    # suffix equivalence, read at run granularity: from the start of j's run
    start = min(t for t in range(j + 1) if all(w.letter(s) == w.letter(j) for s in range(t, j + 1)))
    start2 = min(f(j))
    suf = LassoWord(tuple(w.letter(t) for t in range(start, max(start, len(w.prefix)))),
                    w.period if start <= len(w.prefix) else _rotate(w, start))
    suf2 = LassoWord(tuple(w2.letter(t) for t in range(start2, max(start2, len(w2.prefix)))),
                     w2.period if start2 <= len(w2.prefix) else _rotate(w2, start2))
    assert d_equiv(suf, suf2, d)


def _rotate(w, t):
    return tuple(w.letter(t + s) for s in range(len(w.period)))
