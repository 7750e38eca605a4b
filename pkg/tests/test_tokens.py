import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from promptcut.generators import random_fair_lasso, random_graph, random_token_process
from promptcut.loaders import parse_token
from promptcut.protocol import SystemLasso, TemplateError, reachable
from promptcut.tokens import (TokenGraph, TokenProcess, TokenSystem, UnrealizableVector,
                              clique, connectivity_vector, connectivity_vector_bruteforce,
                              holders, immediately_sends_paths, replay_local, ring,
                              synth_reduction_graph, token_fair)

MODELS = Path(__file__).resolve().parent.parent / "models"
MINIMAL = TokenProcess("M", ("q",), {"q/0", "q/1"}, (("q/0", "rcv", "q/1"), ("q/1", "snd", "q/0")))


def test_ring_vector():
    assert connectivity_vector(ring(3), 1, 2) == (0, 0, 1, 0, 1, 0)


def test_two_clique_vector():
    assert connectivity_vector(clique(2), 1, 2) == (0, 0, 1, 0, 0, 1)
    assert connectivity_vector(clique(2), 2, 1) == (0, 0, 1, 0, 0, 1)


def test_disconnected_vector():
    g = TokenGraph(4, {(1, 3), (3, 1), (2, 4), (4, 2)})
    assert connectivity_vector(g, 1, 2) == (1, 0, 0, 1, 0, 0)


def test_vector_rejects_equal_vertices():
    with pytest.raises(ValueError):
        connectivity_vector(ring(3), 2, 2)


def test_process_invariants():
    with pytest.raises(TemplateError):
        TokenProcess("X", ("q",), {"q/0"}, ())
    with pytest.raises(TemplateError):
        TokenProcess("X", ("q",), {"q/0", "q/1"}, (("q/0", "snd", "q/1"),))
    with pytest.raises(TemplateError):
        TokenProcess("X", ("q",), {"q/0", "q/1"}, (("q/0", "eps", "q/1"),))


def test_stuck_holder_contributes_nothing():
    t = TokenProcess("S", ("q",), {"q/0", "q/1"}, (("q/0", "rcv", "q/1"),))
    s = TokenSystem(t, ring(2))
    assert s.successors(("q/1", "q/0")) == []


def test_synchronous_step_on_edge():
    s = TokenSystem(MINIMAL, TokenGraph(2, {(1, 2)}))
    assert (("q/0", "q/1"), ("snd", 1, 2)) in s.successors(("q/1", "q/0"))
    assert s.successors(("q/0", "q/1")) == []


def test_conservation_on_relay_ring():
    t = parse_token((MODELS / "relay.tok").read_text())
    s = TokenSystem(t, ring(4))
    seen = reachable(s.initial_states(), lambda z: [w for w, _ in s.successors(z)])
    assert seen and all(holders(z) == 1 for z in seen)


def test_circulating_ring_is_fair():
    s = TokenSystem(MINIMAL, ring(3))
    x = SystemLasso((), ((("q/1", "q/0", "q/0"), ("snd", 1, 2)),
                         (("q/0", "q/1", "q/0"), ("snd", 2, 3)),
                         (("q/0", "q/0", "q/1"), ("snd", 3, 1))))
    x.validate(s)
    assert token_fair(x, 3, 3) and token_fair(x, 2, 3) and not token_fair(x, 1, 3)


def test_starved_vertex_is_unfair():
    g = TokenGraph(3, {(1, 2), (2, 1), (2, 3)})
    x = SystemLasso((), ((("q/1", "q/0", "q/0"), ("snd", 1, 2)),
                         (("q/0", "q/1", "q/0"), ("snd", 2, 1))))
    x.validate(TokenSystem(MINIMAL, g))
    assert not any(token_fair(x, b, 3) for b in range(1, 50))


def test_minimal_immediate_send():
    p = immediately_sends_paths(MINIMAL)
    assert (p.q_rcv, p.q_snd) == ("q/0", "q/1")
    assert p.relay_in == (("rcv", "q/1"),) and p.relay_out == (("snd", "q/0"),)
    assert p.relay_length <= 2


def test_no_send_means_no_immediate_send():
    t = TokenProcess("N", ("q",), {"q/0", "q/1"}, (("q/0", "rcv", "q/1"), ("q/1", "eps", "q/1")))
    assert immediately_sends_paths(t) is None


def test_synth_examples():
    for v in [(0, 0, 1, 0, 1, 0), (0, 0, 1, 0, 0, 1)]:
        g = synth_reduction_graph(v)
        assert g.n == 4 and {(3, 2), (4, 1)} <= g.edges
        assert connectivity_vector(g, 1, 2) == v
    assert {(1, 2), (2, 1)} <= synth_reduction_graph((0, 0, 1, 0, 0, 1)).edges


def test_synth_reports_vectors_no_graph_has():
    with pytest.raises(UnrealizableVector):
        synth_reduction_graph((0, 0, 1, 0, 1))


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
@settings(max_examples=40)
def test_immediate_send_paths_replay(seed):
    t = random_token_process(random.Random(seed), 3)
    p = immediately_sends_paths(t)
    if p is None:
        return
    assert replay_local(t, p.init, p.warmup)
    assert replay_local(t, p.q_rcv, p.relay_in) and replay_local(t, p.q_snd, p.relay_out)
    assert p.relay_length <= len(t.states)


@given(seeds, st.integers(2, 5))
@settings(max_examples=40)
def test_vector_against_bruteforce_on_random_graphs(seed, n):
    g = random_graph(random.Random(seed), n, 0.3)
    assert connectivity_vector(g, 1, 2) == connectivity_vector_bruteforce(g, 1, 2)


@given(seeds)
@settings(max_examples=30)
def test_random_runs_conserve_token(seed):
    rng = random.Random(seed)
    s = TokenSystem(random_token_process(rng, 2), ring(3))
    x = random_fair_lasso(rng, s, b=8, counted=tuple(s.processes), tries=20)
    if x is None:
        return
    x.validate(s)
    assert all(holders(z) == 1 for z, _ in x.steps())
