from pathlib import Path

import pytest

from promptcut.loaders import LoadError, load_system, parse_graph, parse_templates, parse_token
from promptcut.protocol import classify

MODELS = Path(__file__).resolve().parent.parent / "models"


def test_reader_writer_file():
    w, r = load_system(MODELS / "reader_writer.sys")
    assert w.states == ("nw", "w") and r.init == "nr"
    assert {t.guard.quantifier for t in w.transitions + r.transitions} == {"exists"}
    assert classify(w, r).kind == "disjunctive"


def test_any_expands_to_all_declared_states():
    t = parse_templates("template X { init a; states a, b; trans a -> b when forall{any}; }")["X"]
    assert t.transitions[0].guard.states == {"a", "b"}


@pytest.mark.parametrize("text, where", [
    ("template X { init a; states a; trans a -> c when exists{a}; }", "1:"),
    ("template X {\n  init a;\n  states a;\n  trans a => a when exists{a}; }", "4:"),
    ("template X { states a; }", "1:"),
    ("template X { init a; states a; trans a -> a when some{a}; }", "1:"),
])
def test_template_errors_carry_position(text, where):
    with pytest.raises(LoadError) as e:
        parse_templates(text)
    assert where in str(e.value)


def test_token_and_graph_files():
    t = parse_token((MODELS / "relay.tok").read_text())
    assert set(t.states) == {"idle/0", "idle/1", "work/0", "work/1"}
    g = parse_graph((MODELS / "ring5.graph").read_text())
    assert g.n == 5 and (5, 1) in g.edges


@pytest.mark.parametrize("text", ["graph { n: 2; edges: (1,1); }", "graph { edges: (1,2); }",
                                  "graph { n: 2; edges: (1,3); }"])
def test_graph_errors(text):
    with pytest.raises(LoadError):
        parse_graph(text)


def test_token_bit_rule_is_enforced():
    with pytest.raises(LoadError):
        parse_token("token T { base q; init q/0, q/1; trans q/0 -snd-> q/1; }")
    with pytest.raises(LoadError):
        parse_token("token T { base q; init q/0, q/1; trans q/2 -eps-> q/0; }")
