import json
import random
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from promptcut.cli import main
from promptcut.generators import random_disjunctive, random_fair_lasso, random_token_process
from promptcut.protocol import GuardedSystem
from promptcut.serialize import SchemaError, dumps, lasso_from_json, lasso_to_json
from promptcut.tokens import TokenSystem, ring

MODELS = Path(__file__).resolve().parent.parent / "models"
SYS = str(MODELS / "reader_writer.sys")


def first_json(text):
    return json.JSONDecoder().raw_decode(text)[0]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cutoff_lookup(capsys):
    code, out, _ = run(capsys, "cutoff", "--class", "disj", "--fairness", "lb", "--logic", "prompt",
                       "--h", 1, "--qb", 2)
    assert code == 0 and out.strip() == "5"
    code, out, _ = run(capsys, "cutoff", "--class", "conj", "--fairness", "gb", "--logic", "ltl",
                       "--h", 2)
    assert code == 0 and out.strip().startswith("3 (requires bounded-initializing B")
    code, out, _ = run(capsys, "cutoff", "--class", "disj", "--fairness", "gb", "--logic", "prompt",
                       "--h", 1, "--qb", 2)
    assert code == 1 and "no known cutoff" in out
    code, _, _ = run(capsys, "cutoff", "--class", "conj", "--fairness", "gb", "--logic", "ltl",
                     "--h", 1, "--not-bounded-initializing")
    assert code == 2


def test_check_satisfied_prompt(capsys, tmp_path):
    out_json = tmp_path / "r.json"
    code, out, _ = run(capsys, "check", "--system", SYS, "--formula", MODELS / "rw_reader_returns.pltl",
                       "--n", 5, "--fairness", "lb", "--b", 2, "--json", out_json)
    assert code == 0
    doc = json.loads(out_json.read_text())
    assert doc["verdict"]["satisfied"] and doc["verdict"]["k"] == 3


def test_check_violation_emits_lasso(capsys):
    code, out, _ = run(capsys, "check", "--system", SYS, "--formula", MODELS / "rw_no_write.ltl",
                       "--n", 2, "--fairness", "gb", "--b", 2, "--json", "-", "--no-meta")
    assert code == 1
    doc = first_json(out)
    x, kind = lasso_from_json(doc["verdict"]["counterexample"])
    assert kind == "guarded" and x.period


def test_check_is_deterministic_without_meta(capsys):
    args = ("check", "--system", SYS, "--formula", MODELS / "rw_no_write.ltl", "--n", 2,
            "--fairness", "gb", "--b", 2, "--json", "-", "--no-meta")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_verify_param(capsys):
    code, out, _ = run(capsys, "verify-param", "--system", SYS, "--formula",
                       MODELS / "rw_reader_returns.pltl", "--fairness", "lb", "--b-range", "1..3")
    assert code == 0 and "for all n >= 5" in out


def test_verify_param_refuses_without_cutoff(capsys):
    code, _, err = run(capsys, "verify-param", "--system", SYS, "--formula",
                       MODELS / "rw_reader_returns.pltl", "--fairness", "gb", "--b-range", "1")
    assert code == 2 and err


def test_verify_param_token_embeds_graph(capsys):
    code, out, _ = run(capsys, "verify-param", "--token", MODELS / "relay.tok", "--graph",
                       MODELS / "ring5.graph", "--formula", MODELS / "relay_pair.pltl",
                       "--fairness", "gb", "--b-range", "1", "--json", "-", "--no-meta")
    doc = first_json(out)
    g = doc["reduced_graph"]
    assert code == 0 and g["n"] == 4 and [3, 2] in g["edges"] and [4, 1] in g["edges"]


def test_construct_sample_run(capsys, tmp_path):
    out_json = tmp_path / "y.json"
    code, out, _ = run(capsys, "construct", "--lemma", "mon-disj", "--system", SYS,
                       "--run", MODELS / "rw_sample_run.json", "--json", out_json)
    assert code == 0 and "all verifications passed" in out
    doc = json.loads(out_json.read_text())
    assert all(doc["verifications"].values())
    assert len(doc["output"]["prefix"][0]["state"]) == 4


def test_construct_precondition(capsys):
    code, _, err = run(capsys, "construct", "--lemma", "bound-disj", "--system", SYS,
                       "--run", MODELS / "rw_sample_run.json")
    assert code == 2 and "precondition" in err


def test_construct_bad_replay(capsys, tmp_path):
    doc = json.loads((MODELS / "rw_sample_run.json").read_text())
    doc["period"][0]["state"]["B1"] = "nr"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "construct", "--lemma", "mon-disj", "--system", SYS, "--run", bad)
    assert code == 2 and "replay failed at step" in err


@pytest.mark.parametrize("argv", [["check"], ["cutoff", "--class", "ring"],
                                  ["check", "--system", "missing.sys", "--formula", "x", "--n", "1",
                                   "--fairness", "gb", "--b", "1"],
                                  ["verify-param", "--system", SYS, "--formula", "x",
                                   "--fairness", "lb", "--b-range", "0..2"]])
def test_usage_errors(capsys, argv):
    assert main(argv) == 2


def test_bad_formula_file_reports_position(capsys, tmp_path):
    f = tmp_path / "bad.ltl"
    f.write_text("G (A.w -> A.nw)")
    code, _, err = run(capsys, "check", "--system", SYS, "--formula", f, "--n", 1,
                       "--fairness", "gb", "--b", 1)
    assert code == 2 and "->" in err


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "promptcut.cli", "cutoff", "--class", "token",
                        "--fairness", "gb", "--logic", "ltl", "--h", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("4")


def test_schema_errors():
    with pytest.raises(SchemaError):
        lasso_from_json({"schema": 2, "period": [{}]})
    with pytest.raises(SchemaError):
        lasso_from_json({"period": []})
    with pytest.raises(SchemaError):
        lasso_from_json({"period": [{"state": {"A": "x", "B2": "y"}, "mover": "A"}]})
    with pytest.raises(SchemaError):
        lasso_from_json({"kind": "token", "period": [{"state": {"T1": "q/1"}, "mover": "T1"}]})


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
@settings(max_examples=30)
def test_lasso_json_round_trip(seed):
    rng = random.Random(seed)
    if seed % 2:
        a, b = random_disjunctive(rng, 2, 2)
        s, kind = GuardedSystem(a, b, 2), "guarded"
    else:
        s, kind = TokenSystem(random_token_process(rng, 2), ring(3)), "token"
    x = random_fair_lasso(rng, s, b=8, counted=tuple(s.processes), tries=20)
    if x is None:
        return
    doc = json.loads(dumps(lasso_to_json(x, kind)))
    assert lasso_from_json(doc) == (x, kind)
    del doc["kind"]
    assert lasso_from_json(doc) == (x, kind)
