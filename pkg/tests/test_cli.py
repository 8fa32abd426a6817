import json
from pathlib import Path

import pytest

from ghyltl.cli import main
from ghyltl.semantics import parse_hyper
from ghyltl.cli import read_formula_file

TRACES_ONE_EMPTY = {
    "ap": ["li", "lo", "p"],
    "traces": [{"name": "t0", "prefix": [], "loop": [[]]}],
}

NONINTERFERENCE = ("ap: li, lo\n"
                   "forall x. forall y. (G[] (li_x <-> li_y)) -> (G[] (lo_x <-> lo_y))\n")


@pytest.fixture
def workdir(tmp_path: Path) -> Path:
    (tmp_path / "traces.json").write_text(json.dumps(TRACES_ONE_EMPTY), encoding="utf-8")
    (tmp_path / "noninterference.ghyltl").write_text(NONINTERFERENCE, encoding="utf-8")
    return tmp_path


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr().out
    return code, out


def test_eval_holds_exit_zero(workdir, capsys):
    code, out = run(["eval", workdir / "traces.json", workdir / "noninterference.ghyltl"],
                    capsys)
    assert code == 0
    assert "verdict: holds" in out


def test_eval_fails_exit_one(workdir, capsys):
    (workdir / "f.ghyltl").write_text("ap: p\nexists x. p_x\n", encoding="utf-8")
    code, out = run(["eval", workdir / "traces.json", workdir / "f.ghyltl"], capsys)
    assert code == 1


def test_eval_parse_error_exit_three(workdir, capsys):
    (workdir / "bad.ghyltl").write_text("ap: p\nexists x. p_x &\n", encoding="utf-8")
    code = main(["eval", str(workdir / "traces.json"), str(workdir / "bad.ghyltl")])
    err = capsys.readouterr().err
    assert code == 3
    assert "line" in err and "column" in err


def test_missing_file_exit_three(workdir, capsys):
    code = main(["eval", str(workdir / "nope.json"), str(workdir / "noninterference.ghyltl")])
    assert code == 3


def test_json_report_deterministic(workdir, capsys):
    args = ["eval", workdir / "traces.json", workdir / "noninterference.ghyltl", "--json"]
    _, out1 = run(args, capsys)
    _, out2 = run(args, capsys)
    o1, o2 = json.loads(out1), json.loads(out2)
    o1.pop("timing_ms"), o2.pop("timing_ms")
    assert o1 == o2


def test_check_exit_codes(workdir, capsys):
    system = {
        "ap": ["p"],
        "vertices": [{"id": "a", "label": []}, {"id": "b", "label": ["p"]}],
        "edges": [["a", "a"], ["a", "b"], ["b", "a"], ["b", "b"]],
        "initial": ["a", "b"],
    }
    (workdir / "sys.json").write_text(json.dumps(system), encoding="utf-8")
    (workdir / "e.ghyltl").write_text("ap: p\nexists x. G[] !p_x\n", encoding="utf-8")
    code, out = run(["check", workdir / "sys.json", workdir / "e.ghyltl"], capsys)
    assert code == 0
    (workdir / "ae.ghyltl").write_text(
        "ap: p\nforall x. exists y. G[] (p_x <-> p_y)\n", encoding="utf-8")
    code, out = run(["check", workdir / "sys.json", workdir / "ae.ghyltl"], capsys)
    assert code == 2
    assert "reason:" in out


def test_gadget_command(workdir, capsys):
    code, _ = run(["gadget", "--encoding", "stutter", "--op", "add",
                   "--n1", 5, "--n2", 4, "--n3", 9], capsys)
    assert code == 0
    code, _ = run(["gadget", "--encoding", "context", "--op", "mul",
                   "--n1", 3, "--n2", 7, "--n3", 21], capsys)
    assert code == 0
    code, _ = run(["gadget", "--encoding", "context", "--op", "mul",
                   "--n1", 2, "--n2", 2, "--n3", 5], capsys)
    assert code == 1


def test_compile_writes_artifacts(workdir, capsys):
    (workdir / "arith.txt").write_text(
        "exists y. exists Y. y in Y", encoding="utf-8")
    out = workdir / "compiled"
    code, _ = run(["compile", "--encoding", "stutter", workdir / "arith.txt", out], capsys)
    assert code == 0
    assert (out / "varmap.json").exists()
    from ghyltl.traces import load_transition_system, save_transition_system
    import io
    with open(out / "system.json", encoding="utf-8") as fp:
        ts = load_transition_system(fp)
    buf = io.StringIO()
    save_transition_system(buf, ts)
    assert buf.getvalue() == (out / "system.json").read_text(encoding="utf-8")
    ap, formula = read_formula_file(str(out / "formula.ghyltl"))
    text = (out / "formula.ghyltl").read_text(encoding="utf-8")
    assert "F[] (hy_y_x_y & hash_x_Y)" in text
    # round trip: the emitted formula re-parses to the same AST
    assert parse_hyper(text.splitlines()[1], ap) == formula
    varmap = json.loads((out / "varmap.json").read_text(encoding="utf-8"))
    assert varmap["varmap"] == {"y": "x_y", "Y": "x_Y"}


def test_compile_context_fragment(workdir, capsys):
    (workdir / "arith.txt").write_text(
        "exists a. exists b. exists c. a + b = c", encoding="utf-8")
    out = workdir / "compiled_ctx"
    code, report = run(["compile", "--encoding", "context", workdir / "arith.txt",
                        out, "--json"], capsys)
    assert code == 0
    assert json.loads(report)["detail"]["fragment"] == "HyperLTL_C"


def test_prenex_identity_byte_stable(workdir, capsys):
    text = "ap: p\nforall x. exists y. G[] (p_x <-> p_y)\n"
    (workdir / "pf.ghyltl").write_text(text, encoding="utf-8")
    out1 = workdir / "out1.ghyltl"
    code, _ = run(["prenex", workdir / "pf.ghyltl", "--out", out1], capsys)
    assert code == 0
    # identity on prenex input: re-running on the output is byte-stable
    out2 = workdir / "out2.ghyltl"
    code, _ = run(["prenex", out1, "--out", out2], capsys)
    assert code == 0
    assert out1.read_text(encoding="utf-8") == out2.read_text(encoding="utf-8")


def test_prenex_transforms_inner_quantifier(workdir, capsys):
    (workdir / "inner.ghyltl").write_text(
        "ap: p\nexists x. G[] (exists y. (p_x <-> p_y))\n", encoding="utf-8")
    out = workdir / "outp.ghyltl"
    code, _ = run(["prenex", workdir / "inner.ghyltl", "--out", out], capsys)
    assert code == 0
    ap, formula = read_formula_file(str(out))
    assert "hash" in ap
    from ghyltl.semantics import is_prenex
    assert is_prenex(formula)


def test_sat_contradiction_exit_one(workdir, capsys):
    (workdir / "c.ghyltl").write_text("ap: p\nexists x. p_x & !p_x\n", encoding="utf-8")
    code, _ = run(["sat", workdir / "c.ghyltl", "--max-traces", 3,
                   "--max-prefix", 3, "--max-loop", 2], capsys)
    assert code == 1


def test_sat_writes_model(workdir, capsys):
    model = workdir / "model.json"
    code, _ = run(["sat", workdir / "noninterference.ghyltl", "--max-traces", 1,
                   "--max-prefix", 0, "--max-loop", 1, "--out", model], capsys)
    assert code == 0
    obj = json.loads(model.read_text(encoding="utf-8"))
    assert len(obj["traces"]) == 1


def test_eval_periodicity_witness_file(workdir, capsys):
    # periodic dollar-block traces satisfy the existentially closed
    # periodicity conjunction; dropping one block position breaks it
    from ghyltl.arith import alpha_per_context
    from ghyltl.semantics import Exists, render_hyper

    sentence = Exists("x", Exists("xp", alpha_per_context("x", "xp")))
    good = {"ap": ["dlr", "hash"], "traces": [
        {"name": "per3", "prefix": [], "loop": [["dlr"]] * 3 + [[]] * 3}]}
    bad = {"ap": ["dlr", "hash"], "traces": [
        {"name": "per32", "prefix": [], "loop": [["dlr"]] * 3 + [[]] * 2}]}
    (workdir / "per.json").write_text(json.dumps(good), encoding="utf-8")
    (workdir / "per_bad.json").write_text(json.dumps(bad), encoding="utf-8")
    (workdir / "alpha.ghyltl").write_text(
        "ap: dlr, hash\n" + render_hyper(sentence) + "\n", encoding="utf-8")
    code, _ = run(["eval", workdir / "per.json", workdir / "alpha.ghyltl"], capsys)
    assert code == 0
    code, _ = run(["eval", workdir / "per_bad.json", workdir / "alpha.ghyltl"], capsys)
    assert code == 1


def test_oracle_command(workdir, capsys):
    (workdir / "a.txt").write_text(
        "exists a. exists b. exists c. (a * b = c & c = 12 & a < b & 2 < a)",
        encoding="utf-8")
    code, _ = run(["oracle", workdir / "a.txt", "--bound", 13], capsys)
    assert code == 0
    (workdir / "b.txt").write_text("exists a. a < a", encoding="utf-8")
    code, _ = run(["oracle", workdir / "b.txt"], capsys)
    assert code == 1
