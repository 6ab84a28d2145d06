import json
import os
import subprocess
import sys

import jsonschema
import pytest

from csplab.cli import SCHEMAS, RunConfig, main, schema_id

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "demos", "data")


def data(name):
    return os.path.join(DATA, name)


def run(capsys, *argv):
    code = main([*argv, "--format", "json"])
    out = capsys.readouterr().out.strip().splitlines()
    return code, [json.loads(line) for line in out]


def check(report, command):
    jsonschema.validate(report, SCHEMAS[command])
    assert report["schema"] == schema_id(command)


def test_solve_qorder_cycle(capsys):
    code, (rep,) = run(capsys, "solve", "--template", "qorder", "--instance", data("c3.struct"))
    check(rep, "solve")
    assert code == 1 and rep["satisfiable"] is False


def test_solve_henson_triangle(capsys):
    code, (rep,) = run(capsys, "solve", "--template", "henson", "--instance", data("triangle.struct"))
    check(rep, "solve")
    assert code == 1


def test_solve_identity(capsys):
    code, (rep,) = run(capsys, "solve", "--template", "finite:" + data("k2.struct"),
                       "--instance", data("k2.struct"))
    check(rep, "solve")
    assert code == 0 and rep["satisfiable"] and rep["witness"]


def test_pebble(capsys):
    code, (rep,) = run(capsys, "pebble", "--l", "1", "--k", "2", "--template", "qorder",
                       "--instance", data("c3.struct"))
    check(rep, "pebble")
    assert code == 0 and rep["wins"]


def test_pebble_line(capsys):
    code, (rep,) = run(capsys, "pebble", "--l", "1", "--k", "2", "--template",
                       "finite:" + data("paths.struct"), "--instance", data("c3.struct"),
                       "--emit-line")
    check(rep, "pebble")
    assert code == 1 and not rep["wins"] and rep["line_length"] == 4


def test_ac_check_solves(capsys):
    code, (rep,) = run(capsys, "ac", "--template", "finite:" + data("k2.struct"), "--check-solves")
    check(rep, "ac")
    assert code == 1


def test_ac_text(capsys):
    code = main(["ac", "--template", "finite:" + data("k2.struct"), "--check-solves"])
    assert code == 1 and "AC does not solve" in capsys.readouterr().out


def test_consistency(capsys):
    code, (rep,) = run(capsys, "consistency", "--template", "qorder", "--instance", data("c3.struct"))
    check(rep, "consistency")
    assert code == 1 and rep["accepted"] is False


def test_treewidth(capsys):
    code, (rep,) = run(capsys, "treewidth", "--instance", data("cycle4.struct"), "--emit-formula")
    check(rep, "treewidth")
    assert code == 0 and rep["decomposable"]
    code, (rep,) = run(capsys, "treewidth", "--l", "1", "--k", "2", "--instance", data("cycle4.struct"))
    check(rep, "treewidth")
    assert code == 1


def test_nu(capsys):
    code, (rep,) = run(capsys, "nu", "--template", "finite:" + data("k2.struct"), "--arity", "3")
    check(rep, "nu")
    assert code == 0 and rep["found"]


def test_mmsnp(capsys):
    code, (rep,) = run(capsys, "mmsnp", "--sentence", data("tri2part.mmsnp"),
                       "--instance", data("k6.struct"))
    check(rep, "mmsnp")
    assert code == 1 and rep["satisfied"] is False


def test_datalog(capsys):
    code, (rep,) = run(capsys, "datalog", "--program", data("tc.dl"), "--instance", data("c3_edge.struct"))
    check(rep, "datalog")
    assert code == 1 and rep["derives_false"]


def test_xcheck_digraphs(capsys):
    code, out = run(capsys, "xcheck", "--template", "qorder", "--generate", "digraphs:3")
    *records, summary = out
    for rec in records:
        check(rec, "xcheck-record")
    check(summary, "xcheck-summary")
    assert code == 0 and summary["violations"] == 0
    assert [r["index"] for r in records] == list(range(len(records)))


def test_xcheck_k3_includes_k4(capsys):
    code, out = run(capsys, "xcheck", "--template", "finite:" + data("k3.struct"),
                    "--instance", data("k4.struct"))
    rec, summary = out
    assert rec["accepted"] and not rec["oracle_satisfiable"]
    assert code == 0 and summary["violations"] == 0


def test_xcheck_parallel_order(capsys):
    _, serial = run(capsys, "xcheck", "--template", "henson", "--generate", "random:20:4", "--seed", "3")
    _, parallel = run(capsys, "xcheck", "--template", "henson", "--generate", "random:20:4",
                      "--seed", "3", "--jobs", "2")
    assert serial == parallel


@pytest.mark.parametrize("argv", [
    ["solve", "--template", "qorder"],
    ["solve", "--template", "qorder", "--instance", "/nonexistent.struct"],
    ["pebble", "--template", "qorder", "--l", "3", "--k", "2", "--instance", data("c3.struct")],
    ["solve", "--template", "nonsense", "--instance", data("c3.struct")],
    ["solve", "--template", "qorder", "--instance", data("c3.struct"), "--cap-classes", "0"],
])
def test_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_budget_env(monkeypatch, capsys):
    monkeypatch.setenv("CSPLAB_BUDGET", "16")
    assert main(["mmsnp", "--sentence", data("tri2part.mmsnp"), "--instance", data("k6.struct")]) == 2
    monkeypatch.setenv("CSPLAB_BUDGET", "many")
    with pytest.raises(SystemExit):
        main(["mmsnp", "--sentence", data("tri2part.mmsnp"), "--instance", data("k6.struct")])


def test_run_config():
    with pytest.raises(ValueError):
        RunConfig("solve", l=2, k=2)
    with pytest.raises(ValueError):
        RunConfig("solve", budget=0)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "csplab", "solve", "--template", "qorder",
                           "--instance", data("c3.struct")], capture_output=True, text=True)
    assert proc.returncode == 1
