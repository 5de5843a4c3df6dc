from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from conftest import CORPUS, witness_doc
from witness_contracts.cli import run


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out=out, err=err)
    return code, out.getvalue(), err.getvalue()


W = CORPUS / "product.yml"
P = CORPUS / "product.c"


def test_lint_clean_is_silent():
    assert cli("lint", W, P) == (0, "", "")


def test_lint_findings_exit_3(tmp_path):
    bad = tmp_path / "bad.yml"
    bad.write_text(witness_doc([{"type": "function_contract", "location": {"file_name": "product.c", "line": 4},
                                 "ensures": "\\result == a*b", "format": "c_expression"}]))
    code, out, _ = cli("lint", bad, P)
    assert code == 3 and "R5" in out
    code, out, _ = cli("lint", bad, P, "--format", "json")
    (d,) = json.loads(out)
    assert code == 3 and d["rule"] == "R5" and d["severity"] == "error"
    assert d["path"] == "content[0].invariant.ensures"


def test_lint_warnings_exit_0(tmp_path):
    w = tmp_path / "w.yml"
    w.write_text(witness_doc([{"type": "function_contract", "location": {"file_name": "product.c", "line": 4},
                               "format": "c_expression"}]))
    code, out, _ = cli("lint", w, P)
    assert code == 0 and "W2" in out


def test_validate_json_stats():
    code, out, _ = cli("validate", W, P, "--exhaustive", -8, 7, 4, "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data == {"verdict": "no_violation_found", "stats": {"inputs_explored": 256, "entries_evaluated": 225}}


def test_validate_violation_exit_1():
    code, out, _ = cli("validate", W, CORPUS / "mutants" / "product.c", "--format", "json")
    data = json.loads(out)
    assert code == 1
    assert (data["verdict"], data["entry_index"], data["clause"]) == ("violated", 0, "ensures")
    assert data["input_vector"] == [-4, 0] and data["trace"]


def test_validate_unknown_exit_2(tmp_path):
    prog = tmp_path / "loop.c"
    prog.write_text("int main() { while (1) { } return 0; }\n")
    code, out, _ = cli("validate", CORPUS / "empty.yml", prog, "--step-limit", 100)
    assert code == 2 and out.startswith("unknown:")


def test_validate_random_is_deterministic():
    a = cli("validate", CORPUS / "div.yml", CORPUS / "div.c", "--random", 5, 50, "--format", "json")
    b = cli("validate", CORPUS / "div.yml", CORPUS / "div.c", "--random", 5, 50, "--format", "json")
    assert a == b and a[0] == 0


def test_validate_refuses_lint_errors(tmp_path):
    bad = tmp_path / "bad.yml"
    bad.write_text(witness_doc([{"type": "loop_invariant", "location": {"file_name": "product.c", "line": 5},
                                 "value": "1", "format": "c_expression"}]))
    code, out, err = cli("validate", bad, P)
    assert code == 3 and "R1" in err and out == ""


def test_instrument_writes_c(tmp_path):
    out_c = tmp_path / "out.c"
    assert cli("instrument", W, P, "-o", out_c)[0] == 0
    assert "__wit_result" in out_c.read_text() and "#include <assert.h>" in out_c.read_text()
    assert cli("instrument", W, P, "-o", out_c, "--reach-error")[0] == 0
    assert "reach_error();" in out_c.read_text()


def test_lower_prints_residue():
    code, out, _ = cli("lower", W, P, "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["residue"][0]["reasons"] == ["RESULT_REF", "PARAM_REF"]
    assert "location_invariant" in data["witness"]


def test_lower_writes_files(tmp_path):
    out_yml, res = tmp_path / "low.yml", tmp_path / "res.json"
    code, out, _ = cli("lower", CORPUS / "div.yml", CORPUS / "div.c", "-o", out_yml, "--residue", res)
    assert code == 0
    assert "format_version: '2.0'" in out_yml.read_text()
    assert {r["reasons"][0] for r in json.loads(res.read_text())["residue"]} == {"OLD_REF", "AT_PRE"}
    assert "residue: entry 0 ensures in div: OLD_REF" in out


@pytest.mark.parametrize(
    "argv",
    [
        ("lint", W, P, "--bogus"),
        ("lint", CORPUS / "missing.yml", P),
        ("lint", W, CORPUS / "missing.c"),
        ("validate", W, P, "--exhaustive", 1, 2),
        ("validate", W, P, "--exhaustive", 3, 1, 2),
        ("instrument", W, P),
        ("frobnicate", W, P),
        (),
    ],
)
def test_usage_errors_exit_64(argv):
    code, out, err = cli(*argv)
    assert code == 64 and out == "" and err.startswith("witness-contracts:")


def test_lenient_flag(tmp_path):
    w = tmp_path / "w.yml"
    w.write_text(witness_doc([{"type": "loop_invariant", "location": {"file_name": "product.c", "line": 7},
                               "value": "i <= b", "format": "c_expression", "note": "x"}]))
    assert cli("lint", w, P)[0] == 3
    code, out, _ = cli("lint", w, P, "--lenient")
    assert code == 0 and "warning" in out


def test_color_env(monkeypatch, tmp_path):
    w = tmp_path / "w.yml"
    w.write_text(witness_doc([{"type": "function_contract", "location": {"file_name": "product.c", "line": 4},
                               "format": "c_expression"}]))
    monkeypatch.setenv("WITNESS_CONTRACTS_COLOR", "1")
    assert "\x1b[" in cli("lint", w, P)[1]
    monkeypatch.setenv("WITNESS_CONTRACTS_COLOR", "0")
    assert "\x1b[" not in cli("lint", w, P)[1]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "witness_contracts.cli", "lint", str(W), str(P)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""
