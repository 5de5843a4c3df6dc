from __future__ import annotations

import json

import pytest

from conftest import load_program, load_witness, manifest, program_for, v20_witnesses, witness_doc
from witness_contracts import (
    EntryKind,
    Exhaustive,
    Location,
    lower_to_v20,
    parse_program,
    parse_witness,
    serialize_witness,
    validate,
)
from witness_contracts.plan import build_plan
from witness_contracts.validate import execute

M = manifest()


def test_requires_becomes_location_invariant_at_first_statement():
    w = parse_witness(witness_doc([{"type": "function_contract", "location": {"file_name": "product.c", "line": 4},
                                    "requires": "b >= 0", "format": "c_expression"}]))
    lowered, report = lower_to_v20(w, load_program("product.c"))
    assert report.empty
    (e,) = lowered.entries
    assert e.kind is EntryKind.LOCATION_INVARIANT
    assert e.location == Location("product.c", 5, 3, "product") and e.value == "b >= 0"
    assert lowered.metadata.format_version == "2.0"


def test_result_goes_to_residue():
    _, report = lower_to_v20(load_witness("product.yml"), load_program("product.c"))
    assert "RESULT_REF" in report.reasons()


def test_globals_only_ensures_with_two_returns():
    src = ("int g = 0;\nint pick(int c) {\n  g = 1;\n  if (c)\n    return 5;\n  return 6;\n}\n"
           "int main() { return pick(__VERIFIER_nondet_int()); }\n")
    p = parse_program(src, "two.c")
    w = parse_witness(witness_doc([{"type": "function_contract", "location": {"file_name": "two.c", "line": 2},
                                    "ensures": "g == 1", "format": "c_expression"}]))
    lowered, report = lower_to_v20(w, p)
    assert report.empty
    assert [(e.location.line, e.location.column) for e in lowered.entries] == [(5, 5), (6, 3)]
    assert report.origins == [(0, "ensures"), (0, "ensures")]
    assert validate(p, lowered).kind == validate(p, w).kind == "no_violation_found"


@pytest.mark.parametrize("case", M["residue"], ids=lambda c: c["witness"])
def test_residue_reason_codes(case):
    _, report = lower_to_v20(load_witness(case["witness"]), load_program(case["program"]))
    got = [[i.entry, i.clause, list(i.reasons)] for i in report.items]
    assert got == case["items"]


def test_at_least_five_residue_cases_cover_all_codes():
    assert len(M["residue"]) >= 5
    codes = {r for case in M["residue"] for _, _, reasons in case["items"] for r in reasons}
    assert codes == {"RESULT_REF", "OLD_REF", "PARAM_REF", "AT_PRE", "NO_STATEMENT_POSITION",
                     "RETURN_SIDE_EFFECT", "SHADOWED_GLOBAL"}


@pytest.mark.parametrize("case", M["fully_lowerable"], ids=lambda c: c["witness"])
def test_fully_lowerable_verdicts_identical(case):
    w, p = load_witness(case["witness"]), load_program(case["program"])
    lowered, report = lower_to_v20(w, p)
    assert report.empty
    original = validate(p, w)
    after = validate(p, lowered)
    assert after.kind == original.kind
    if original.kind == "violated":
        assert after.input_vector == original.input_vector
        assert report.origins[after.entry] == (original.entry, original.clause)
    reparsed = parse_witness(serialize_witness(lowered))
    assert reparsed == lowered


@pytest.mark.parametrize("name", v20_witnesses())
def test_lowering_20_is_identity(name):
    w = load_witness(name)
    rel = program_for(name) or "product.c"
    lowered, report = lower_to_v20(w, load_program(rel))
    assert lowered == w and report.empty


@pytest.mark.parametrize("case", M["validation"], ids=lambda c: f"{c['witness']}@{c['program']}")
def test_lowering_is_sound_per_vector(case):
    """Every check the lowered witness fails corresponds to a failing clause of the original."""
    w, p = load_witness(case["witness"]), load_program(case["program"])
    lowered, report = lower_to_v20(w, p)
    strategy = Exhaustive(-4, 4, 2)
    runs_w = execute(p, build_plan(w, p), strategy, stop_on_failure=False)
    runs_l = execute(p, build_plan(lowered, p), strategy, stop_on_failure=False)
    for a, b in zip(runs_w, runs_l, strict=True):
        failed_original = {o for o, ok in a.events if not ok and o[0] is not None}
        failed_lowered = {report.origins[o[0]] for o, ok in b.events if not ok and o[0] is not None}
        assert failed_lowered <= failed_original, a.inputs


def test_residue_json_shape():
    _, report = lower_to_v20(load_witness("div.yml"), load_program("div.c"))
    data = json.loads(report.to_json())
    assert data["residue"][1] == {"entry_index": 1, "clause": "invariant", "reasons": ["AT_PRE"],
                                  "function": "div", "position": {"line": 8, "column": 3}}
