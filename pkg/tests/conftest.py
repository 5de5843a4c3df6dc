from __future__ import annotations

import functools
from pathlib import Path

import pytest
import yaml

from witness_contracts import parse_program, parse_witness

CORPUS = Path(__file__).parent / "corpus"


@functools.lru_cache(maxsize=None)
def load_program(rel: str):
    """Parse ``corpus/<rel>``; the AST keeps only the basename, as witnesses do."""
    path = CORPUS / rel
    return parse_program(path.read_text(), path.name)


@functools.lru_cache(maxsize=None)
def load_witness(rel: str):
    return parse_witness((CORPUS / rel).read_text(), source_name=rel)


@functools.lru_cache(maxsize=None)
def manifest() -> dict:
    return yaml.safe_load((CORPUS / "manifest.yaml").read_text())


def lint_cases() -> list[dict]:
    return yaml.safe_load((CORPUS / "lint_cases.yaml").read_text())


def witness_doc(entries: list[dict], version: str = "2.1") -> str:
    doc = [
        {
            "entry_type": "invariant_set",
            "metadata": {"format_version": version},
            "content": [{"invariant": e} for e in entries],
        }
    ]
    return yaml.safe_dump(doc, sort_keys=False)


def v20_witnesses() -> list[str]:
    return sorted(p.name for p in CORPUS.glob("*.v20.yml"))


def program_for(witness_name: str) -> str | None:
    base = witness_name.split(".")[0]
    return None if base == "empty" else f"{base}.c"


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


# -- instrumented-vs-interpreted oracle ----------------------------------------------

ORACLE_STRATEGY_ARGS = (-8, 7, 4)


def oracle_runs(program, witness, strategy):
    """Pair each interpreted run (with checks) with the run of the instrumented program.

    Both sides keep going after a failed check, so the full sequence of
    check outcomes can be compared.
    """
    from witness_contracts.instrument import instrument_program
    from witness_contracts.plan import build_plan
    from witness_contracts.validate import execute

    plan = build_plan(witness, program)
    instrumented = instrument_program(program, witness, plan=plan)
    left = execute(program, plan, strategy, stop_on_failure=False)
    right = execute(instrumented, None, strategy, stop_on_failure=False)
    return list(zip(left, right, strict=True))


# -- native execution ------------------------------------------------------------

DRIVER_C = r"""
#include <stdio.h>
#include <stdlib.h>

int __VERIFIER_nondet_int(void) {
    int v;
    if (scanf("%d", &v) == 1)
        return v;
    return 0;
}

void __VERIFIER_assume(int cond) {
    if (!cond)
        exit(0);
}

void reach_error(void) {
    fputs("reach_error\n", stdout);
    exit(1);
}
"""


def compile_native(c_text: str, workdir: Path, name: str = "prog") -> Path:
    import subprocess

    src = workdir / f"{name}.c"
    driver = workdir / "driver.c"
    exe = workdir / name
    src.write_text(c_text)
    driver.write_text(DRIVER_C)
    subprocess.run(
        ["gcc", "-std=c99", "-fwrapv", "-pedantic", "-Werror=implicit-function-declaration", "-O0",
         "-o", str(exe), str(src), str(driver)],
        check=True, capture_output=True, text=True,
    )
    return exe


def run_native(exe: Path, vector) -> str:
    """``pass`` or ``fail`` for one input vector."""
    import subprocess

    proc = subprocess.run([str(exe)], input=" ".join(map(str, vector)), capture_output=True, text=True, timeout=10)
    return "fail" if proc.returncode != 0 else "pass"
