from __future__ import annotations

import itertools
import random
import shutil
import subprocess

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from witness_contracts.expr import (
    INT_MAX,
    INT_MIN,
    AtPre,
    Binary,
    Cond,
    Context,
    EvalEnv,
    EvalFault,
    ExprError,
    Lit,
    OldOf,
    ResultRef,
    Unary,
    Var,
    evaluate,
    free_variables,
    parse_expression,
    print_expression,
    tokenize,
    walk,
    wrap32,
)

ACSL, C = "acsl_expression", "c_expression"
BINOPS = ["*", "/", "%", "+", "-", "<<", ">>", "<", "<=", ">", ">=", "==", "!=", "&", "^", "|", "&&", "||"]


# -- examples -------------------------------------------------------------------


def test_result_product():
    e = parse_expression("\\result == a*b", ACSL, Context.ENSURES)
    assert e == Binary("==", ResultRef(), Binary("*", Var("a"), Var("b")))


def test_old_of_global():
    assert parse_expression("g < \\old(g)", ACSL, Context.ENSURES) == Binary("<", Var("g"), OldOf("g"))


def test_at_with_other_label_is_rejected():
    with pytest.raises(ExprError) as info:
        parse_expression("\\at(x, Post)", ACSL, Context.INVARIANT)
    assert info.value.code == "label"


def test_literal_one():
    assert parse_expression("1", C, Context.REQUIRES) == Lit(1)


@pytest.mark.parametrize(
    "text, fmt, ctx, code",
    [
        ("\\old(x) == x", C, Context.ENSURES, "format"),
        ("\\result", C, Context.ENSURES, "format"),
        ("x < \\at(x, Pre)", ACSL, Context.ENSURES, "context"),
        ("\\old(x) > 0", ACSL, Context.REQUIRES, "context"),
        ("\\result > 0", ACSL, Context.INVARIANT, "context"),
        ("\\old(x + 1) > 0", ACSL, Context.ENSURES, "argument"),
        ("x = 1", C, Context.INVARIANT, "syntax"),
        ("x++", C, Context.INVARIANT, "syntax"),
        ("f(x)", C, Context.INVARIANT, "syntax"),
        ("*p", C, Context.INVARIANT, "syntax"),
        ("&x", C, Context.INVARIANT, "syntax"),
        ("x, y", C, Context.INVARIANT, "syntax"),
        ("(int) x", C, Context.INVARIANT, "syntax"),
        ("sizeof(x)", C, Context.INVARIANT, "syntax"),
        ("1.5 > x", C, Context.INVARIANT, "syntax"),
        ("", C, Context.INVARIANT, "syntax"),
        ("(a + b", C, Context.INVARIANT, "syntax"),
        ("\\valid(p)", ACSL, Context.INVARIANT, "syntax"),
    ],
)
def test_rejections(text, fmt, ctx, code):
    with pytest.raises(ExprError) as info:
        parse_expression(text, fmt, ctx)
    assert info.value.code == code


def test_syntax_error_offset():
    with pytest.raises(ExprError) as info:
        parse_expression("a + * b", C, Context.INVARIANT)
    assert info.value.offset == 4


@pytest.mark.parametrize(
    "text, tree",
    [
        ("a - b - c", Binary("-", Binary("-", Var("a"), Var("b")), Var("c"))),
        ("a + b * c", Binary("+", Var("a"), Binary("*", Var("b"), Var("c")))),
        ("a || b && c", Binary("||", Var("a"), Binary("&&", Var("b"), Var("c")))),
        ("a & b == c", Binary("&", Var("a"), Binary("==", Var("b"), Var("c")))),
        ("a ? b : c ? d : e", Cond(Var("a"), Var("b"), Cond(Var("c"), Var("d"), Var("e")))),
        ("-a * b", Binary("*", Unary("-", Var("a")), Var("b"))),
        ("a << 1 < b", Binary("<", Binary("<<", Var("a"), Lit(1)), Var("b"))),
        ("0x1F + 010", Binary("+", Lit(31), Lit(8))),
    ],
)
def test_precedence_and_associativity(text, tree):
    assert parse_expression(text, C, Context.INVARIANT) == tree


def test_print_examples():
    assert print_expression(Lit(1)) == "1"
    assert print_expression(Binary("==", ResultRef(), Binary("*", Var("a"), Var("b")))) == "\\result == a * b"
    assert print_expression(Binary("*", Binary("+", Var("a"), Var("b")), Var("c"))) == "(a + b) * c"
    assert print_expression(Binary("-", Var("a"), Binary("-", Var("b"), Var("c")))) == "a - (b - c)"
    nested = Cond(Cond(Var("a"), Var("b"), Var("c")), Var("d"), Var("e"))
    assert print_expression(nested) == "(a ? b : c) ? d : e"


def test_free_variables_examples():
    assert free_variables(Binary("<", Var("g"), OldOf("g"))) == {("g", "current"), ("g", "pre")}
    assert free_variables(Lit(1)) == set()
    assert free_variables(Binary("==", ResultRef(), Var("a"))) == {(None, "result"), ("a", "current")}
    assert free_variables(AtPre("x")) == {("x", "pre")}


def test_tokens_report_byte_columns():
    toks = list(tokenize("x\n  é == y"))
    eq = next(t for t in toks if t.text == "==")
    assert (eq.line, eq.column) == (2, 6)  # 'é' is two bytes


# -- evaluation -----------------------------------------------------------------


def test_eval_examples():
    e = parse_expression("\\result == a*b", ACSL, Context.ENSURES)
    env = EvalEnv(current={"a": 0, "b": 0}, pre={"a": 3, "b": 4}, result=12, params=frozenset({"a", "b"}))
    assert evaluate(e, env, Context.ENSURES) == 1

    e = parse_expression("g < \\at(g, Pre)", ACSL, Context.INVARIANT)
    assert evaluate(e, EvalEnv(current={"g": 2}, pre={"g": 5}), Context.INVARIANT) == 1


@pytest.mark.parametrize(
    "text, value",
    [
        ("7 / 2", 3),
        ("-7 / 2", -3),
        ("7 / -2", -3),
        ("-7 % 2", -1),
        ("7 % -2", 1),
        ("2147483647 + 1", INT_MIN),
        ("-2147483647 - 2", INT_MAX),
        ("65536 * 65536", 0),
        ("-2147483647 - 1 == -2147483648", 1),
        ("~0", -1),
        ("-1 >> 1", -1),
        ("1 << 31", INT_MIN),
        ("!5", 0),
        ("3 && 4", 1),
        ("0 || 0", 0),
        ("2 ? 10 : 20", 10),
        ("4294967296", 0),
    ],
)
def test_arithmetic(text, value):
    assert evaluate(parse_expression(text, C, Context.INVARIANT), EvalEnv({})) == value


@pytest.mark.parametrize("text", ["1 / 0", "1 % 0", "x / (x - x)", "1 << 32", "1 >> -1", "y + 1"])
def test_faults(text):
    with pytest.raises(EvalFault):
        evaluate(parse_expression(text, C, Context.INVARIANT), EvalEnv({"x": 3}))


@pytest.mark.parametrize(
    "text, value",
    [("0 && 1 / 0", 0), ("1 || 1 / 0", 1), ("1 ? 2 : 1 / 0", 2), ("0 ? 1 / 0 : 3", 3), ("0 && \\result", 0)],
)
def test_short_circuit(text, value):
    ctx = Context.ENSURES
    assert evaluate(parse_expression(text, ACSL, ctx), EvalEnv({}), ctx) == value


def test_right_operand_faults_when_evaluated():
    with pytest.raises(EvalFault):
        evaluate(parse_expression("1 && 1 / 0", C, Context.INVARIANT), EvalEnv({}))


int32 = st.integers(INT_MIN, INT_MAX)


@settings(max_examples=1000, deadline=None)
@given(x_pre=int32, x_now=int32, g_pre=int32, g_now=int32)
def test_parameter_reads_pre_value_in_ensures(x_pre, x_now, g_pre, g_now):
    env = EvalEnv({"x": x_now, "g": g_now}, {"x": x_pre, "g": g_pre}, params=frozenset({"x"}))
    plain = parse_expression("x", ACSL, Context.ENSURES)
    old = parse_expression("\\old(x)", ACSL, Context.ENSURES)
    assert evaluate(plain, env, Context.ENSURES) == evaluate(old, env, Context.ENSURES) == x_pre
    assert evaluate(parse_expression("x == \\old(x)", ACSL, Context.ENSURES), env, Context.ENSURES) == 1
    # globals are not affected: they read the current value
    assert evaluate(parse_expression("g", ACSL, Context.ENSURES), env, Context.ENSURES) == g_now


# -- random ASTs ------------------------------------------------------------------

names = st.sampled_from(["a", "b", "g", "x1", "_t"])


def ast_strategy(keywords):
    leaves = [st.builds(Lit, st.integers(0, 2**31 - 1)), st.builds(Var, names)]
    if "old" in keywords:
        leaves.append(st.builds(OldOf, names))
    if "result" in keywords:
        leaves.append(st.just(ResultRef()))
    if "at" in keywords:
        leaves.append(st.builds(AtPre, names))
    return st.recursive(
        st.one_of(leaves),
        lambda sub: st.one_of(
            st.builds(Unary, st.sampled_from(["-", "!", "~"]), sub),
            st.builds(Binary, st.sampled_from(BINOPS), sub, sub),
            st.builds(Cond, sub, sub, sub),
        ),
        max_leaves=12,
    )


@settings(max_examples=300, deadline=None)
@given(ast_strategy({"old", "result"}))
def test_roundtrip_ensures(e):
    assert parse_expression(print_expression(e), ACSL, Context.ENSURES) == e


@settings(max_examples=300, deadline=None)
@given(ast_strategy({"at"}))
def test_roundtrip_invariant(e):
    assert parse_expression(print_expression(e), ACSL, Context.INVARIANT) == e


@settings(max_examples=200, deadline=None)
@given(ast_strategy(set()))
def test_roundtrip_plain_c_is_format_independent(e):
    text = print_expression(e)
    for ctx in Context:
        assert parse_expression(text, C, ctx) == e


# -- context gating by enumeration ----------------------------------------------

ATOMS = ["x", "1", "\\old(x)", "\\at(x, Pre)", "\\result"]


def small_texts():
    yield from ATOMS
    for a in ATOMS:
        yield f"!{a}"
    for a, b in itertools.product(ATOMS, repeat=2):
        yield f"{a} + {b}"
        yield f"({a}) == {b}"


ALLOWED = {
    Context.REQUIRES: set(),
    Context.ENSURES: {OldOf, ResultRef},
    Context.INVARIANT: {AtPre},
}


@pytest.mark.parametrize("fmt", [C, ACSL])
@pytest.mark.parametrize("ctx", list(Context))
def test_context_gating_exhaustive(fmt, ctx):
    count = 0
    for text in small_texts():
        uses = {cls for cls in (OldOf, AtPre, ResultRef) if _mentions(text, cls)}
        ok = not uses or (fmt == ACSL and uses <= ALLOWED[ctx])
        try:
            e = parse_expression(text, fmt, ctx)
        except ExprError:
            assert not ok, text
        else:
            assert ok, text
            assert {type(n) for n in walk(e)} & {OldOf, AtPre, ResultRef} <= ALLOWED[ctx]
        count += 1
    assert count == len(ATOMS) * 2 + 2 * len(ATOMS) ** 2


def _mentions(text: str, cls) -> bool:
    return {OldOf: "\\old", AtPre: "\\at", ResultRef: "\\result"}[cls] in text


# -- arithmetic oracle: gcc -fwrapv -----------------------------------------------

SAFE_OPS = ["+", "-", "*", "<", "<=", ">", ">=", "==", "!=", "&", "^", "|", "&&", "||"]


def _random_expr(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.2:
        return Var(rng.choice("abc")) if rng.random() < 0.6 else Lit(rng.randint(0, 100000))
    r = rng.random()
    if r < 0.15:
        return Unary(rng.choice("-!~"), _random_expr(rng, depth - 1))
    if r < 0.25:
        return Cond(*(_random_expr(rng, depth - 1) for _ in range(3)))
    if r < 0.35:
        # defined in C: positive literal divisor never hits INT_MIN / -1
        return Binary(rng.choice("/%"), _random_expr(rng, depth - 1), Lit(rng.randint(1, 9)))
    if r < 0.42:
        return Binary(rng.choice(["<<", ">>"]), _random_expr(rng, depth - 1), Lit(rng.randint(0, 31)))
    return Binary(rng.choice(SAFE_OPS), _random_expr(rng, depth - 1), _random_expr(rng, depth - 1))


@pytest.mark.skipif(shutil.which("gcc") is None, reason="gcc not available")
def test_arithmetic_matches_gcc_wrapv(tmp_path):
    rng = random.Random(20261019)
    exprs = [_random_expr(rng, 5) for _ in range(300)]
    envs = [{k: rng.randint(-(2**31), 2**31 - 1) for k in "abc"} for _ in range(4)] + [
        {k: rng.randint(-20, 20) for k in "abc"} for _ in range(4)
    ]
    body = "\n".join(f'  printf("%d\\n", (int)({print_expression(e)}));' for e in exprs)
    src = tmp_path / "oracle.c"
    src.write_text(
        "#include <stdio.h>\n#include <stdlib.h>\n"
        "int main(int argc, char **argv) {\n"
        "  int a = (int)strtol(argv[1], 0, 10), b = (int)strtol(argv[2], 0, 10), c = (int)strtol(argv[3], 0, 10);\n"
        f"{body}\n  return 0;\n}}\n"
    )
    exe = tmp_path / "oracle"
    subprocess.run(["gcc", "-std=c99", "-fwrapv", "-w", "-O0", "-o", str(exe), str(src)], check=True)
    for env in envs:
        out = subprocess.run([str(exe), str(env["a"]), str(env["b"]), str(env["c"])], capture_output=True,
                             text=True, check=True).stdout.split()
        ours = [evaluate(e, EvalEnv(env)) for e in exprs]
        assert ours == [int(v) for v in out]


@given(st.integers(0, 2**40))
def test_literal_wraps(n):
    assert evaluate(Lit(n), EvalEnv({})) == wrap32(n)
    assert INT_MIN <= wrap32(n) <= INT_MAX
