"""Side-effect-free C expressions with the ACSL constructs ``\\old``, ``\\at(_, Pre)`` and ``\\result``.

Arithmetic is 32-bit two's complement with wraparound.  Division truncates
toward zero; division or remainder by zero and shift counts outside
``[0, 31]`` raise :class:`EvalFault` instead of producing a value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Union

from .witness import ExprFormat

__all__ = [
    "Lit", "Var", "Unary", "Binary", "Cond", "OldOf", "AtPre", "ResultRef", "Call",
    "Expr", "Context", "ExprError", "EvalFault", "EvalEnv", "Token", "tokenize",
    "parse_expression", "print_expression", "free_variables", "evaluate",
    "transform", "walk", "wrap32", "binary_op", "unary_op", "is_trivially_true",
]

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1


def wrap32(value: int) -> int:
    value &= 0xFFFFFFFF
    return value - 0x100000000 if value & 0x80000000 else value


# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: int  # non-negative; negation is a Unary node


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cond:
    test: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class OldOf:
    name: str


@dataclass(frozen=True)
class AtPre:
    name: str


@dataclass(frozen=True)
class ResultRef:
    pass


@dataclass(frozen=True)
class Call:
    """Direct call; only produced when parsing program code, never for witness clauses."""

    name: str
    args: tuple["Expr", ...] = ()


Expr = Union[Lit, Var, Unary, Binary, Cond, OldOf, AtPre, ResultRef, Call]


class Context(str, enum.Enum):
    REQUIRES = "requires"
    ENSURES = "ensures"
    INVARIANT = "invariant"


class ExprError(ValueError):
    """Rejected expression text.

    ``code`` is one of ``syntax``, ``format`` (ACSL keyword with
    ``c_expression``), ``context`` (keyword not permitted in this clause),
    ``argument`` (non-variable argument to ``\\old``/``\\at``) or ``label``
    (``\\at`` label other than ``Pre``).
    """

    def __init__(self, message: str, offset: int = 0, code: str = "syntax"):
        super().__init__(message)
        self.message = message
        self.offset = offset
        self.code = code


class EvalFault(ArithmeticError):
    pass


# -- lexer ------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | acsl | op | eof
    text: str
    offset: int
    line: int = 1
    column: int = 1
    value: int = field(default=0, compare=False)


_PUNCT3 = ("<<=", ">>=", "...")
_PUNCT2 = (
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "->",
)
_PUNCT1 = set("+-*/%<>=!~&|^?:;,(){}[].")


def tokenize(text: str, *, skip_directives: bool = False) -> Iterator[Token]:
    """C tokens with 1-based line and byte-column positions.

    With ``skip_directives`` whole lines starting with ``#`` are ignored.
    """
    i = 0
    n = len(text)
    line = 1
    line_start = 0
    at_line_start = True

    def column(pos: int) -> int:
        segment = text[line_start:pos]
        return (len(segment.encode("utf-8")) if not segment.isascii() else len(segment)) + 1

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            line_start = i
            at_line_start = True
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "#" and skip_directives and at_line_start:
            while i < n and text[i] != "\n":
                # backslash-newline continues a directive
                if text[i] == "\\" and i + 1 < n and text[i + 1] == "\n":
                    i += 2
                    line += 1
                    line_start = i
                    continue
                i += 1
            continue
        at_line_start = False
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise ExprError("unterminated comment", i)
            for j in range(i, end):
                if text[j] == "\n":
                    line += 1
                    line_start = j + 1
            i = end + 2
            continue
        start = i
        if c.isdigit():
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            try:
                if word.lower().startswith("0x"):
                    value = int(word[2:], 16)
                elif len(word) > 1 and word.startswith("0"):
                    value = int(word[1:], 8)
                else:
                    value = int(word, 10)
            except ValueError:
                raise ExprError(f"invalid integer literal {word!r}", start) from None
            yield Token("int", word, start, line, column(start), value)
            continue
        if c.isalpha() or c == "_":
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            yield Token("ident", text[start:i], start, line, column(start))
            continue
        if c == "\\":
            i += 1
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            yield Token("acsl", text[start:i], start, line, column(start))
            continue
        if c in "\"'":
            # only skipped over (builtin declarations); never a valid operand
            i += 1
            while i < n and text[i] != c:
                i += 2 if text[i] == "\\" else 1
                if i < n and text[i] == "\n":
                    raise ExprError("unterminated literal", start)
            i += 1
            yield Token("str", text[start:i], start, line, column(start))
            continue
        for punct in _PUNCT3 + _PUNCT2:
            if text.startswith(punct, i):
                i += len(punct)
                yield Token("op", punct, start, line, column(start))
                break
        else:
            if c in _PUNCT1:
                i += 1
                yield Token("op", c, start, line, column(start))
            else:
                raise ExprError(f"unexpected character {c!r}", start)
    yield Token("eof", "", n, line, column(n))


# -- parser -----------------------------------------------------------------

BINARY_PREC = {
    "||": 2, "&&": 3, "|": 4, "^": 5, "&": 6,
    "==": 7, "!=": 7, "<": 8, "<=": 8, ">": 8, ">=": 8,
    "<<": 9, ">>": 9, "+": 10, "-": 10, "*": 11, "/": 11, "%": 11,
}
COND_PREC = 1
UNARY_PREC = 12
PRIMARY_PREC = 13
UNARY_OPS = ("-", "!", "~")
ACSL_KEYWORDS = ("\\old", "\\at", "\\result")


class ExprParser:
    """Precedence-climbing parser over a token list.

    ``fmt``/``context`` gate the ACSL constructs; with ``allow_calls`` (program
    code) direct calls ``f(a, b)`` are accepted and ACSL keywords are not.
    """

    def __init__(
        self,
        tokens: list[Token],
        pos: int = 0,
        *,
        fmt: ExprFormat | None = None,
        context: Context | None = None,
        allow_calls: bool = False,
    ):
        self.tokens = tokens
        self.pos = pos
        self.fmt = fmt
        self.context = context
        self.allow_calls = allow_calls

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind not in ("op", "ident"):
            raise ExprError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.offset)
        return self.advance()

    def parse(self, min_prec: int = COND_PREC) -> Expr:
        if min_prec <= COND_PREC:
            return self.conditional()
        return self.binary(min_prec)

    def conditional(self) -> Expr:
        test = self.binary(BINARY_PREC["||"])
        if self.tok.kind == "op" and self.tok.text == "?":
            self.advance()
            then = self.conditional()
            self.expect(":")
            other = self.conditional()
            return Cond(test, then, other)
        return test

    def binary(self, min_prec: int) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and BINARY_PREC.get(self.tok.text, 0) >= min_prec:
            op = self.advance().text
            right = self.binary(BINARY_PREC[op] + 1)
            left = Binary(op, left, right)
        return left

    def unary(self) -> Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text in UNARY_OPS:
            self.advance()
            return Unary(tok.text, self.unary())
        if tok.kind == "op" and tok.text in ("++", "--", "&", "*"):
            raise ExprError(f"operator {tok.text!r} is not allowed in side-effect-free expressions", tok.offset)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.advance()
        if tok.kind == "int":
            return Lit(tok.value)
        if tok.kind == "ident":
            if self.tok.kind == "op" and self.tok.text == "(":
                if not self.allow_calls:
                    raise ExprError(f"function call {tok.text}(...) is not allowed", tok.offset)
                return self.call(tok)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            inner = self.conditional()
            self.expect(")")
            return inner
        if tok.kind == "acsl":
            return self.acsl(tok)
        what = tok.text or "end of input"
        raise ExprError(f"unexpected {what!r}", tok.offset)

    def call(self, name: Token) -> Expr:
        self.expect("(")
        args: list[Expr] = []
        if not (self.tok.kind == "op" and self.tok.text == ")"):
            args.append(self.conditional())
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.conditional())
        self.expect(")")
        return Call(name.text, tuple(args))

    def acsl(self, tok: Token) -> Expr:
        word = tok.text
        if word not in ACSL_KEYWORDS:
            raise ExprError(f"unknown ACSL keyword {word}", tok.offset)
        if self.fmt is not ExprFormat.ACSL_EXPRESSION:
            raise ExprError(f"{word} used with format c_expression", tok.offset, "format")
        ctx = self.context
        if word == "\\result":
            if ctx is not Context.ENSURES:
                raise ExprError(f"\\result not allowed in {ctx.value}", tok.offset, "context")
            return ResultRef()
        if word == "\\old":
            if ctx is not Context.ENSURES:
                raise ExprError(f"\\old not allowed in {ctx.value}", tok.offset, "context")
            self.expect("(")
            name = self.bare_identifier(word)
            self.expect(")")
            return OldOf(name)
        if ctx is not Context.INVARIANT:
            raise ExprError(f"\\at(_, Pre) not allowed in {ctx.value}", tok.offset, "context")
        self.expect("(")
        name = self.bare_identifier(word)
        self.expect(",")
        label = self.advance()
        if label.kind != "ident" or label.text != "Pre":
            raise ExprError(f"only label Pre allowed in \\at, found {label.text!r}", label.offset, "label")
        self.expect(")")
        return AtPre(name)

    def bare_identifier(self, keyword: str) -> str:
        tok = self.tok
        after = self.tokens[self.pos + 1] if tok.kind == "ident" else None
        if tok.kind != "ident" or after is None or after.text not in (")", ","):
            raise ExprError(f"only a variable is allowed as argument to {keyword}", tok.offset, "argument")
        self.advance()
        return tok.text


def parse_expression(
    text: str,
    fmt: ExprFormat | str = ExprFormat.C_EXPRESSION,
    context: Context | str = Context.INVARIANT,
) -> Expr:
    """Parse one witness clause.

    Raises:
        ExprError: on syntax errors and on ACSL constructs that the format or
            clause context does not permit.
    """
    fmt = ExprFormat(fmt)
    context = Context(context)
    tokens = list(tokenize(text))
    parser = ExprParser(tokens, fmt=fmt, context=context)
    if tokens[0].kind == "eof":
        raise ExprError("empty expression", 0)
    expr = parser.conditional()
    if parser.tok.kind != "eof":
        raise ExprError(f"unexpected {parser.tok.text!r} after expression", parser.tok.offset)
    return expr


# -- printer ----------------------------------------------------------------


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return BINARY_PREC[e.op]
    if isinstance(e, Cond):
        return COND_PREC
    if isinstance(e, Unary):
        return UNARY_PREC
    return PRIMARY_PREC


def print_expression(e: Expr, min_prec: int = COND_PREC) -> str:
    """Render ``e`` with the parentheses that precedence and associativity require."""
    if isinstance(e, Lit):
        text = str(e.value)
    elif isinstance(e, Var):
        text = e.name
    elif isinstance(e, ResultRef):
        text = "\\result"
    elif isinstance(e, OldOf):
        text = f"\\old({e.name})"
    elif isinstance(e, AtPre):
        text = f"\\at({e.name}, Pre)"
    elif isinstance(e, Call):
        text = f"{e.name}({', '.join(print_expression(a) for a in e.args)})"
    elif isinstance(e, Unary):
        inner = print_expression(e.operand, UNARY_PREC)
        if inner.startswith(e.op) and e.op == "-":
            inner = f"({inner})"
        text = e.op + inner
    elif isinstance(e, Binary):
        p = BINARY_PREC[e.op]
        text = f"{print_expression(e.left, p)} {e.op} {print_expression(e.right, p + 1)}"
    elif isinstance(e, Cond):
        text = (
            f"{print_expression(e.test, BINARY_PREC['||'])} ? "
            f"{print_expression(e.then, COND_PREC)} : {print_expression(e.other, COND_PREC)}"
        )
    else:
        raise TypeError(f"not an expression node: {e!r}")
    if _prec(e) < min_prec:
        return f"({text})"
    return text


# -- analysis ---------------------------------------------------------------


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Unary):
        yield from walk(e.operand)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Cond):
        yield from walk(e.test)
        yield from walk(e.then)
        yield from walk(e.other)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk(a)


def transform(e: Expr, fn: Callable[[Expr], Expr | None]) -> Expr:
    """Rebuild ``e`` bottom-up; ``fn`` returns a replacement node or ``None`` to keep it."""
    if isinstance(e, Unary):
        e = Unary(e.op, transform(e.operand, fn))
    elif isinstance(e, Binary):
        e = Binary(e.op, transform(e.left, fn), transform(e.right, fn))
    elif isinstance(e, Cond):
        e = Cond(transform(e.test, fn), transform(e.then, fn), transform(e.other, fn))
    elif isinstance(e, Call):
        e = Call(e.name, tuple(transform(a, fn) for a in e.args))
    out = fn(e)
    return e if out is None else out


def free_variables(e: Expr) -> frozenset[tuple[str | None, str]]:
    """``(name, kind)`` pairs with kind ``current``, ``pre`` or ``result``."""
    out: set[tuple[str | None, str]] = set()
    for node in walk(e):
        if isinstance(node, Var):
            out.add((node.name, "current"))
        elif isinstance(node, (OldOf, AtPre)):
            out.add((node.name, "pre"))
        elif isinstance(node, ResultRef):
            out.add((None, "result"))
    return frozenset(out)


def is_trivially_true(e: Expr) -> bool:
    return isinstance(e, Lit) and e.value != 0


# -- evaluation -------------------------------------------------------------


@dataclass(frozen=True)
class EvalEnv:
    current: Mapping[str, int]
    pre: Mapping[str, int] = field(default_factory=dict)
    result: int | None = None
    params: frozenset[str] = frozenset()


def _div(a: int, b: int) -> int:
    if b == 0:
        raise EvalFault("division by zero")
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def binary_op(op: str, a: int, b: int) -> int:
    """Non-short-circuit binary operators on 32-bit values."""
    if op == "+":
        return wrap32(a + b)
    if op == "-":
        return wrap32(a - b)
    if op == "*":
        return wrap32(a * b)
    if op == "/":
        return wrap32(_div(a, b))
    if op == "%":
        if b == 0:
            raise EvalFault("remainder by zero")
        return wrap32(a - _div(a, b) * b)
    if op in ("<<", ">>"):
        if not 0 <= b <= 31:
            raise EvalFault(f"shift count {b} out of range")
        return wrap32(a << b) if op == "<<" else a >> b
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "&":
        return wrap32(a & b)
    if op == "|":
        return wrap32(a | b)
    if op == "^":
        return wrap32(a ^ b)
    raise ValueError(f"unknown operator {op}")


def unary_op(op: str, a: int) -> int:
    if op == "-":
        return wrap32(-a)
    if op == "!":
        return int(a == 0)
    if op == "~":
        return wrap32(~a)
    raise ValueError(f"unknown operator {op}")


def evaluate(e: Expr, env: EvalEnv, context: Context | str = Context.INVARIANT) -> int:
    """Evaluate a witness clause.

    In ``ensures`` a parameter reads its value from before the call, just
    like ``\\old`` of it; globals read their current value.
    """
    context = Context(context)
    in_ensures = context is Context.ENSURES

    def lookup(table: Mapping[str, int], name: str, what: str) -> int:
        try:
            return table[name]
        except KeyError:
            raise EvalFault(f"unbound {what} {name}") from None

    def ev(node: Expr) -> int:
        if isinstance(node, Lit):
            return wrap32(node.value)
        if isinstance(node, Var):
            if in_ensures and node.name in env.params:
                return lookup(env.pre, node.name, "parameter")
            return lookup(env.current, node.name, "variable")
        if isinstance(node, Binary):
            if node.op == "&&":
                return int(ev(node.left) != 0 and ev(node.right) != 0)
            if node.op == "||":
                return int(ev(node.left) != 0 or ev(node.right) != 0)
            return binary_op(node.op, ev(node.left), ev(node.right))
        if isinstance(node, Unary):
            return unary_op(node.op, ev(node.operand))
        if isinstance(node, Cond):
            return ev(node.then) if ev(node.test) != 0 else ev(node.other)
        if isinstance(node, (OldOf, AtPre)):
            return lookup(env.pre, node.name, "pre-state value of")
        if isinstance(node, ResultRef):
            if env.result is None:
                raise EvalFault("\\result has no value at this return point")
            return env.result
        raise EvalFault(f"cannot evaluate {type(node).__name__} in a witness clause")

    return ev(e)
