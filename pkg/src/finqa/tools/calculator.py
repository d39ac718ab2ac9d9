"""Safe arithmetic evaluator: lexer + recursive-descent parser over Decimal.

Grammar (precedence low to high):

    expr    := term  (("+" | "-") term)*
    term    := unary (("*" | "/" | "x" | "./.") unary)*     # ascii or unicode
    unary   := "-" unary | power
    power   := postfix ("^" unary)?                          # right-associative
    postfix := atom "%"*
    atom    := NUMBER | "(" expr ")"

Exponentiation binds tighter than unary minus ("-2^2" is -4), "x%" means
x/100, and evaluation runs at 28 significant digits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, DivisionByZero, InvalidOperation, getcontext, localcontext

PRECISION = 28


class CalcError(ValueError):
    """Syntax or domain error, annotated with a source position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_NUMBER_RE = re.compile(r"\d+(?:\.\d*)?|\.\d+")


@dataclass(frozen=True)
class Token:
    kind: str  # number | op | lparen | rparen | end
    value: str
    pos: int


_OPS = {"+": "+", "-": "-", "−": "-", "*": "*", "×": "*", "/": "/", "÷": "/",
        "^": "^", "%": "%"}


def _lex(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    while i < len(source):
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            m = _NUMBER_RE.match(source, i)
            if not m or m.group() == ".":
                raise CalcError(f"bad number {ch!r}", i)
            tokens.append(Token("number", m.group(), i))
            i = m.end()
        elif ch in _OPS:
            tokens.append(Token("op", _OPS[ch], i))
            i += 1
        elif ch == "(":
            tokens.append(Token("lparen", ch, i))
            i += 1
        elif ch == ")":
            tokens.append(Token("rparen", ch, i))
            i += 1
        else:
            raise CalcError(f"unexpected character {ch!r}", i)
    tokens.append(Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        if self.cur.kind != kind:
            raise CalcError(f"expected {kind}, found {self.cur.value or 'end of input'!r}",
                            self.cur.pos)
        return self.advance()

    def parse(self) -> Decimal:
        value = self.expr()
        if self.cur.kind != "end":
            raise CalcError(f"trailing input {self.cur.value!r}", self.cur.pos)
        return value

    def expr(self) -> Decimal:
        value = self.term()
        while self.cur.kind == "op" and self.cur.value in "+-":
            op = self.advance().value
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> Decimal:
        value = self.unary()
        while self.cur.kind == "op" and self.cur.value in "*/":
            op = self.advance()
            rhs = self.unary()
            if op.value == "/":
                if rhs == 0:
                    raise CalcError("division by zero", op.pos)
                value = value / rhs
            else:
                value = value * rhs
        return value

    def unary(self) -> Decimal:
        if self.cur.kind == "op" and self.cur.value == "-":
            self.advance()
            return -self.unary()
        return self.power()

    def power(self) -> Decimal:
        base = self.postfix()
        if self.cur.kind == "op" and self.cur.value == "^":
            op = self.advance()
            exponent = self.unary()
            if exponent == 0:
                return Decimal(1)
            if base == 0 and exponent < 0:
                raise CalcError("zero raised to a negative power", op.pos)
            if base < 0 and exponent != exponent.to_integral_value():
                raise CalcError("negative base with non-integer exponent", op.pos)
            try:
                return base**exponent
            except (InvalidOperation, DivisionByZero, OverflowError) as e:
                raise CalcError(f"power out of range: {e}", op.pos) from e
        return base

    def postfix(self) -> Decimal:
        value = self.atom()
        while self.cur.kind == "op" and self.cur.value == "%":
            self.advance()
            value = value / Decimal(100)
        return value

    def atom(self) -> Decimal:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            return Decimal(tok.value)
        if tok.kind == "lparen":
            self.advance()
            value = self.expr()
            self.expect("rparen")
            return value
        raise CalcError(f"expected a number or '(', found {tok.value or 'end of input'!r}",
                        tok.pos)


def calculator_eval(expr: str) -> Decimal:
    """Evaluate an arithmetic expression at 28 significant digits."""
    if not expr.strip():
        raise CalcError("empty expression", 0)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        return _Parser(_lex(expr)).parse()


def format_result(value: Decimal) -> str:
    """Render without exponent notation or trailing zeros where possible."""
    value = value.normalize()
    sign, digits, exponent = value.as_tuple()
    if -PRECISION < exponent <= 0:
        return str(value.quantize(Decimal(1)) if exponent == 0 else value)
    if 0 < exponent < 6:
        return str(value.quantize(Decimal(1)))
    return str(value)
