"""Recursive-descent parser for the expression language.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = atom [ "^" int ] ;
    int     = [ "-" | "+" ] INTEGER | "(" int ")" ;
    atom    = NUMBER | "x" | "pi" | PARAM
            | FUNC "(" expr ")"
            | "shift" "(" expr "," [ "-" | "+" ] NUMBER ")"
            | "(" expr ")" ;
    FUNC    = "sin" | "cos" | "exp" | "sqrt" ;

``-`` directly followed by a number literal (and not by ``^``) is folded into
a negative constant.  ``sqrt`` only accepts ``x``-free arguments.  Parameter
names (``eps`` by default) stay symbolic until bound.
"""
from __future__ import annotations

import math
import re

from ..errors import ExpressionSyntaxError
from .expr import (
    FUNCTIONS,
    Add,
    Const,
    Div,
    Expression,
    Func,
    Mul,
    Neg,
    Param,
    Pow,
    Shift,
    Sub,
    Var,
)

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

DEFAULT_PARAMS = ("eps",)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos, text=text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, params):
        self.text = text
        self.params = frozenset(params)
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def peek(self, offset=1):
        j = min(self.i + offset, len(self.tokens) - 1)
        return self.tokens[j]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, message, expected):
        raise ExpressionSyntaxError(message, self.tok[2], expected, text=self.text)

    def expect_op(self, op):
        kind, value, _ = self.tok
        if kind != "op" or value != op:
            self.error(f"unexpected {value or 'end of input'!r}", [repr(op)])
        self.advance()

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.error(f"unexpected {self.tok[1]!r}", ["operator", "end of input"])
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        kind, value, _ = self.tok
        if kind == "op" and value in "+-":
            nxt = self.peek()
            after = self.peek(2)
            if value == "-" and nxt[0] == "number" and not (after[0] == "op" and after[1] == "^"):
                self.advance()
                return Const(-self.number(self.advance()))
            self.advance()
            arg = self.unary()
            return Neg(arg) if value == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return Pow(base, self.signed_int())
        return base

    def signed_int(self):
        if self.tok[0] == "op" and self.tok[1] == "(":
            self.advance()
            value = self.signed_int()
            self.expect_op(")")
            return value
        sign = 1
        if self.tok[0] == "op" and self.tok[1] in "+-":
            sign = -1 if self.advance()[1] == "-" else 1
        kind, value, _ = self.tok
        if kind != "number" or not value.isdigit():
            self.error("power exponent must be an integer literal", ["integer"])
        self.advance()
        return sign * int(value)

    def number(self, token):
        value = float(token[1])
        if not math.isfinite(value):
            raise ExpressionSyntaxError("number out of range", token[2], text=self.text)
        return value

    def atom(self):
        kind, value, pos = self.tok
        if kind == "number":
            self.advance()
            return Const(self.number((kind, value, pos)))
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "name":
            self.advance()
            if value == "x":
                return Var()
            if value == "pi":
                return Const(math.pi)
            if value in FUNCTIONS:
                self.expect_op("(")
                arg_pos = self.tok[2]
                arg = self.expr()
                self.expect_op(")")
                if value == "sqrt" and arg.has_var:
                    raise ExpressionSyntaxError(
                        "sqrt requires a constant argument", arg_pos, ["constant"], text=self.text
                    )
                return Func(value, arg)
            if value == "shift":
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(",")
                sign = 1.0
                if self.tok[0] == "op" and self.tok[1] in "+-":
                    sign = -1.0 if self.advance()[1] == "-" else 1.0
                if self.tok[0] != "number":
                    self.error("shift amount must be a number", ["number"])
                omega = sign * self.number(self.advance())
                self.expect_op(")")
                return Shift(arg, omega)
            if value in self.params:
                return Param(value)
            raise ExpressionSyntaxError(
                f"unknown name {value!r}",
                pos,
                ["x", "pi", *FUNCTIONS, "shift", *sorted(self.params)],
                text=self.text,
            )
        self.error(
            f"unexpected {value or 'end of input'!r}",
            ["number", "x", "pi", "function", "'('", "'-'"],
        )


def parse(text: str, params=DEFAULT_PARAMS) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises
    ------
    ExpressionSyntaxError
        With the offending offset and the set of acceptable tokens.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text, params).parse()
