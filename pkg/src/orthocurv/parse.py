"""Recursive-descent parser for the expression grammar.

Precedence, tightest first::

    ^  (right-associative, exponent must reduce to a rational constant)
    unary -
    *  /
    +  -

Identifiers must be declared as coordinates or parameters; the only callable
names are the functions in :data:`orthocurv.expr.FUNCTIONS` plus ``sqrt``.
Numeric literals are decimal integers or decimals and are read exactly.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

from .expr import FUNCTIONS, Const, Expr, Symbol, add, div, func, mul, neg, power, sub

__all__ = ["ParseError", "UnknownSymbolError", "parse"]

CALLABLES = frozenset(FUNCTIONS) | {"sqrt"}

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownSymbolError(ParseError):
    def __init__(self, name: str, position: int, text: str = ""):
        self.name = name
        super().__init__(f"undeclared identifier {name!r}", position, text)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else m.end()
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), start))
        elif m.group(2) is not None:
            tokens.append(("id", m.group(2), start))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^(),":
                raise ParseError(f"unexpected character {ch!r}", start, text)
            tokens.append(("op", ch, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, symbols: dict[str, Symbol]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.text)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos, self.text)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                if rhs.is_zero:
                    raise ParseError("division by zero", self.peek()[2], self.text)
                e = div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return neg(self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.pow()

    def pow(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            pos = self.take()[2]
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ParseError("exponent must be a rational constant", pos, self.text)
            try:
                return power(base, exponent.value)
            except ZeroDivisionError:
                raise ParseError("zero raised to a negative power", pos, self.text) from None
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "id":
            if self.peek()[:2] == ("op", "("):
                if val not in CALLABLES:
                    raise ParseError(f"unknown function {val!r}", pos, self.text)
                self.take()
                arg = self.expr()
                self.expect(")")
                return func(val, arg)
            if val in CALLABLES:
                raise ParseError(f"function {val!r} used without argument", pos, self.text)
            try:
                return self.symbols[val]
            except KeyError:
                raise UnknownSymbolError(val, pos, self.text) from None
        if (kind, val) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", pos, self.text)


def parse(text: str, coords: Iterable[str | Symbol] = (),
          params: Iterable[str | Symbol] = ()) -> Expr:
    """Parse ``text`` into a canonical :class:`Expr`.

    ``coords`` and ``params`` declare the identifiers that may appear; a name
    may not be declared twice or shadow a function name.
    """
    symbols: dict[str, Symbol] = {}
    for role, names in (("coord", coords), ("param", params)):
        for n in names:
            s = n if isinstance(n, Symbol) else Symbol(n, role)
            if s.name in CALLABLES:
                raise ValueError(f"symbol name {s.name!r} clashes with a function")
            if s.name in symbols:
                raise ValueError(f"symbol {s.name!r} declared twice")
            symbols[s.name] = s
    return _Parser(text, symbols).parse()
