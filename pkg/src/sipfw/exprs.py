"""Minimal arithmetic expression grammar for nodewise initial conditions.

Supported: + - * /, unary minus, parentheses, the functions cos, sin, exp,
abs, max(a, b), numeric literals, the constant pi, and the coordinates
x1..x3. Deliberately not a general-purpose language.
"""

from __future__ import annotations

import math
import re

import numpy as np

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/(),]))"
)

_FUNCTIONS = {
    "cos": (np.cos, 1),
    "sin": (np.sin, 1),
    "exp": (np.exp, 1),
    "abs": (np.abs, 1),
    "max": (np.maximum, 2),
}

_CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    """Malformed expression."""


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            if text[pos:].strip() == "":
                break
            raise ExprError(f"unexpected character {text[pos:].strip()[0]!r} at position {pos}")
        if match.group("num") is not None:
            tokens.append(("num", float(match.group(0))))
        elif match.group("name") is not None:
            tokens.append(("name", match.group("name")))
        else:
            tokens.append(("op", match.group("op")))
        pos = match.end()
    tokens.append(("end", None))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ExprError(f"expected {value or kind} in {self.text!r}, got {tok[1]!r}")
        if value is not None and tok[1] != value:
            raise ExprError(f"expected {value!r} in {self.text!r}, got {tok[1]!r}")
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise ExprError(f"trailing input after expression in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = (np.add if op == "+" else np.subtract, node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            rhs = self.factor()
            node = (np.multiply if op == "*" else np.divide, node, rhs)
        return node

    def factor(self):
        if self.peek() == ("op", "-"):
            self.take()
            return (np.negative, self.factor())
        return self.atom()

    def atom(self):
        kind, value = self.peek()
        if kind == "num":
            self.take()
            return ("const", value)
        if kind == "name":
            self.take()
            if value in _CONSTANTS:
                return ("const", _CONSTANTS[value])
            if value in _FUNCTIONS:
                func, arity = _FUNCTIONS[value]
                self.take("op", "(")
                args = [self.expr()]
                while self.peek() == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.take("op", ")")
                if len(args) != arity:
                    raise ExprError(f"{value} takes {arity} argument(s), got {len(args)}")
                return (func, *args)
            if re.fullmatch(r"x[123]", value):
                return ("var", int(value[1]) - 1)
            raise ExprError(f"unknown name {value!r} in {self.text!r}")
        if (kind, value) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        raise ExprError(f"unexpected token {value!r} in {self.text!r}")


def _evaluate(node, points: np.ndarray):
    head = node[0]
    if head == "const":
        return node[1]
    if head == "var":
        axis = node[1]
        if axis >= points.shape[1]:
            raise ExprError(f"coordinate x{axis + 1} not available in dimension {points.shape[1]}")
        return points[:, axis]
    args = [_evaluate(child, points) for child in node[1:]]
    return head(*args)


def compile_expression(text: str):
    """Parse `text` once and return a vectorized callable of (N, d) points."""
    tree = _Parser(text).parse()

    def evaluate(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        result = _evaluate(tree, points)
        return np.broadcast_to(np.asarray(result, dtype=float), (points.shape[0],)).copy()

    return evaluate
