"""Small arithmetic-expression language for user-supplied coefficient and
mating functions in config files.

Grammar (left-associative, IEEE double semantics):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | primary
    primary := NUMBER | VARIABLE | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

Functions: ``min``, ``max`` (two arguments), ``sqrt`` (one).  Evaluation is
vectorized: variables may be bound to floats or numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = ["Expr", "Num", "Var", "BinOp", "Neg", "Call",
           "ExprSyntaxError", "ExprEvalError", "parse", "evaluate", "to_source"]

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                       r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
                       r"|(?P<op>[-+*/(),]))")

_FUNCTIONS = {"min": 2, "max": 2, "sqrt": 1}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class ExprEvalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Expr:
    span: tuple[int, int]


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    child: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}",
                                  len(text) - len(stripped))
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", pos)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                node = BinOp((node.span[0], rhs.span[1]), val, node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                rhs = self.unary()
                node = BinOp((node.span[0], rhs.span[1]), val, node, rhs)
            else:
                return node

    def unary(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            child = self.unary()
            return Neg((pos, child.span[1]), child)
        return self.primary()

    def primary(self) -> Expr:
        kind, val, pos = self.advance()
        if kind == "num":
            return Num((pos, pos + len(val)), float(val))
        if kind == "ident":
            nkind, nval, _ = self.peek()
            if nkind == "op" and nval == "(":
                if val not in _FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", pos)
                self.advance()
                args = [self.expr()]
                while True:
                    k2, v2, p2 = self.peek()
                    if k2 == "op" and v2 == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                _, _, endpos = self.expect_op(")")
                if len(args) != _FUNCTIONS[val]:
                    raise ExprSyntaxError(
                        f"{val} takes {_FUNCTIONS[val]} argument(s), got {len(args)}", pos)
                return Call((pos, endpos + 1), val, tuple(args))
            return Var((pos, pos + len(val)), val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(f"expected a value, got {val!r}" if val else "unexpected end of input",
                              pos)


def parse(text: str) -> Expr:
    """Parse an expression, raising :class:`ExprSyntaxError` with the offset
    of the offending token on malformed input."""
    return _Parser(text).parse()


def evaluate(node: Expr, **env):
    """Evaluate an AST with variables bound by keyword (floats or arrays)."""
    try:
        with np.errstate(divide="raise", invalid="raise"):
            return _eval(node, env)
    except FloatingPointError as exc:
        raise ExprEvalError(f"arithmetic error: {exc}") from exc
    except ZeroDivisionError as exc:
        raise ExprEvalError("division by zero") from exc


def _eval(node: Expr, env: dict):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name not in env:
            raise ExprEvalError(f"unbound variable {node.name!r}")
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.child, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        if node.name == "min":
            return np.minimum(args[0], args[1])
        if node.name == "max":
            return np.maximum(args[0], args[1])
        return np.sqrt(args[0])
    raise TypeError(f"not an Expr node: {node!r}")


def to_source(node: Expr) -> str:
    """Fully parenthesized canonical form; parse(to_source(e)) has the same
    structure as e."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.child)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an Expr node: {node!r}")
