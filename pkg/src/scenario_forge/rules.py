"""Arithmetic/comparison expression language for constraint rules.

Expressions are immutable trees built from :class:`Num`, :class:`Ref`,
:class:`BinOp`, :class:`Neg`, :class:`Call` and :class:`Compare`.  They
print to a canonical infix form and parse back to an identical tree, which
is what the rules file relies on.

Evaluation comes in two flavours: :func:`evaluate` works on plain floats and
raises ``ZeroDivisionError``; :func:`evaluate_array` works on numpy arrays
and is used by the samplers and solvers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterator, Mapping, Union

import numpy as np


@dataclass(frozen=True)
class ParamRef:
    obj: str
    name: str

    def __str__(self) -> str:
        return f"{self.obj}.{self.name}"

    @classmethod
    def parse(cls, path: str) -> "ParamRef":
        obj, sep, name = path.rpartition(".")
        if not sep or not obj or not name:
            raise ValueError(f"not a parameter path: {path!r}")
        return cls(obj, name)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ref:
    ref: ParamRef


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str  # abs, min, max
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Compare:
    op: str  # < <= = >= >
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Ref, Neg, BinOp, Call]
Node = Union[Expr, Compare]

COMPARATORS = ("<=", ">=", "<", ">", "=")
FUNCTIONS = {"abs": (1, 1), "min": (2, None), "max": (2, None)}
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


# -- construction helpers ---------------------------------------------------

def num(x: float) -> Num:
    return Num(float(x))


def ref(obj: str, name: str) -> Ref:
    return Ref(ParamRef(obj, name))


def _lift(x) -> Expr:
    if isinstance(x, (int, float)):
        return num(x)
    if isinstance(x, ParamRef):
        return Ref(x)
    return x


def add(a, b) -> Expr:
    return BinOp("+", _lift(a), _lift(b))


def sub(a, b) -> Expr:
    return BinOp("-", _lift(a), _lift(b))


def mul(a, b) -> Expr:
    return BinOp("*", _lift(a), _lift(b))


def div(a, b) -> Expr:
    return BinOp("/", _lift(a), _lift(b))


def neg(a) -> Expr:
    a = _lift(a)
    if isinstance(a, Num):
        return Num(-a.value)
    return Neg(a)


def call(fn: str, *args) -> Expr:
    lo, hi = FUNCTIONS[fn]
    if len(args) < lo or (hi is not None and len(args) > hi):
        raise ValueError(f"{fn} takes {lo}..{hi or 'n'} arguments, got {len(args)}")
    return Call(fn, tuple(_lift(a) for a in args))


def maximum(*args) -> Expr:
    """max() that degrades gracefully to its single argument."""
    if len(args) == 1:
        return _lift(args[0])
    return call("max", *args)


def minimum(*args) -> Expr:
    if len(args) == 1:
        return _lift(args[0])
    return call("min", *args)


def compare(op: str, a, b) -> Compare:
    if op not in COMPARATORS:
        raise ValueError(f"unknown comparator {op!r}")
    return Compare(op, _lift(a), _lift(b))


# -- traversal --------------------------------------------------------------

def walk(node: Node) -> Iterator[Node]:
    yield node
    if isinstance(node, (BinOp, Compare)):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Neg):
        yield from walk(node.operand)
    elif isinstance(node, Call):
        for a in node.args:
            yield from walk(a)


def references(node: Node) -> list[ParamRef]:
    """Parameter references in first-occurrence order, without duplicates."""
    seen: dict[ParamRef, None] = {}
    for n in walk(node):
        if isinstance(n, Ref):
            seen.setdefault(n.ref, None)
    return list(seen)


def substitute(node: Node, table: Mapping[ParamRef, Expr]) -> Node:
    if isinstance(node, Ref):
        return table.get(node.ref, node)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, table))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, table), substitute(node.right, table))
    if isinstance(node, Compare):
        return Compare(node.op, substitute(node.left, table), substitute(node.right, table))
    if isinstance(node, Call):
        return Call(node.fn, tuple(substitute(a, table) for a in node.args))
    raise TypeError(node)


# -- printing ---------------------------------------------------------------

def format_number(x: float) -> str:
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Num) and node.value < 0:
        return 3
    return 4


def to_infix(node: Node, scope: str | None = None) -> str:
    """Canonical infix text.  References into ``scope`` print unqualified."""

    def fmt(n: Node) -> str:
        if isinstance(n, Num):
            return format_number(n.value)
        if isinstance(n, Ref):
            if scope is not None and n.ref.obj == scope:
                return n.ref.name
            return str(n.ref)
        if isinstance(n, Neg):
            inner = fmt(n.operand)
            if _prec(n.operand) < 3:
                inner = f"({inner})"
            return f"-{inner}"
        if isinstance(n, Call):
            return f"{n.fn}({', '.join(fmt(a) for a in n.args)})"
        if isinstance(n, BinOp):
            p = _PREC[n.op]
            left, right = fmt(n.left), fmt(n.right)
            if _prec(n.left) < p:
                left = f"({left})"
            if _prec(n.right) <= p:
                right = f"({right})"
            return f"{left} {n.op} {right}"
        if isinstance(n, Compare):
            return f"{fmt(n.left)} {n.op} {fmt(n.right)}"
        raise TypeError(n)

    return fmt(node)


# -- parsing ----------------------------------------------------------------

class RuleSyntaxError(ValueError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)?)"
    r"|(?P<op><=|>=|[-+*/(),<>=]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise RuleSyntaxError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    out.append(("end", ""))
    return out


class _Parser:
    def __init__(self, text: str, scope: str | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.scope = scope

    def peek(self) -> tuple[str, str]:
        return self.toks[self.i]

    def take(self, value: str | None = None) -> tuple[str, str]:
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            raise RuleSyntaxError(f"expected {value!r}, got {tok[1]!r}")
        self.i += 1
        return tok

    def node(self) -> Node:
        left = self.expr()
        kind, val = self.peek()
        if kind == "op" and val in COMPARATORS:
            self.take()
            right = self.expr()
            node: Node = Compare(val, left, right)
        else:
            node = left
        if self.peek()[0] != "end":
            raise RuleSyntaxError(f"trailing input at {self.peek()[1]!r}")
        return node

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.peek() == ("op", "-"):
            self.take()
            return neg(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        kind, val = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek() == ("op", "(") and val in FUNCTIONS:
                self.take("(")
                args = [self.expr()]
                while self.peek() == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.take(")")
                try:
                    return call(val, *args)
                except ValueError as exc:
                    raise RuleSyntaxError(str(exc)) from None
            if "." in val:
                return Ref(ParamRef.parse(val))
            if self.scope is None:
                raise RuleSyntaxError(f"unqualified name {val!r} outside an object scope")
            return Ref(ParamRef(self.scope, val))
        if (kind, val) == ("op", "("):
            inner = self.expr()
            self.take(")")
            return inner
        raise RuleSyntaxError(f"unexpected token {val!r}")


def parse_infix(text: str, scope: str | None = None) -> Node:
    return _Parser(text, scope).node()


# -- evaluation -------------------------------------------------------------

def evaluate(node: Expr, values: Mapping[ParamRef, float]) -> float:
    """Scalar evaluation.  Missing references raise ``KeyError``."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Ref):
        return float(values[node.ref])
    if isinstance(node, Neg):
        return -evaluate(node.operand, values)
    if isinstance(node, BinOp):
        a = evaluate(node.left, values)
        b = evaluate(node.right, values)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0.0:
            raise ZeroDivisionError(f"division by zero in {to_infix(node)}")
        return a / b
    if isinstance(node, Call):
        args = [evaluate(a, values) for a in node.args]
        if node.fn == "abs":
            return abs(args[0])
        return min(args) if node.fn == "min" else max(args)
    raise TypeError(node)


def compile_array(node: Expr) -> Callable[[Mapping[ParamRef, np.ndarray]], np.ndarray]:
    """Compile an expression into a closure over numpy arrays.

    Division by zero yields ``inf``/``nan`` instead of raising; callers treat
    non-finite results as violations.
    """
    if isinstance(node, Num):
        v = node.value
        return lambda env: v
    if isinstance(node, Ref):
        r = node.ref
        return lambda env: env[r]
    if isinstance(node, Neg):
        f = compile_array(node.operand)
        return lambda env: -f(env)
    if isinstance(node, BinOp):
        fa, fb = compile_array(node.left), compile_array(node.right)
        if node.op == "+":
            return lambda env: fa(env) + fb(env)
        if node.op == "-":
            return lambda env: fa(env) - fb(env)
        if node.op == "*":
            return lambda env: fa(env) * fb(env)
        return lambda env: np.divide(fa(env), fb(env))
    if isinstance(node, Call):
        fs = [compile_array(a) for a in node.args]
        if node.fn == "abs":
            f0 = fs[0]
            return lambda env: np.abs(f0(env))
        ufunc = np.minimum if node.fn == "min" else np.maximum
        return lambda env: reduce(ufunc, (f(env) for f in fs))
    raise TypeError(node)


def evaluate_array(node: Expr, env: Mapping[ParamRef, np.ndarray]) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return compile_array(node)(env)
