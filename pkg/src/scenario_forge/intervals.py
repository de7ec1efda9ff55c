"""Outward-rounded interval arithmetic over rule expressions.

Used for three jobs that must not depend on sampling: proving a rule always
holds over a parameter box, bounding the feasible projection of each
parameter (HC4-style contraction plus shaving), and bounding partial
derivatives for Lipschitz estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .rules import BinOp, Call, Compare, Expr, Neg, Num, ParamRef, Ref

INF = math.inf


def _down(x: float) -> float:
    return math.nextafter(x, -INF) if math.isfinite(x) else x


def _up(x: float) -> float:
    return math.nextafter(x, INF) if math.isfinite(x) else x


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @property
    def empty(self) -> bool:
        return not self.lo <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def __and__(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, o: "Interval") -> "Interval":
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    def __sub__(self, o: "Interval") -> "Interval":
        return Interval(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __mul__(self, o: "Interval") -> "Interval":
        ps = [_mul(a, b) for a in (self.lo, self.hi) for b in (o.lo, o.hi)]
        return Interval(_down(min(ps)), _up(max(ps)))

    def __truediv__(self, o: "Interval") -> "Interval":
        if o.contains_zero():
            if o.lo == 0.0 and o.hi > 0.0:
                return self * Interval(1.0 / o.hi, INF)
            if o.hi == 0.0 and o.lo < 0.0:
                return self * Interval(-INF, 1.0 / o.lo)
            return Interval(-INF, INF)
        return self * Interval(_down(1.0 / o.hi), _up(1.0 / o.lo))

    def __abs__(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def sqr(self) -> "Interval":
        a = abs(self)
        return a * a


def _mul(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0  # 0 * inf treated as 0 for bounds
    return a * b


ENTIRE = Interval(-INF, INF)
Box = Mapping[ParamRef, Interval]


def evaluate(expr: Expr, box: Box) -> Interval:
    if isinstance(expr, Num):
        return Interval.point(expr.value)
    if isinstance(expr, Ref):
        return box[expr.ref]
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, box)
    if isinstance(expr, BinOp):
        if expr.op == "*" and expr.left == expr.right:
            return evaluate(expr.left, box).sqr()
        a, b = evaluate(expr.left, box), evaluate(expr.right, box)
        return {"+": a.__add__, "-": a.__sub__, "*": a.__mul__, "/": a.__truediv__}[expr.op](b)
    if isinstance(expr, Call):
        args = [evaluate(a, box) for a in expr.args]
        if expr.fn == "abs":
            return abs(args[0])
        if expr.fn == "min":
            return Interval(min(a.lo for a in args), min(a.hi for a in args))
        return Interval(max(a.lo for a in args), max(a.hi for a in args))
    raise TypeError(expr)


def residual(cmp: Compare, box: Box) -> Interval:
    """Interval of the signed margin of a comparison (positive = satisfied)."""
    lhs, rhs = evaluate(cmp.left, box), evaluate(cmp.right, box)
    if cmp.op in (">", ">="):
        return lhs - rhs
    if cmp.op in ("<", "<="):
        return rhs - lhs
    d = lhs - rhs
    return -abs(d)


def always_holds(cmp: Compare, box: Box) -> bool:
    r = residual(cmp, box)
    if cmp.op in (">", "<"):
        return r.lo > 0
    if cmp.op == "=":
        return r.lo == 0 == r.hi
    return r.lo >= 0


# -- HC4 contraction ----------------------------------------------------------

class _Node:
    __slots__ = ("expr", "val", "kids")

    def __init__(self, expr, val, kids):
        self.expr, self.val, self.kids = expr, val, kids


def _forward(expr: Expr, box: Box) -> _Node:
    if isinstance(expr, Num):
        return _Node(expr, Interval.point(expr.value), ())
    if isinstance(expr, Ref):
        return _Node(expr, box[expr.ref], ())
    if isinstance(expr, Neg):
        k = _forward(expr.operand, box)
        return _Node(expr, -k.val, (k,))
    if isinstance(expr, BinOp):
        a, b = _forward(expr.left, box), _forward(expr.right, box)
        if expr.op == "*" and expr.left == expr.right:
            val = a.val.sqr()
        else:
            val = {"+": a.val.__add__, "-": a.val.__sub__,
                   "*": a.val.__mul__, "/": a.val.__truediv__}[expr.op](b.val)
        return _Node(expr, val, (a, b))
    if isinstance(expr, Call):
        kids = tuple(_forward(a, box) for a in expr.args)
        if expr.fn == "abs":
            val = abs(kids[0].val)
        elif expr.fn == "min":
            val = Interval(min(k.val.lo for k in kids), min(k.val.hi for k in kids))
        else:
            val = Interval(max(k.val.lo for k in kids), max(k.val.hi for k in kids))
        return _Node(expr, val, kids)
    raise TypeError(expr)


class _Empty(Exception):
    pass


def _narrow(node: _Node, target: Interval, box: dict) -> None:
    new = node.val & target
    if new.empty:
        raise _Empty
    node.val = new
    e = node.expr
    if isinstance(e, Num):
        return
    if isinstance(e, Ref):
        cur = box[e.ref] & new
        if cur.empty:
            raise _Empty
        box[e.ref] = cur
        return
    if isinstance(e, Neg):
        _narrow(node.kids[0], -new, box)
        return
    if isinstance(e, BinOp):
        a, b = node.kids
        if e.op == "+":
            _narrow(a, new - b.val, box)
            _narrow(b, new - a.val, box)
        elif e.op == "-":
            _narrow(a, new + b.val, box)
            _narrow(b, a.val - new, box)
        elif e.op == "*":
            if e.left == e.right:
                r = Interval(0.0, _up(math.sqrt(new.hi))) if new.hi < INF else Interval(0.0, INF)
                _narrow(a, Interval(-r.hi, r.hi), box)
            else:
                if not b.val.contains_zero():
                    _narrow(a, new / b.val, box)
                if not a.val.contains_zero():
                    _narrow(b, new / a.val, box)
        else:
            _narrow(a, new * b.val, box)
            if not new.contains_zero():
                _narrow(b, a.val / new, box)
        return
    if isinstance(e, Call):
        if e.fn == "abs":
            k = node.kids[0]
            h = new.hi
            if k.val.lo >= 0:
                _narrow(k, new, box)
            elif k.val.hi <= 0:
                _narrow(k, -new, box)
            else:
                _narrow(k, Interval(-h, h), box)
        elif e.fn == "min":
            for k in node.kids:
                _narrow(k, Interval(new.lo, INF), box)
        else:
            for k in node.kids:
                _narrow(k, Interval(-INF, new.hi), box)
        return
    raise TypeError(e)


def revise(cmp: Compare, box: dict) -> bool:
    """Narrow ``box`` in place using one comparison; False if proven empty."""
    try:
        lhs, rhs = _forward(cmp.left, box), _forward(cmp.right, box)
        if cmp.op in (">", ">="):
            _narrow(lhs, Interval(rhs.val.lo, INF), box)
            _narrow(rhs, Interval(-INF, lhs.val.hi), box)
        elif cmp.op in ("<", "<="):
            _narrow(lhs, Interval(-INF, rhs.val.hi), box)
            _narrow(rhs, Interval(lhs.val.lo, INF), box)
        else:
            both = lhs.val & rhs.val
            _narrow(lhs, both, box)
            _narrow(rhs, both, box)
    except _Empty:
        return False
    return True


def contract(constraints: Iterable[Compare], box: Box, rounds: int = 30,
             tol: float = 1e-9) -> dict | None:
    """Fixpoint of HC4 revisions; ``None`` when the box holds no solution."""
    cur = dict(box)
    cons = list(constraints)
    for _ in range(rounds):
        before = {k: (v.lo, v.hi) for k, v in cur.items()}
        for c in cons:
            if not revise(c, cur):
                return None
        moved = any(
            abs(cur[k].lo - lo) > tol * max(1.0, abs(lo)) or abs(cur[k].hi - hi) > tol * max(1.0, abs(hi))
            for k, (lo, hi) in before.items())
        if not moved:
            break
    return cur


def provably_empty(constraints: list[Compare], box: Box, depth: int = 6,
                   split: Iterable[ParamRef] | None = None) -> bool:
    """Contraction plus bounded bisection over the ``split`` variables."""
    cur = contract(constraints, box)
    if cur is None:
        return True
    if depth <= 0:
        return False
    cands = [k for k in (split if split is not None else cur) if cur[k].width > 0]
    if not cands:
        return False
    widths = {k: cur[k].width / max(box[k].width, 1e-300) for k in cands}
    k = max(cands, key=lambda r: (widths[r], str(r)))
    if widths[k] < 1e-6:
        return False
    iv = cur[k]
    mid = 0.5 * (iv.lo + iv.hi)
    for half in (Interval(iv.lo, mid), Interval(mid, iv.hi)):
        sub = dict(cur)
        sub[k] = half
        if not provably_empty(constraints, sub, depth - 1, split):
            return False
    return True


def shave(constraints: list[Compare], box: Box, var: ParamRef, depth: int = 6,
          split: Iterable[ParamRef] | None = None, rel_tol: float = 1e-4) -> Interval | None:
    """Outer bounds of the feasible projection onto ``var``."""
    if provably_empty(constraints, box, depth, split):
        return None
    lo, hi = box[var].lo, box[var].hi
    tol = rel_tol * max(hi - lo, 1e-12)

    def empty_slice(a, b):
        sub = dict(box)
        sub[var] = Interval(a, b)
        return provably_empty(constraints, sub, depth, split)

    # largest t with [lo, t] empty
    a, b = lo, hi
    if empty_slice(lo, lo):
        while b - a > tol:
            m = 0.5 * (a + b)
            if empty_slice(lo, m):
                a = m
            else:
                b = m
        new_lo = a
    else:
        new_lo = lo
    a, b = new_lo, hi
    if empty_slice(hi, hi):
        while b - a > tol:
            m = 0.5 * (a + b)
            if empty_slice(m, hi):
                b = m
            else:
                a = m
        new_hi = b
    else:
        new_hi = hi
    return Interval(new_lo, new_hi)


# -- derivatives --------------------------------------------------------------

def derivative(expr: Expr, box: Box, wrt: ParamRef) -> tuple[Interval, Interval]:
    """Forward-mode interval AD: (value, d value / d wrt) over the box."""
    if isinstance(expr, Num):
        return Interval.point(expr.value), Interval.point(0.0)
    if isinstance(expr, Ref):
        return box[expr.ref], Interval.point(1.0 if expr.ref == wrt else 0.0)
    if isinstance(expr, Neg):
        v, d = derivative(expr.operand, box, wrt)
        return -v, -d
    if isinstance(expr, BinOp):
        a, da = derivative(expr.left, box, wrt)
        b, db = derivative(expr.right, box, wrt)
        if expr.op == "+":
            return a + b, da + db
        if expr.op == "-":
            return a - b, da - db
        if expr.op == "*":
            return a * b, da * b + a * db
        q = a / b
        return q, (da * b - a * db) / b.sqr()
    if isinstance(expr, Call):
        parts = [derivative(x, box, wrt) for x in expr.args]
        if expr.fn == "abs":
            v, d = parts[0]
            if v.lo > 0:
                return abs(v), d
            if v.hi < 0:
                return abs(v), -d
            return abs(v), d * Interval(-1.0, 1.0)
        val = evaluate(expr, box)
        # any argument whose range can reach the extremum contributes
        if expr.fn == "max":
            live = [p for p in parts if p[0].hi >= val.lo]
        else:
            live = [p for p in parts if p[0].lo <= val.hi]
        d = live[0][1]
        for p in live[1:]:
            d = d.hull(p[1])
        return val, d
    raise TypeError(expr)


def lipschitz(cmp: Compare, box: Box, wrt: ParamRef) -> float:
    """Upper bound of |d residual / d wrt| over the box."""
    diff = BinOp("-", cmp.left, cmp.right)
    _, d = derivative(diff, box, wrt)
    return max(abs(d.lo), abs(d.hi))
