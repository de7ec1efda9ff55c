"""Constraint-annotated parameter space: objects, parameters, relations, rules."""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .rules import (
    Compare,
    Expr,
    ParamRef,
    Ref,
    evaluate,
    references,
    substitute,
    to_infix,
)

UNITS = ("m", "m/s", "m/s^2", "s", "rad", "1")
REL_TOL = 1e-9


class Layer(enum.IntEnum):
    ROAD = 1
    INFRASTRUCTURE = 2
    TEMPORARY = 3
    OBJECTS = 4
    ENVIRONMENT = 5

    @property
    def label(self) -> str:
        return f"L{int(self)}"


class ObjectKind(str, enum.Enum):
    ROAD_SECTION = "road_section"
    ALIGNMENT = "alignment"
    ELEVATION = "elevation"
    LANE = "lane"
    SIGNAL = "signal"
    GUARD_RAIL = "guard_rail"
    VEHICLE = "vehicle"
    MANEUVER_EVENT = "maneuver_event"
    ENVIRONMENT = "environment"


class RelationKind(str, enum.Enum):
    ARRANGEMENT = "arrangement"
    OBJECT_DEPENDENCY = "object_dependency"
    PARAMETER_DEPENDENCY = "parameter_dependency"


class SpaceError(ValueError):
    pass


class CycleError(SpaceError):
    def __init__(self, rule_ids: Sequence[str]):
        self.rule_ids = list(rule_ids)
        super().__init__(f"define rules form a cycle: {', '.join(self.rule_ids)}")


@dataclass(frozen=True)
class Parameter:
    name: str
    unit: str
    lo: float | None = None
    hi: float | None = None
    values: tuple[float, ...] | None = None
    derived_by: str | None = None
    default: float | None = None

    def __post_init__(self):
        if self.unit not in UNITS:
            raise SpaceError(f"unknown unit {self.unit!r} for {self.name}")
        if self.values is None:
            if self.lo is None or self.hi is None or not self.lo <= self.hi:
                raise SpaceError(f"bad range [{self.lo}, {self.hi}] for {self.name}")
        elif not self.values:
            raise SpaceError(f"empty value set for {self.name}")

    @property
    def value_kind(self) -> str:
        return "derived" if self.derived_by else "free"

    @property
    def is_set(self) -> bool:
        return self.values is not None

    @property
    def bounds(self) -> tuple[float, float]:
        if self.values is not None:
            return min(self.values), max(self.values)
        return self.lo, self.hi

    @property
    def width(self) -> float:
        lo, hi = self.bounds
        return hi - lo

    def contains(self, x: float) -> bool:
        if self.values is not None:
            return x in self.values
        return self.lo <= x <= self.hi


def interval(name, unit, lo, hi, **kw) -> Parameter:
    return Parameter(name, unit, lo=float(lo), hi=float(hi), **kw)


def fixed(name, unit, *values) -> Parameter:
    return Parameter(name, unit, values=tuple(float(v) for v in values))


@dataclass(frozen=True)
class ObjectNode:
    id: str
    kind: ObjectKind
    layer: Layer
    parameters: tuple[Parameter, ...] = ()
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.parameters]
        if len(names) != len(set(names)):
            raise SpaceError(f"duplicate parameter names in {self.id}")

    def param(self, name: str) -> Parameter:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(f"{self.id}.{name}")

    def ref(self, name: str) -> ParamRef:
        self.param(name)
        return ParamRef(self.id, name)


@dataclass(frozen=True)
class ConstraintRule:
    """A check rule (any comparison) or a define rule (``target = expr``)."""

    id: str
    role: str  # "check" | "define"
    expr: Compare
    relation: RelationKind = RelationKind.OBJECT_DEPENDENCY
    scope_object: str | None = None  # set for parameter dependencies

    def __post_init__(self):
        if self.role not in ("check", "define"):
            raise SpaceError(f"bad role {self.role!r}")
        if self.role == "define" and not (self.expr.op == "=" and isinstance(self.expr.left, Ref)):
            raise SpaceError(f"define rule {self.id} must read 'target = expression'")

    @property
    def scope(self) -> list[ParamRef]:
        return references(self.expr)

    @property
    def target(self) -> ParamRef | None:
        return self.expr.left.ref if self.role == "define" else None

    @property
    def inputs(self) -> list[ParamRef]:
        if self.role == "define":
            return references(self.expr.right)
        return self.scope

    def infix(self) -> str:
        return to_infix(self.expr, self.scope_object)


@dataclass(frozen=True)
class Relation:
    kind: RelationKind
    endpoints: tuple[str, ...]
    label: str | None = None
    rule: str | None = None  # rule id for dependency relations

    def __post_init__(self):
        if self.kind is RelationKind.ARRANGEMENT:
            if self.rule is not None or not self.label:
                raise SpaceError("arrangement relations carry a label and no rule")
        else:
            if self.rule is None:
                raise SpaceError("dependency relations carry exactly one rule")
            if self.kind is RelationKind.PARAMETER_DEPENDENCY and len(set(self.endpoints)) != 1:
                raise SpaceError("parameter dependencies reference a single object")


@dataclass(frozen=True)
class ParameterSpace:
    name: str
    objects: Mapping[str, ObjectNode]
    relations: tuple[Relation, ...]
    rules: tuple[ConstraintRule, ...]
    order: tuple[ParamRef, ...] = field(default=())

    def __post_init__(self):
        if not self.order:
            object.__setattr__(self, "order", tuple(
                ParamRef(o.id, p.name) for o in self.objects.values() for p in o.parameters))
        known = {ParamRef(o.id, p.name) for o in self.objects.values() for p in o.parameters}
        if set(self.order) != known or len(self.order) != len(known):
            raise SpaceError("parameter order must list every parameter exactly once")
        for r in self.relations:
            for e in r.endpoints:
                if e not in self.objects:
                    raise SpaceError(f"relation endpoint {e!r} does not resolve")
        targets: dict[ParamRef, str] = {}
        for rule in self.rules:
            for ref in rule.scope:
                if ref not in known:
                    raise SpaceError(f"rule {rule.id} references unknown parameter {ref}")
            if rule.target is not None:
                if rule.target in targets:
                    raise SpaceError(f"{rule.target} defined twice")
                targets[rule.target] = rule.id
                if self.parameter(rule.target).derived_by != rule.id:
                    raise SpaceError(f"{rule.target} must name {rule.id} as its define rule")
        for ref in known:
            p = self.parameter(ref)
            if p.derived_by and targets.get(ref) != p.derived_by:
                raise SpaceError(f"derived parameter {ref} has no define rule")

    # lookups
    def parameter(self, ref: ParamRef) -> Parameter:
        return self.objects[ref.obj].param(ref.name)

    def rule(self, rule_id: str) -> ConstraintRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    @property
    def free(self) -> list[ParamRef]:
        return [r for r in self.order if not self.parameter(r).derived_by]

    @property
    def derived(self) -> list[ParamRef]:
        return [r for r in self.order if self.parameter(r).derived_by]

    @property
    def define_rules(self) -> dict[ParamRef, ConstraintRule]:
        return {r.target: r for r in self.rules if r.role == "define"}

    @property
    def check_rules(self) -> list[ConstraintRule]:
        return [r for r in self.rules if r.role == "check"]

    @property
    def section_length(self) -> Parameter:
        return self.parameter(ParamRef("road", "L"))

    @property
    def grid_spacing(self) -> Parameter:
        return self.parameter(ParamRef("road", "d_slot"))

    def objects_of(self, *kinds: ObjectKind) -> list[ObjectNode]:
        return [o for o in self.objects.values() if o.kind in kinds]

    def relations_labelled(self, label: str) -> list[Relation]:
        return [r for r in self.relations if r.label == label]

    @cached_property
    def memo(self) -> dict:
        """Per-instance scratch space for derived artefacts (compiled rules etc.)."""
        return {}

    @cached_property
    def _inline_table(self) -> dict[ParamRef, Expr]:
        table: dict[ParamRef, Expr] = {}
        defs = self.define_rules
        for target in topological_order(self):
            if target in defs:
                table[target] = substitute(defs[target].expr.right, table)
        return table

    def inline_derived(self, expr):
        """Replace derived references by their define expressions, recursively."""
        return substitute(expr, self._inline_table)


def topological_order(ps: ParameterSpace) -> list[ParamRef]:
    """All parameters, define-rule inputs before targets, ties by declaration."""
    index = {r: i for i, r in enumerate(ps.order)}
    defs = ps.define_rules
    deps: dict[ParamRef, set[ParamRef]] = {r: set() for r in ps.order}
    users: dict[ParamRef, list[ParamRef]] = {r: [] for r in ps.order}
    for target, rule in defs.items():
        for src in rule.inputs:
            if src not in deps[target]:
                deps[target].add(src)
                users[src].append(target)
    pending = {r: len(d) for r, d in deps.items()}
    heap = [index[r] for r, n in pending.items() if n == 0]
    heapq.heapify(heap)
    out: list[ParamRef] = []
    while heap:
        r = ps.order[heapq.heappop(heap)]
        out.append(r)
        for u in users[r]:
            pending[u] -= 1
            if pending[u] == 0:
                heapq.heappush(heap, index[u])
    if len(out) != len(ps.order):
        raise CycleError(_find_cycle(deps, defs, {r for r, n in pending.items() if n}))
    return out


def _find_cycle(deps, defs, stuck) -> list[str]:
    start = min(stuck, key=str)
    path, seen = [start], {start: 0}
    node = start
    while True:
        node = sorted((d for d in deps[node] if d in stuck), key=str)[0]
        if node in seen:
            cyc = path[seen[node]:]
            return [defs[n].id for n in cyc]
        seen[node] = len(path)
        path.append(node)


# -- evaluation -------------------------------------------------------------

@dataclass(frozen=True)
class RuleResult:
    status: str  # satisfied | violated | defines
    residual: float = 0.0
    value: float | None = None
    diagnostic: str | None = None

    @property
    def ok(self) -> bool:
        return self.status != "violated"


def residual_of(op: str, lhs: float, rhs: float) -> float:
    """Signed margin: positive means satisfied with room to spare."""
    if op in (">", ">="):
        return lhs - rhs
    if op in ("<", "<="):
        return rhs - lhs
    return -abs(lhs - rhs)


def holds(op: str, lhs: float, rhs: float) -> bool:
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    return math.isclose(lhs, rhs, rel_tol=REL_TOL, abs_tol=0.0) or lhs == rhs


def as_mapping(valuation) -> Mapping[ParamRef, float]:
    if isinstance(valuation, Mapping):
        return valuation
    return valuation.values


def evaluate_rule(rule: ConstraintRule, valuation) -> RuleResult:
    values = as_mapping(valuation)
    try:
        if rule.role == "define":
            return RuleResult("defines", value=evaluate(rule.expr.right, values))
        lhs = evaluate(rule.expr.left, values)
        rhs = evaluate(rule.expr.right, values)
    except KeyError as exc:
        return RuleResult("violated", math.nan, diagnostic=f"unresolved reference {exc.args[0]}")
    except ZeroDivisionError as exc:
        return RuleResult("violated", math.nan, diagnostic=str(exc))
    res = residual_of(rule.expr.op, lhs, rhs)
    if holds(rule.expr.op, lhs, rhs):
        return RuleResult("satisfied", res)
    return RuleResult("violated", res, diagnostic=f"{rule.infix()} fails by {abs(res):.6g}")


@dataclass(frozen=True)
class Violation:
    kind: str  # missing | range | check | define
    subject: str
    message: str


def check_valuation(ps: ParameterSpace, valuation) -> list[Violation]:
    values = as_mapping(valuation)
    out: list[Violation] = []
    for ref in ps.order:
        p = ps.parameter(ref)
        if ref not in values:
            out.append(Violation("missing", str(ref), "parameter not assigned"))
            continue
        x = values[ref]
        if isinstance(x, bool) or not (isinstance(x, (int, float)) and math.isfinite(x)) or not p.contains(x):
            dom = p.values if p.is_set else f"[{p.lo}, {p.hi}]"
            out.append(Violation("range", str(ref), f"{x!r} outside {dom}"))
    for rule in ps.rules:
        res = evaluate_rule(rule, values)
        if rule.role == "define":
            if res.status == "violated":
                out.append(Violation("define", rule.id, res.diagnostic or "cannot evaluate"))
                continue
            stored = values.get(rule.target)
            if stored is None:
                continue
            if not math.isclose(stored, res.value, rel_tol=REL_TOL, abs_tol=1e-300):
                out.append(Violation("define", rule.id,
                                     f"{rule.target} = {stored!r}, rule gives {res.value!r}"))
        elif res.status == "violated":
            out.append(Violation("check", rule.id, res.diagnostic or "violated"))
    return out


def free_inputs(ps: ParameterSpace, rule: ConstraintRule) -> list[ParamRef]:
    """Free parameters a rule depends on once derived values are inlined."""
    expr = ps.inline_derived(rule.expr)
    return references(expr)


def order_index(ps: ParameterSpace) -> dict[ParamRef, int]:
    return {r: i for i, r in enumerate(topological_order(ps))}


def describe(ps: ParameterSpace) -> Iterable[str]:
    for o in ps.objects.values():
        yield f"{o.id} [{o.kind.value}, {o.layer.label}]"
        for p in o.parameters:
            dom = p.values if p.is_set else f"[{p.lo:g}, {p.hi:g}]"
            yield f"  {p.name} {dom} {p.unit} {p.value_kind}"
    for r in ps.rules:
        yield f"{r.id} ({r.role}): {r.infix()}"
