"""Default values and rule-respecting random valuations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import intervals
from .parameter_space import ParameterSpace, check_valuation, topological_order
from .rules import Compare, Num, ParamRef, Ref, compile_array, evaluate, references

GRID = 4097
RETRY_CAP = 1000
CHUNK = 50
BOUNDARY_EVERY = 4
BOUNDARY_TRIES = 5
BOUNDARY_BAND = 0.02
REPAIR_GRID = 257


class InfeasibleRuleError(ValueError):
    def __init__(self, rule_id: str, detail: str = ""):
        self.rule_id = rule_id
        super().__init__(f"rule {rule_id} cannot be satisfied{': ' + detail if detail else ''}")


class SamplingError(RuntimeError):
    def __init__(self, index: int, accepted: int, attempts: int):
        self.index, self.accepted, self.attempts = index, accepted, attempts
        rate = accepted / attempts if attempts else 0.0
        super().__init__(f"valuation {index}: retry cap {RETRY_CAP} exceeded "
                         f"(acceptance rate {rate:.4f} over {attempts} draws)")


@dataclass(frozen=True)
class ConcreteValuation:
    values: dict[ParamRef, float]
    seed: int | None = None
    provenance: str = "default"  # default | sampled
    index: int | None = field(default=None, compare=False)

    def __getitem__(self, ref: ParamRef) -> float:
        return self.values[ref]

    def by_path(self) -> dict[str, float]:
        return {str(k): v for k, v in self.values.items()}


@dataclass(frozen=True)
class _Constraint:
    label: str
    expr: Compare  # only free references
    fns: tuple

    def margins(self, env) -> np.ndarray:
        """Boolean array: constraint holds."""
        with np.errstate(all="ignore"):
            lhs, rhs = self.fns[0](env), self.fns[1](env)
            op = self.expr.op
            if op == ">=":
                ok = lhs >= rhs
            elif op == ">":
                ok = lhs > rhs
            elif op == "<=":
                ok = lhs <= rhs
            elif op == "<":
                ok = lhs < rhs
            else:
                ok = np.isclose(lhs, rhs, rtol=1e-9, atol=0.0)
            return ok & np.isfinite(lhs) & np.isfinite(rhs)

    def violation(self, env) -> np.ndarray:
        """Non-negative shortfall; zero exactly where the constraint holds."""
        with np.errstate(all="ignore"):
            lhs, rhs = self.fns[0](env), self.fns[1](env)
            if self.expr.op in (">=", ">"):
                gap = np.maximum(rhs - lhs, 0.0)
            elif self.expr.op in ("<=", "<"):
                gap = np.maximum(lhs - rhs, 0.0)
            else:
                gap = np.abs(lhs - rhs)
            ok = self.margins(env)
            gap = np.where(ok, 0.0, np.where(np.isfinite(gap), np.maximum(gap, 1e-12), 1e12))
        return gap


def _make(label: str, expr: Compare) -> _Constraint:
    return _Constraint(label, expr, (compile_array(expr.left), compile_array(expr.right)))


def constraints(ps: ParameterSpace) -> tuple[_Constraint, ...]:
    """Check rules and derived-parameter ranges, expressed over free parameters."""
    memo = ps.memo
    if "constraints" not in memo:
        memo["constraints"] = _build_constraints(ps)
    return memo["constraints"]


def _build_constraints(ps: ParameterSpace) -> tuple[_Constraint, ...]:
    out = [_make(r.id, ps.inline_derived(r.expr)) for r in ps.check_rules]
    for ref in ps.derived:
        p = ps.parameter(ref)
        if p.is_set:
            continue
        e = ps.inline_derived(Ref(ref))
        out.append(_make(f"range:{ref}", Compare(">=", e, Num(p.lo))))
        out.append(_make(f"range:{ref}", Compare("<=", e, Num(p.hi))))
    return tuple(out)


def _default(p) -> float:
    if p.is_set:
        vals = sorted(p.values)
        return vals[(len(vals) - 1) // 2]
    return 0.5 * (p.lo + p.hi)


def complete(ps: ParameterSpace, free_values: dict[ParamRef, float]) -> dict[ParamRef, float]:
    """Add derived values in dependency order; returns a new dict in declaration order."""
    values = dict(free_values)
    defs = ps.define_rules
    for ref in topological_order(ps):
        if ref in defs:
            values[ref] = evaluate(defs[ref].expr.right, values)
    return {r: values[r] for r in ps.order}


def _holds(c: _Constraint, values) -> bool:
    return bool(c.margins(values))


def assign_defaults(ps: ParameterSpace) -> ConcreteValuation:
    """Midpoints, then one forward pass shifting the latest parameter of each violated rule."""
    free = ps.free
    rank = {r: i for i, r in enumerate(free)}
    values = {r: _default(ps.parameter(r)) for r in free}
    groups: dict[ParamRef | None, list[_Constraint]] = {}
    for c in constraints(ps):
        refs = references(c.expr)
        key = max(refs, key=rank.__getitem__) if refs else None
        groups.setdefault(key, []).append(c)
    for c in groups.get(None, []):
        if not _holds(c, values):
            raise InfeasibleRuleError(c.label, "no free parameter to adjust")
    for ref in free:
        group = groups.get(ref)
        if not group or all(_holds(c, values) for c in group):
            continue
        values[ref] = _shift(ps, ref, group, values)
    v = ConcreteValuation(complete(ps, values), None, "default")
    bad = check_valuation(ps, v)
    if bad:
        raise InfeasibleRuleError(bad[0].subject, bad[0].message)
    return v


def _feasible(group, ref, xs, values) -> np.ndarray:
    env = dict(values)
    env[ref] = xs
    ok = np.ones(xs.shape, dtype=bool)
    for c in group:
        ok &= c.margins(env)
    return ok


def _shift(ps, ref, group, values) -> float:
    """Feasible value of ``ref`` closest to its current value (others fixed)."""
    p = ps.parameter(ref)
    x0 = values[ref]
    if p.is_set:
        xs = np.array(sorted(p.values))
    else:
        xs = np.linspace(p.lo, p.hi, GRID)
    ok = _feasible(group, ref, xs, values)
    if not ok.any():
        for c in group:
            if not _feasible([c], ref, xs, values).any():
                raise InfeasibleRuleError(c.label, f"no value of {ref} works")
        raise InfeasibleRuleError(group[0].label, f"rules on {ref} conflict")
    idx = np.flatnonzero(ok)
    best = idx[np.argmin(np.abs(xs[idx] - x0))]
    if p.is_set:
        return float(xs[best])
    # tighten towards x0 between the feasible point and its infeasible neighbour
    step = 1 if x0 > xs[best] else -1
    nb = best + step
    if not 0 <= nb < len(xs) or ok[nb]:
        return float(xs[best])
    good, bad = float(xs[best]), float(xs[nb])
    for _ in range(80):
        mid = 0.5 * (good + bad)
        if mid in (good, bad):
            break
        if _feasible(group, ref, np.array([mid]), values)[0]:
            good = mid
        else:
            bad = mid
    return good


# -- sampling -------------------------------------------------------------------

def sampling_box(ps: ParameterSpace) -> dict[ParamRef, tuple[float, float]]:
    """Declared ranges narrowed by contraction; never drops a feasible point."""
    box = {r: intervals.Interval(*ps.parameter(r).bounds) for r in ps.free}
    cur = intervals.contract([c.expr for c in constraints(ps)], box)
    out = {}
    for r in ps.free:
        lo, hi = ps.parameter(r).bounds
        if cur is not None:
            lo, hi = max(lo, cur[r].lo), min(hi, cur[r].hi)
        out[r] = (lo, hi)
    return out


def sample_concrete(ps: ParameterSpace, seed: int, n: int) -> list[ConcreteValuation]:
    """``n`` rule-consistent valuations; valuation ``i`` draws from stream (seed, i).

    Most valuations are plain uniform rejection samples.  Every
    ``BOUNDARY_EVERY``-th one is a boundary sample: one interval parameter is
    pinned near an end of its feasible range and the others are repaired by
    coordinate descent on the rule violation.  Both kinds are accepted only
    if ``check_valuation`` comes back empty.
    """
    if n <= 0:
        return []
    out = []
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        chosen = None
        if i % BOUNDARY_EVERY == BOUNDARY_EVERY - 1:
            chosen = _boundary_sample(ps, rng)
        if chosen is None:
            chosen = _rejection_sample(ps, rng, i)
        out.append(ConcreteValuation(chosen, seed, "sampled", i))
    return out


def _draw(ps, rng, box, k) -> dict:
    env = {}
    for r in ps.free:
        p = ps.parameter(r)
        if p.is_set:
            env[r] = rng.choice(np.array(sorted(p.values)), size=k)
        else:
            lo, hi = box[r]
            env[r] = lo + (hi - lo) * rng.random(k)
    return env


def _rejection_sample(ps, rng, index) -> dict[ParamRef, float]:
    box = _cached(ps, "sampling_box", sampling_box)
    cons = constraints(ps)
    attempts = 0
    while attempts < RETRY_CAP:
        k = min(CHUNK, RETRY_CAP - attempts)
        env = _draw(ps, rng, box, k)
        ok = np.ones(k, dtype=bool)
        for c in cons:
            ok &= c.margins(env)
        for j in np.flatnonzero(ok):
            full = complete(ps, {r: float(env[r][j]) for r in ps.free})
            if not check_valuation(ps, full):
                return full
        attempts += k
    raise SamplingError(index, 0, attempts)


def _boundary_sample(ps, rng) -> dict[ParamRef, float] | None:
    bounds = _cached(ps, "feasible_bounds", feasible_bounds)
    box = _cached(ps, "sampling_box", sampling_box)
    pivots = [r for r, (lo, hi) in bounds.items() if hi > lo]
    if not pivots:
        return None
    cons = constraints(ps)
    pivot = pivots[rng.integers(len(pivots))]
    lo, hi = bounds[pivot]
    for _ in range(BOUNDARY_TRIES):
        inward = BOUNDARY_BAND * (hi - lo) * rng.random()
        x = lo + inward if rng.random() < 0.5 else hi - inward
        start = {r: float(v[0]) for r, v in _draw(ps, rng, box, 1).items()}
        start[pivot] = x
        found = _repair(ps, cons, start, pivot, rng)
        if found is not None:
            full = complete(ps, found)
            if not check_valuation(ps, full):
                return full
    return None


def _repair(ps, cons, values, pinned, rng, sweeps: int = 12) -> dict | None:
    """Coordinate descent on total violation, keeping ``pinned`` fixed."""
    movable = [r for r in ps.free if r != pinned and ps.parameter(r).width > 0]
    touching = {r: [c for c in cons if r in references(c.expr)] for r in movable}
    values = dict(values)
    for _ in range(sweeps):
        if all(bool(c.margins(values)) for c in cons):
            return values
        for q in rng.permutation(len(movable)):
            r = movable[q]
            group = touching[r]
            if not group:
                continue
            p = ps.parameter(r)
            if p.is_set:
                xs = np.array(sorted(p.values))
            else:
                xs = np.linspace(p.lo, p.hi, REPAIR_GRID)
                xs = np.append(xs, values[r])
            env = dict(values)
            env[r] = xs
            bad = np.zeros(xs.shape)
            for c in group:
                bad += c.violation(env)
            zero = np.flatnonzero(bad == 0)
            if len(zero):
                values[r] = float(xs[zero[rng.integers(len(zero))]])
            else:
                values[r] = float(xs[np.argmin(bad)])
    return values if all(bool(c.margins(values)) for c in cons) else None


def _cached(ps, key, fn):
    memo = ps.memo
    if key not in memo:
        memo[key] = fn(ps)
    return memo[key]


def feasible_bounds(ps: ParameterSpace, depth: int = 6) -> dict[ParamRef, tuple[float, float]]:
    """Outer bounds of each free interval parameter over the rule-feasible set."""
    cons = [c.expr for c in constraints(ps)]
    box = {r: intervals.Interval(*ps.parameter(r).bounds) for r in ps.free}
    split = [r for r in ps.free if not ps.parameter(r).is_set]
    out = {}
    for r in split:
        iv = intervals.shave(cons, box, r, depth=depth, split=split)
        if iv is None:
            raise InfeasibleRuleError("*", "parameter space is empty")
        out[r] = (iv.lo, iv.hi)
    return out


def is_finite_valuation(v: ConcreteValuation) -> bool:
    return all(math.isfinite(x) for x in v.values.values())
