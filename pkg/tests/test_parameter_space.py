import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import approach, scenario
from scenario_forge import intervals
from scenario_forge.detailing import detail_scenario
from scenario_forge.parameter_space import (
    ConstraintRule,
    CycleError,
    Layer,
    ObjectKind,
    ObjectNode,
    ParameterSpace,
    RelationKind,
    SpaceError,
    check_valuation,
    evaluate_rule,
    interval,
    topological_order,
)
from scenario_forge.rules import ParamRef, compare, evaluate, parse_infix, ref, references
from scenario_forge.scenario_model import parse_functional_scenario
from scenario_forge.valuation import assign_defaults, complete

P = ParamRef


def test_strict_speed_rule_residual():
    rule = ConstraintRule("r", "check", compare(">", ref("A1", "v0"), ref("A2", "v0")))
    res = evaluate_rule(rule, {P("A1", "v0"): 33.3, P("A2", "v0"): 27.8})
    assert res.ok and res.status == "satisfied"
    assert res.residual == pytest.approx(5.5)


def test_width_continuity_has_zero_residual():
    fs = parse_functional_scenario(approach())
    ps, _ = detail_scenario(fs)
    v = dict(assign_defaults(ps).values)
    rule = ps.rule("lane_1.w_end")
    assert evaluate_rule(rule, v).value == v[P("lane_1", "w")]
    assert check_valuation(ps, v) == []
    v[P("lane_1", "w_end")] = v[P("lane_1", "w")] + 0.1
    assert [x.subject for x in check_valuation(ps, v)] == ["lane_1.w_end"]


def _crest_tangent_by_walking(R, s1, s2, h=1e-3):
    """March along the curve until the slope of z(x) = s1 x - x^2 / (2R) reaches s2."""
    x = 0.0
    while s1 - x / R > s2:
        x += h
    return x / 2


def test_tangent_length_matches_walked_curve():
    fs = parse_functional_scenario(scenario("actor A1 car lane 1 slot 0", "end A1 lane 1 slot 0",
                                            road=("road lanes 2", "road elevation crest")))
    ps, _ = detail_scenario(fs)
    rule = ps.rule("crest.T")
    vals = {P("crest", "R"): 13000.0, P("crest", "s1"): 0.02, P("crest", "s2"): -0.02}
    got = evaluate_rule(rule, vals).value
    assert got == pytest.approx(260.0, rel=1e-12)
    assert got == pytest.approx(_crest_tangent_by_walking(13000.0, 0.02, -0.02), abs=1e-3)


def test_lane_width_out_of_range():
    fs = parse_functional_scenario(approach())
    ps, _ = detail_scenario(fs)
    v = dict(assign_defaults(ps).values)
    v[P("lane_1", "w")] = 5.0
    v[P("lane_1", "w_end")] = 5.0
    bad = check_valuation(ps, v)
    assert [(x.kind, x.subject) for x in bad] == [("range", "lane_1.w"), ("range", "lane_1.w_end")]
    assert sum(x.subject == "lane_1.w" for x in bad) == 1


def test_equal_speeds_break_approach():
    fs = parse_functional_scenario(approach())
    ps, _ = detail_scenario(fs)
    v = dict(assign_defaults(ps).values)
    v[P("A1", "v0")] = v[P("A2", "v0")]
    with pytest.raises(ZeroDivisionError):
        complete(ps, {r: v[r] for r in ps.free})
    bad = {x.subject: x.kind for x in check_valuation(ps, v)}
    assert bad["A1_approach.speed"] == "check"
    assert bad["A1_approach.t_done"] == "define"


def test_missing_and_non_finite_values():
    fs = parse_functional_scenario(approach())
    ps, _ = detail_scenario(fs)
    v = dict(assign_defaults(ps).values)
    del v[P("road", "L")]
    v[P("A1", "v0")] = math.nan
    kinds = {(x.kind, x.subject) for x in check_valuation(ps, v)}
    assert ("missing", "road.L") in kinds and ("range", "A1.v0") in kinds


# -- construction and ordering -----------------------------------------------------

def _chain_space(edges, n):
    """Parameters x0..x{n-1}; x_j = sum of its inputs for every (i, j) edge."""
    inputs = {j: sorted(i for i, k in edges if k == j) for j in range(n)}
    params = []
    rules = []
    for j in range(n):
        if inputs[j]:
            params.append(interval(f"x{j}", "1", -1e9, 1e9, derived_by=f"d{j}"))
            rhs = " + ".join(f"x{i}" for i in inputs[j])
            rules.append(ConstraintRule(f"d{j}", "define", parse_infix(f"x{j} = {rhs}", scope="o")))
        else:
            params.append(interval(f"x{j}", "1", 0, 1))
    node = ObjectNode("o", ObjectKind.ROAD_SECTION, Layer.ROAD, tuple(params))
    return ParameterSpace("t", {"o": node}, (), tuple(rules))


@st.composite
def dags(draw):
    n = draw(st.integers(1, 9))
    perm = draw(st.permutations(range(n)))
    pairs = [(perm[a], perm[b]) for a in range(n) for b in range(a + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return edges, n


@given(dags())
@settings(max_examples=200)
def test_topological_order_evaluates_in_one_pass(case):
    edges, n = case
    ps = _chain_space(edges, n)
    order = topological_order(ps)
    assert sorted(order, key=str) == sorted(ps.order, key=str)
    values = {}
    defs = ps.define_rules
    for r in order:
        # every input is already known when a target is reached
        values[r] = evaluate(defs[r].expr.right, values) if r in defs else 0.5
    pos = {r: i for i, r in enumerate(order)}
    for i, j in edges:
        assert pos[P("o", f"x{i}")] < pos[P("o", f"x{j}")]


def test_cycle_is_reported():
    node = ObjectNode("o", ObjectKind.ROAD_SECTION, Layer.ROAD, (
        interval("a", "1", 0, 1, derived_by="ra"), interval("b", "1", 0, 1, derived_by="rb")))
    ps = ParameterSpace("cyc", {"o": node}, (), (
        ConstraintRule("ra", "define", parse_infix("a = b + 1", scope="o")),
        ConstraintRule("rb", "define", parse_infix("b = a", scope="o"))))
    with pytest.raises(CycleError) as info:
        topological_order(ps)
    assert sorted(info.value.rule_ids) == ["ra", "rb"]


def test_construction_errors():
    node = ObjectNode("o", ObjectKind.ROAD_SECTION, Layer.ROAD, (interval("a", "1", 0, 1),))
    with pytest.raises(SpaceError):
        ParameterSpace("x", {"o": node}, (), (ConstraintRule("r", "check", parse_infix("a <= zz", scope="o")),))
    with pytest.raises(SpaceError):
        interval("a", "furlong", 0, 1)
    with pytest.raises(SpaceError):
        interval("a", "m", 2, 1)
    with pytest.raises(SpaceError):
        ConstraintRule("r", "define", parse_infix("a + 1 = 2", scope="o"))


# -- perturbation bounds -----------------------------------------------------------

_SETTLE = None


def _settle_rule():
    global _SETTLE
    if _SETTLE is None:
        ps, _ = detail_scenario(parse_functional_scenario(approach()))
        _SETTLE = ps, ps.inline_derived(ps.rule("A1_approach.settle").expr)
    return _SETTLE


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=300)
def test_residual_moves_no_faster_than_lipschitz_bound(u1, u2, w, target_pick):
    ps, expr = _settle_rule()
    box = {r: intervals.Interval(*ps.parameter(r).bounds) for r in ps.free}
    refs = sorted(set(ps.free) & set(references(expr)), key=str)
    wrt = refs[int(target_pick * (len(refs) - 1))]
    base = {r: box[r].lo + w * box[r].width for r in ps.free}
    a, b = dict(base), dict(base)
    a[wrt] = box[wrt].lo + u1 * box[wrt].width
    b[wrt] = box[wrt].lo + u2 * box[wrt].width

    def res(v):
        return evaluate(expr.left, v) - evaluate(expr.right, v)

    L = intervals.lipschitz(expr, box, wrt)
    assert abs(res(a) - res(b)) <= L * abs(a[wrt] - b[wrt]) * (1 + 1e-9) + 1e-9


# -- arrangement relations -----------------------------------------------------------

@given(st.integers(2, 4), st.booleans())
def test_left_neighbor_is_a_strict_chain(n, shoulder):
    road = (f"road lanes {n}" + (" hard_shoulder" if shoulder else ""),)
    fs = parse_functional_scenario(scenario("actor A1 car lane 1 slot 0", "end A1 lane 1 slot 0", road=road))
    ps, _ = detail_scenario(fs)
    edges = {r.endpoints for r in ps.relations_labelled("left_neighbor")}
    lanes = [o.id for o in ps.objects_of(ObjectKind.LANE)]
    assert all(r.kind is RelationKind.ARRANGEMENT for r in ps.relations_labelled("left_neighbor"))
    assert all(a != b for a, b in edges)
    assert not any((b, a) in edges for a, b in edges)
    # transitive closure orders every pair of lanes
    closure = set(edges)
    while True:
        more = {(a, d) for a, b in closure for c, d in closure if b == c} - closure
        if not more:
            break
        closure |= more
    for a in lanes:
        for b in lanes:
            if a != b:
                assert ((a, b) in closure) != ((b, a) in closure)
