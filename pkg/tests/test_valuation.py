import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import approach, scenario
from scenario_forge.detailing import DELTA_MIN, detail_scenario
from scenario_forge.parameter_space import check_valuation
from scenario_forge.rules import ParamRef
from scenario_forge.scenario_model import parse_functional_scenario
from scenario_forge.valuation import (
    InfeasibleRuleError,
    assign_defaults,
    feasible_bounds,
    sample_concrete,
    sampling_box,
)

P = ParamRef
COVERAGE_TOL = 0.05


def space(text):
    return detail_scenario(parse_functional_scenario(text))[0]


@pytest.fixture(scope="module")
def fig6_samples(fig6):
    return sample_concrete(fig6.space, 7, 1000)


def test_lane_width_default_is_midpoint():
    v = assign_defaults(space(approach()))
    assert v[P("lane_1", "w")] == 3.5
    assert v.provenance == "default" and v.seed is None


def test_approach_defaults_shift_the_target_speed(fig6):
    v = fig6.valuation
    # A1 sits at its midpoint; A2 is the later parameter and moves just far enough
    lo, hi = fig6.space.parameter(P("A1", "v0")).bounds
    assert v[P("A1", "v0")] == (lo + hi) / 2
    assert v[P("A2", "v0")] == pytest.approx(v[P("A1", "v0")] - DELTA_MIN, abs=1e-9)
    assert check_valuation(fig6.space, v) == []


def test_crest_defaults():
    ps = space(scenario("actor A1 car lane 1 slot 0", "end A1 lane 1 slot 0",
                        road=("road lanes 2", "road elevation crest")))
    R, s1, s2 = 31500.0, 0.025, -0.025
    assert R * abs(s1 - s2) / 2 == 787.5  # the plain midpoints would need 2 * 787.5 m of road
    v = assign_defaults(ps)
    assert (v[P("crest", "R")], v[P("crest", "s1")]) == (R, s1)
    assert v[P("road", "L")] == 1250.0
    # s2 is the latest parameter of the fit rule, so it is the one that moves
    assert v[P("crest", "s2")] != s2
    assert 2 * v[P("crest", "T")] == pytest.approx(1250.0, rel=1e-9)
    assert check_valuation(ps, v) == []


def test_defaults_are_not_a_solver():
    # feasible (a slower truck far behind is fine) but the one-pass repair cannot reach it
    ps = space(scenario("actor A1 truck lane 1 slot 0", "actor A2 car lane 1 slot 1",
                        "start A1 fall_back of A2", "end A1 lane 1 slot -1", "end A2 lane 1 slot 1",
                        road=("road lanes 3", "road speed_limit 80")))
    with pytest.raises(InfeasibleRuleError):
        assign_defaults(ps)


def test_zero_samples():
    assert sample_concrete(space(approach()), 1, 0) == []


@given(st.integers(0, 2 ** 64 - 1))
@settings(max_examples=10, deadline=None)
def test_same_seed_same_samples(seed):
    ps = space(approach())
    a, b = sample_concrete(ps, seed, 8), sample_concrete(ps, seed, 8)
    assert [x.values for x in a] == [x.values for x in b]
    assert [x.index for x in a] == list(range(8))
    # prefixes are stable: valuation i only depends on (seed, i)
    assert [x.values for x in sample_concrete(ps, seed, 3)] == [x.values for x in a[:3]]


def test_different_seeds_differ():
    ps = space(approach())
    assert sample_concrete(ps, 1, 4)[0].values != sample_concrete(ps, 2, 4)[0].values


def test_fig6_samples_are_valid(fig6, fig6_samples):
    assert len(fig6_samples) == 1000
    assert all(check_valuation(fig6.space, v) == [] for v in fig6_samples)
    assert all(v.provenance == "sampled" and v.seed == 7 for v in fig6_samples)


def test_fig6_samples_cover_feasible_ranges(fig6, fig6_samples):
    bounds = feasible_bounds(fig6.space)
    for ref, (lo, hi) in bounds.items():
        xs = [v[ref] for v in fig6_samples]
        slack = COVERAGE_TOL * (hi - lo)
        assert min(xs) <= lo + slack, ref
        assert max(xs) >= hi - slack, ref


def test_samples_lie_inside_both_outer_bounds(fig6, fig6_samples):
    box = sampling_box(fig6.space)
    bounds = feasible_bounds(fig6.space)
    for v in fig6_samples:
        for ref, (lo, hi) in box.items():
            assert lo <= v[ref] <= hi
        for ref, (lo, hi) in bounds.items():
            assert lo <= v[ref] <= hi
