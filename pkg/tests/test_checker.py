import csv
import dataclasses
import io

import numpy as np
import pytest

from corpus import curated_paths
from helpers import MINIMAL
from scenario_forge.checker import (
    CRASH_GAP,
    check_conformance,
    encode,
    maneuver_signature,
    simulate,
    swap_speeds,
)
from scenario_forge.checker import _kernel_py
from scenario_forge.pipeline import compile_file, compile_scenario, realize
from scenario_forge.rules import ParamRef
from scenario_forge.valuation import complete, sample_concrete

P = ParamRef
SAMPLES_PER_TEMPLATE = 200


def with_values(c, **overrides):
    free = {r: c.valuation[r] for r in c.space.free}
    for key, value in overrides.items():
        obj, name = key.split("__")
        free[P(obj, name)] = value
    return realize(c.fs, c.space, c.timeline, complete(c.space, free))


def by_template():
    """First curated scenario of each maneuver template."""
    seen = {}
    for p in curated_paths():
        kind = p.stem.split("_", 1)[1].rsplit("_", 1)[0]
        seen.setdefault(kind, p)
    return seen


def test_lone_vehicle_leaves_the_section():
    c = with_values(compile_scenario(MINIMAL), road__L=1250.0, A1__v0=30.0)
    assert c.storyboard.init[0].s == 625.0
    trace = simulate(c.storyboard, c.road, 0.02, run_out=True)
    # 625 m at 30 m/s: the run stops once the next step would cross the road end
    assert trace.t[-1] == pytest.approx(625 / 30, abs=0.02)
    assert trace.s[-1, 0] <= 1250.0 < trace.s[-1, 0] + 30.0 * 0.02
    assert np.all(trace.v == 30.0)


def test_quiet_run_stops_early():
    c = compile_scenario(MINIMAL)
    trace = simulate(c.storyboard, c.road)
    assert trace.steps == 1
    _, report = c.run()
    assert report.ok


def test_approach_gap(fig6):
    trace, report = fig6.run(0.02)
    assert report.ok
    gap = trace.gap("A1", "A2")
    k = trace.fired_step("A1_match")
    g_end = fig6.valuation[P("A1_approach", "g_end")]
    dv = fig6.valuation[P("A1", "v0")] - fig6.valuation[P("A2", "v0")]
    assert k is not None and np.all(np.diff(gap[: k + 1]) < 0)
    assert gap[k - 1] >= g_end > gap[k] >= g_end - dv * trace.dt
    assert gap.min() >= CRASH_GAP


def test_zero_actors(fig6):
    sb = dataclasses.replace(fig6.storyboard, entities=(), init=(), acts=())
    trace = simulate(sb, fig6.road)
    assert trace.steps == 0 and trace.actors == ()
    assert check_conformance(trace, dataclasses.replace(fig6.fs, actors=(), start_maneuvers={},
                                                        end_positions={}), sb.mapping).ok


def test_step_bounds(fig6):
    for dt in (0.0, -0.01, 0.2):
        with pytest.raises(ValueError):
            simulate(fig6.storyboard, fig6.road, dt)


def test_runs_are_deterministic(fig6):
    a, b = simulate(fig6.storyboard, fig6.road), simulate(fig6.storyboard, fig6.road)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.v, b.v) and a.fired == b.fired


@pytest.mark.parametrize("path", curated_paths(), ids=lambda p: p.stem)
def test_compiled_and_python_kernels_agree(path):
    compiled = pytest.importorskip("scenario_forge.checker._kernel")
    c = compile_file(path)
    _, tables, _ = encode(c.storyboard)
    args = (0.02, c.storyboard.t_end, c.road.length, True, *tables)
    want = _kernel_py.run(*args)
    got = compiled.run(*args)
    assert want[0] == got[0]
    for x, y in zip(want[1:], got[1:]):
        assert np.array_equal(np.asarray(x), np.asarray(y))


@pytest.mark.parametrize("path", curated_paths(), ids=lambda p: p.stem)
def test_halving_the_step_changes_little(path):
    c = compile_file(path)
    a = simulate(c.storyboard, c.road, 0.02)
    b = simulate(c.storyboard, c.road, 0.01)
    k = min(a.steps - 1, (b.steps - 1) // 2)  # last time both runs sampled
    assert np.max(np.abs(a.s[k] - b.s[2 * k])) < 0.5


@pytest.mark.parametrize("kind", sorted(by_template()))
def test_sampled_valuations_pass(kind):
    c = compile_file(by_template()[kind])
    failures = []
    for v in sample_concrete(c.space, 11, SAMPLES_PER_TEMPLATE):
        _, report = realize(c.fs, c.space, c.timeline, v).run()
        if not report.ok:
            failures.append((v.index, report.as_dict()))
    assert failures == []


@pytest.mark.parametrize("path", [p for p in curated_paths() if "approach" in p.stem], ids=lambda p: p.stem)
def test_swapped_speeds_are_caught(path):
    c = compile_file(path)
    caught = 0
    samples = sample_concrete(c.space, 5, 20)
    for v in samples:
        free = swap_speeds({r: v[r] for r in c.space.free}, "A1", "A2")
        _, report = realize(c.fs, c.space, c.timeline, complete(c.space, free)).run()
        caught += not report.ok
    assert caught == len(samples)


def test_lane_change_signature():
    c = compile_file(by_template()["lane_change_left"])
    trace, report = c.run()
    assert report.ok
    actor = next(iter(c.fs.start_maneuvers))
    lanes = trace.lane[:, trace.column(actor)]
    assert lanes[0] + 1 == lanes[-1]
    frozen = dataclasses.replace(trace, lane=np.repeat(trace.lane[:1], trace.steps, axis=0))
    assert not maneuver_signature(frozen, c.fs, actor)


def test_csv_export(fig6):
    trace, _ = fig6.run()
    text = trace.to_csv(fig6.storyboard.mapping.lane_ids)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["t", "actor", "s", "lane", "v"]
    assert len(rows) == trace.steps * len(trace.actors)
    last = rows[-1]
    assert last["actor"] == "A2" and float(last["s"]) == trace.s[-1, 1]
    assert {int(r["lane"]) for r in rows} == {-2}
