"""Acceptance suite: eight criteria, one PASS/FAIL line each.

Runs under pytest (the lines go straight to the terminal) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import subprocess
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from corpus import FIG6, ROOT, curated_paths, curated_texts, full_corpus, vocabulary_corpus  # noqa: E402
from scenario_forge.checker import check_conformance, simulate, swap_speeds  # noqa: E402
from scenario_forge.detailing import detail_scenario  # noqa: E402
from scenario_forge.opendrive import (  # noqa: E402
    GeometrySegment,
    build_road_ir,
    check_ir,
    emit_opendrive,
    plan_view_end_pose,
    read_opendrive,
)
from scenario_forge.openscenario import emit_rules_file, parse_rules_file  # noqa: E402
from scenario_forge.parameter_space import check_valuation  # noqa: E402
from scenario_forge.pipeline import compile_file, compile_scenario, realize  # noqa: E402
from scenario_forge.rules import ParamRef  # noqa: E402
from scenario_forge.scenario_model import parse_functional_scenario, print_functional_scenario  # noqa: E402
from scenario_forge.validation import validate_opendrive, validate_openscenario  # noqa: E402
from scenario_forge.valuation import assign_defaults, complete, feasible_bounds, sample_concrete  # noqa: E402

P = ParamRef
SEED = 20240611
COVERAGE_TOL = 0.05
MUTATION_SAMPLES = 20

RESULTS: dict[int, tuple[bool, str]] = {}


def report(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)


# -- shared work -------------------------------------------------------------------

@lru_cache(maxsize=1)
def vocabulary_build():
    """Compile all 1350 road variants once; returns (compiled, seconds)."""
    t0 = time.perf_counter()
    texts = vocabulary_corpus()
    out = []
    for text in texts:
        c = compile_scenario(text)
        problems = validate_opendrive(c.xodr) + validate_openscenario(c.xosc) + check_valuation(c.space, c.valuation)
        out.append((c, problems))
    return out, time.perf_counter() - t0


@lru_cache(maxsize=1)
def curated_build():
    return [compile_file(p) for p in curated_paths()] + [compile_file(FIG6)]


def rk4_end_pose(seg: GeometrySegment, h: float = 0.01):
    """Classical RK4 on x' = cos(hdg), y' = sin(hdg), hdg' = kappa, step ``h``."""
    k = seg.curvature or 0.0
    n = max(1, int(round(seg.length / h)))
    h = seg.length / n
    hdg = seg.hdg0 + k * h * np.arange(n)
    dx = h / 6 * (np.cos(hdg) + 4 * np.cos(hdg + k * h / 2) + np.cos(hdg + k * h))
    dy = h / 6 * (np.sin(hdg) + 4 * np.sin(hdg + k * h / 2) + np.sin(hdg + k * h))
    return seg.x0 + math.fsum(dx), seg.y0 + math.fsum(dy)


def road_scenario(alignment: str, elevation: str) -> str:
    return (f"scenario g_{alignment}_{elevation}\nroad lanes 3 hard_shoulder\nroad alignment {alignment}\n"
            f"road elevation {elevation}\nroad speed_limit 120\nroad guard_rail both\n"
            "actor A1 car lane 1 slot 0\nend A1 lane 1 slot 0\n")


# -- criteria ------------------------------------------------------------------------

def criterion_1():
    built, seconds = vocabulary_build()
    failed = [c.name for c, problems in built if problems]
    ok = len(built) == 1350 and not failed and seconds < 60.0
    report(1, ok, f"{len(built) - len(failed)}/{len(built)} variants valid in {seconds:.1f} s (limit 60 s)")
    return ok, failed[:5]


def criterion_2():
    docs = []
    for c, _ in vocabulary_build()[0]:
        docs.append((c.name, c.xodr, c.xosc))
    for c in curated_build():
        docs.append((c.name, c.xodr, c.xosc))
        for v in sample_concrete(c.space, SEED, 10):
            r = realize(c.fs, c.space, c.timeline, v)
            docs.append((f"{c.name}#{v.index}", r.xodr, r.xosc))
    bad = [name for name, xodr, xosc in docs if validate_opendrive(xodr) or validate_openscenario(xosc)]
    ok = not bad
    report(2, ok, f"{2 * (len(docs) - len(bad))}/{2 * len(docs)} documents schema-valid")
    return ok, bad[:5]


def criterion_3():
    cases = []
    combos = [(a, e) for a in ("curve_left", "curve_right", "straight") for e in ("crest", "sag", "incline")]
    per = math.ceil(1000 / len(combos))
    for alignment, elevation in combos:
        ps, _ = detail_scenario(parse_functional_scenario(road_scenario(alignment, elevation)))
        cases += [(ps, v) for v in sample_concrete(ps, SEED, per)]
    cases = cases[:1000]
    worst_pos = worst_hdg = worst_elev = worst_rk4 = 0.0
    bad = []
    for ps, v in cases:
        ir = read_opendrive(emit_opendrive(build_road_ir(ps, v)))  # judge the serialized numbers
        problems = check_ir(ir, tol_pos=1e-6, tol_hdg=1e-9, tol_elev=1e-9)
        for i in range(1, len(ir.plan_view)):
            x, y, h = plan_view_end_pose(ir.plan_view[i - 1])
            seg = ir.plan_view[i]
            worst_pos = max(worst_pos, math.hypot(seg.x0 - x, seg.y0 - y))
            worst_hdg = max(worst_hdg, abs(seg.hdg0 - h))
        for p, q in zip(ir.elevation, ir.elevation[1:]):
            ds = q.s0 - p.s0
            worst_elev = max(worst_elev, abs(p.value(ds) - q.a), abs(p.slope(ds) - q.b))
        for seg in ir.plan_view:
            if seg.curvature is not None:
                x, y, _ = plan_view_end_pose(seg)
                rx, ry = rk4_end_pose(seg)
                worst_rk4 = max(worst_rk4, math.hypot(x - rx, y - ry))
        if problems:
            bad.append(problems)
    ok = (len(cases) == 1000 and not bad and worst_pos < 1e-6 and worst_hdg < 1e-9
          and worst_elev < 1e-9 and worst_rk4 < 1e-6)
    report(3, ok, f"{len(cases)} roads; worst C0 {worst_pos:.1e} m, C1 {worst_hdg:.1e} rad, "
                  f"elevation {worst_elev:.1e}, arc vs RK4 {worst_rk4:.1e} m")
    return ok, bad[:3]


def criterion_4():
    worst_slope, t_exact, n = 0.0, True, 0
    for kind in ("crest", "sag"):
        ps, _ = detail_scenario(parse_functional_scenario(road_scenario("straight", kind)))
        for v in sample_concrete(ps, SEED, 500):
            R, s1, s2, T = (v[P(kind, x)] for x in ("R", "s1", "s2", "T"))
            t_exact &= T == R * abs(s1 - s2) / 2
            ir = read_opendrive(emit_opendrive(build_road_ir(ps, v)))
            L = ir.length
            curve = next(p for p in ir.elevation if p.c != 0.0)
            nxt = [p.s0 for p in ir.elevation if p.s0 > curve.s0]
            length = (nxt[0] if nxt else L) - curve.s0
            worst_slope = max(worst_slope, abs(curve.slope(length) - s2), abs(ir.elevation[-1].slope(
                L - ir.elevation[-1].s0) - s2), abs(length - 2 * T))
            n += 1
    ok = n == 1000 and t_exact and worst_slope < 1e-9
    report(4, ok, f"{n} vertical curves; T exact: {t_exact}; worst end-slope error {worst_slope:.1e}")
    return ok, None


def representative():
    paths = curated_paths()
    picks = [FIG6] + [paths[i] for i in (0, 6, 11, 13, 17, 19, 21, 28)]
    texts = [p.read_text(encoding="utf-8") for p in picks]
    texts.append(vocabulary_corpus()[-1])
    return texts


def criterion_5():
    corpus_fail = [c.name for c, _ in vocabulary_build()[0] if check_valuation(c.space, assign_defaults(c.space))]
    corpus_fail += [c.name for c in curated_build() if check_valuation(c.space, c.valuation)]
    sample_fail, coverage_gaps, total = [], [], 0
    for text in representative():
        ps, _ = detail_scenario(parse_functional_scenario(text))
        vals = sample_concrete(ps, SEED, 1000)
        total += len(vals)
        sample_fail += [ps.name for v in vals if check_valuation(ps, v)]
        for ref, (lo, hi) in feasible_bounds(ps).items():
            xs = [v[ref] for v in vals]
            slack = COVERAGE_TOL * (hi - lo)
            if min(xs) > lo + slack or max(xs) < hi - slack:
                coverage_gaps.append(f"{ps.name}:{ref}")
    ok = not corpus_fail and not sample_fail and not coverage_gaps and total == 10000
    report(5, ok, f"defaults ok on {len(vocabulary_build()[0]) + len(curated_build()) - len(corpus_fail)} scenarios; "
                  f"{total - len(sample_fail)}/{total} samples valid; {len(coverage_gaps)} coverage gaps")
    return ok, (corpus_fail[:3], sample_fail[:3], coverage_gaps[:5])


def criterion_6():
    t0 = time.perf_counter()
    suite = [compile_file(p) for p in curated_paths()]
    kinds = {m.kind for c in suite for m in c.fs.start_maneuvers.values()}
    elevations = {c.fs.road.elevation for c in suite}
    vtypes = {a.vehicle_type for c in suite for a in c.fs.actors}
    failures = []
    for c in suite:
        _, rep = c.run(0.02)
        if not rep.ok:
            failures.append((c.name, rep.as_dict()))
    seconds = time.perf_counter() - t0

    flipped = mutated = 0
    for c in suite + [compile_file(FIG6)]:
        pairs = [(a, m.target) for a, m in c.fs.start_maneuvers.items() if m.kind == "approach"]
        for a, b in pairs:
            for v in sample_concrete(c.space, SEED, MUTATION_SAMPLES):
                free = swap_speeds({r: v[r] for r in c.space.free}, a, b)
                m = realize(c.fs, c.space, c.timeline, complete(c.space, free))
                rep = check_conformance(simulate(m.storyboard, m.road, 0.02), m.fs, m.storyboard.mapping)
                mutated += 1
                flipped += not (rep.maneuver_ok and rep.no_crash)
    rate = flipped / mutated if mutated else 0.0
    ok = (len(suite) == 30 and len(kinds) == 6 and len(elevations) == 5 and len(vtypes) == 2
          and not failures and seconds < 30.0 and mutated > 0 and rate >= 0.95)
    report(6, ok, f"{len(suite) - len(failures)}/{len(suite)} conform, compile and run in {seconds:.2f} s (limit 30 s); "
                  f"mutation caught {flipped}/{mutated} ({rate:.0%})")
    return ok, failures[:3]


def criterion_7():
    bad = []
    compiled = [c for c, _ in vocabulary_build()[0]] + curated_build()
    for c in compiled:
        text = print_functional_scenario(c.fs)
        if parse_functional_scenario(text) != c.fs or print_functional_scenario(parse_functional_scenario(text)) != text:
            bad.append(("dsl", c.name))
        rf = parse_rules_file(c.rules)
        if (rf.space.rules != c.space.rules or rf.space.order != c.space.order
                or dict(rf.space.objects) != dict(c.space.objects) or rf.defaults != c.valuation.values
                or emit_rules_file(rf.space, rf.defaults) != c.rules):
            bad.append(("rules", c.name))
        if read_opendrive(c.xodr) != c.road:
            bad.append(("xodr", c.name))
    ok = not bad
    report(7, ok, f"{len(compiled) - len({n for _, n in bad})}/{len(compiled)} scenarios round-trip "
                  "(DSL, rules file, OpenDRIVE reader)")
    return ok, bad[:5]


def corpus_digests(seed: int, n: int) -> dict[str, str]:
    """sha256 of every emitted byte for the full corpus (with ``n`` sampled examples)."""
    out = {}
    for text in full_corpus():
        c = compile_scenario(text)
        if n:
            c = realize(c.fs, c.space, c.timeline, c.valuation, sample_concrete(c.space, seed, n))
        h = hashlib.sha256()
        for key in ("xodr", "xosc", "rules"):
            h.update(c.outputs()[key])
        out[c.name] = h.hexdigest()
    return out


def criterion_8():
    here = corpus_digests(SEED, 2)
    env = dict(os.environ, PYTHONHASHSEED="12345")
    code = (f"import json, sys; sys.path.insert(0, {str(Path(__file__).parent)!r}); "
            f"from test_acceptance import corpus_digests; print(json.dumps(corpus_digests({SEED}, 2)))")
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, cwd=ROOT,
                          check=False)
    there = json.loads(proc.stdout) if proc.returncode == 0 else {}
    differ = sorted(k for k in here if here[k] != there.get(k))
    ok = proc.returncode == 0 and len(here) == len(full_corpus()) and not differ
    report(8, ok, f"{len(here) - len(differ)}/{len(here)} scenarios byte-identical across two processes")
    return ok, differ[:5] or proc.stderr[-500:]


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("n", range(1, 9))
def test_criterion(n, capsys):
    with capsys.disabled():
        print()
        ok, detail = CRITERIA[n - 1]()
    assert ok, detail


if __name__ == "__main__":
    results = [fn()[0] for fn in CRITERIA]
    sys.exit(0 if all(results) else 1)
