"""The four execution questions, answered from a trace."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..openscenario import GridMapping
from ..rules import ParamRef
from ..scenario_model import LANE_SHIFT, FunctionalScenario
from .simulate import Trace

CRASH_GAP = 5.0


@dataclass(frozen=True)
class ConformanceReport:
    start_ok: bool
    maneuver_ok: bool
    no_crash: bool
    end_ok: bool
    min_gap: float
    completion_time: float
    details: dict[str, dict[str, bool]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.start_ok and self.maneuver_ok and self.no_crash and self.end_ok

    def as_dict(self) -> dict:
        return {"start_ok": self.start_ok, "maneuver_ok": self.maneuver_ok, "no_crash": self.no_crash,
                "end_ok": self.end_ok, "min_gap": self.min_gap if math.isfinite(self.min_gap) else None,
                "completion_time": self.completion_time, "details": self.details}


def _monotone_until(gap: np.ndarray, k: int | None, sign: int) -> bool:
    """gap strictly falls (sign -1) or rises (+1) over samples 0..k."""
    if k is None or k < 1:
        return False
    d = np.diff(gap[: k + 1])
    return bool(np.all(d < 0) if sign < 0 else np.all(d > 0))


def maneuver_signature(trace: Trace, fs: FunctionalScenario, actor: str) -> bool:
    m = fs.maneuver(actor)
    lanes = trace.lane[:, trace.column(actor)]
    if m.kind in ("approach", "fall_back"):
        event = f"{actor}_{'match' if m.kind == 'approach' else 'release'}"
        sign = -1 if m.kind == "approach" else 1
        return _monotone_until(trace.gap(actor, m.target), trace.fired_step(event), sign)
    if m.kind in LANE_SHIFT:
        steps = np.diff(lanes)
        moves = steps[steps != 0]
        return len(moves) == 1 and int(moves[0]) == LANE_SHIFT[m.kind]
    return bool(np.all(lanes == lanes[0]))


def min_same_lane_gap(trace: Trace) -> float:
    best = math.inf
    n = len(trace.actors)
    for i in range(n):
        for j in range(i + 1, n):
            same = trace.lane[:, i] == trace.lane[:, j]
            if same.any():
                g = trace.gap(trace.actors[i], trace.actors[j])[same]
                best = min(best, float(g.min()))
    return best


def check_conformance(trace: Trace, fs: FunctionalScenario, mapping: GridMapping) -> ConformanceReport:
    details: dict[str, dict[str, bool]] = {}
    if trace.steps == 0:
        return ConformanceReport(True, True, True, True, math.inf, 0.0, details)
    for a in fs.actors:
        i = trace.column(a.id)
        s0 = mapping.s_of(a.start.slot)
        details[a.id] = {
            "start": bool(trace.lane[0, i] == a.start.lane and abs(trace.s[0, i] - s0) <= mapping.d_slot / 2),
            "maneuver": maneuver_signature(trace, fs, a.id),
            "end_lane": bool(trace.lane[-1, i] == fs.end_positions[a.id].lane),
        }
    order_ok = True
    for a in fs.actors:
        for b in fs.actors:
            ea, eb = fs.end_positions[a.id], fs.end_positions[b.id]
            if ea.slot < eb.slot and not trace.s[-1, trace.column(a.id)] < trace.s[-1, trace.column(b.id)]:
                order_ok = False
    gap = min_same_lane_gap(trace)
    return ConformanceReport(
        start_ok=all(d["start"] for d in details.values()),
        maneuver_ok=all(d["maneuver"] for d in details.values()),
        no_crash=gap >= CRASH_GAP,
        end_ok=order_ok and all(d["end_lane"] for d in details.values()),
        min_gap=gap,
        completion_time=float(trace.t[-1]),
        details=details,
    )


def swap_speeds(values, a: str, b: str) -> dict:
    """Valuation with the initial speeds of ``a`` and ``b`` exchanged.

    Applied to an approach pair this breaks the speed-ordering rule on purpose;
    the checker should notice.
    """
    out = dict(values)
    ra, rb = ParamRef(a, "v0"), ParamRef(b, "v0")
    out[ra], out[rb] = values[rb], values[ra]
    return out
