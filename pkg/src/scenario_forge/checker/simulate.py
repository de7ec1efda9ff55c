"""Longitudinal executor for a storyboard on its road."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from ..opendrive import RoadNetworkIR
from ..openscenario import StoryboardIR
from . import _kernel_py as K
from .kernel import run

_TRIGGERS = {"at_time": K.AT_TIME, "gap_below": K.GAP_BELOW, "gap_above": K.GAP_ABOVE,
             "traveled": K.TRAVELED, "lane_change_complete": K.LC_DONE}
_ACTIONS = {"set_speed": K.SET_SPEED, "hold_lane": K.HOLD_LANE, "hold_gap": K.HOLD_GAP,
            "lane_change": K.LANE_CHANGE}


@dataclass(frozen=True)
class Trace:
    """Sampled actor states; ``lane`` holds driving-lane indices (1 = rightmost)."""

    dt: float
    actors: tuple[str, ...]
    lengths: tuple[float, ...]
    s: np.ndarray  # (steps, actors)
    v: np.ndarray
    lane: np.ndarray
    fired: tuple[tuple[int, str, str], ...]  # (step, actor, event)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.s)) * self.dt

    @property
    def steps(self) -> int:
        return len(self.s)

    def column(self, actor: str) -> int:
        return self.actors.index(actor)

    def fired_step(self, event: str) -> int | None:
        return next((k for k, _, e in self.fired if e == event), None)

    def gap(self, a: str, b: str) -> np.ndarray:
        i, j = self.column(a), self.column(b)
        return np.abs(self.s[:, j] - self.s[:, i]) - (self.lengths[i] + self.lengths[j]) * 0.5

    def to_csv(self, lane_ids: dict[int, int] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "actor", "s", "lane", "v"])
        t = self.t
        for k in range(self.steps):
            for i, a in enumerate(self.actors):
                ln = int(self.lane[k, i])
                w.writerow([repr(float(t[k])), a, repr(float(self.s[k, i])),
                            lane_ids[ln] if lane_ids else ln, repr(float(self.v[k, i]))])
        return buf.getvalue()


def encode(sb: StoryboardIR):
    names = [e.name for e in sb.entities]
    idx = {n: i for i, n in enumerate(names)}
    init = {st.actor: st for st in sb.init}
    acts = {act.actor: act for act in sb.acts}
    a_f, a_i, e_f, e_i, x_f, x_i, event_names = [], [], [], [], [], [], []
    for name in names:
        st = init[name]
        events = acts[name].events if name in acts else ()
        a_f.append((st.s, st.speed, sb.entity(name).length))
        a_i.append((sb.mapping.lane_index(st.lane_id), len(e_f), len(events)))
        for ev in events:
            tr = ev.trigger
            who = idx[tr.actor] if tr.actor is not None else idx[name]
            other = idx[tr.other] if tr.other is not None else -1
            e_f.append(tr.value)
            e_i.append((_TRIGGERS[tr.kind], who, other, len(x_f), len(ev.actions)))
            event_names.append((name, ev.name))
            for x in ev.actions:
                x_f.append((x.target if x.target is not None else math.nan,
                            x.rate if x.rate is not None else 0.0,
                            x.duration if x.duration is not None else 0.0))
                x_i.append((_ACTIONS[x.kind], x.direction, idx[x.leader] if x.leader else -1))

    def f2(rows, w):
        return np.ascontiguousarray(np.array(rows, dtype=np.float64).reshape(-1, w))

    def i2(rows, w):
        return np.ascontiguousarray(np.array(rows, dtype=np.int64).reshape(-1, w))

    tables = (f2(a_f, 3), i2(a_i, 3), np.ascontiguousarray(np.array(e_f, dtype=np.float64)),
              i2(e_i, 5), f2(x_f, 3), i2(x_i, 3))
    return names, tables, event_names


def simulate(sb: StoryboardIR, road: RoadNetworkIR, dt: float = 0.02, *, run_out: bool = False) -> Trace:
    """Integrate the storyboard with step ``dt``.

    The run ends at the stop time, when the next step would carry an actor
    past the road end, or (unless ``run_out``) once every event has fired and
    every speed target is reached.
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must lie in (0, 0.1], got {dt}")
    names, tables, event_names = encode(sb)
    if not names:
        empty = np.empty((0, 0))
        return Trace(dt, (), (), empty, empty, np.empty((0, 0), dtype=np.int64), ())
    nrec, S, V, LN, fired = run(float(dt), float(sb.t_end), float(road.length), not run_out, *tables)
    log = sorted((int(k), *event_names[j]) for j, k in enumerate(fired) if k >= 0)
    return Trace(dt, tuple(names), tuple(sb.entity(n).length for n in names),
                 np.asarray(S), np.asarray(V), np.asarray(LN), tuple(log))
