"""Functional scenario -> parameter space + event timeline.

Every keyword becomes one or more parameterized objects; relations come in
three flavours (arrangement edges, object dependencies, parameter
dependencies) and start-scene maneuvers are expanded into fixed event
templates.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Union

from . import intervals
from .config import vehicle_table
from .parameter_space import (
    ConstraintRule,
    Layer,
    ObjectKind,
    ObjectNode,
    Parameter,
    ParameterSpace,
    Relation,
    RelationKind,
    fixed,
    interval,
)
from .rules import (
    Compare,
    Expr,
    Num,
    ParamRef,
    Ref,
    add,
    call,
    compare,
    div,
    maximum,
    mul,
    num,
    references,
    sub,
)
from .scenario_model import (
    LANE_SHIFT,
    FunctionalScenario,
    RoadSpec,
    ScenarioError,
    lane_sets,
    maneuver_post_lanes,
    order_preserved,
    validate_scenario,
)

# design constants (m, m/s, m/s^2, s)
DELTA_MIN = 2.78          # approach / fall-back speed surplus (10 km/h)
G_MIN = 20.0              # initial bumper gap between vehicles sharing a lane
SETTLE_GAP = 10.0         # bumper gap left after an approach has settled
TRIGGER_MARGIN = 5.0      # start gap must clear the gap trigger by this much
MATCH_RATE = 2.0          # speed ramp used by every set_speed action
LAT_RATE_MAX = 1.4        # lateral rate bound for lane changes
ORDER_MARGIN = 1.0        # centre distance kept between vehicles in other lanes
T_END = 120.0             # global stop time
TIME_MARGIN = 1.0         # slack between maneuver completion and the end check

ROAD = "road"
SHOULDER = "shoulder"

_ELEVATION_RANGES = {
    "crest": ((13000.0, 50000.0), (0.01, 0.04), (-0.04, -0.01)),
    "sag": ((8800.0, 50000.0), (-0.04, -0.01), (0.01, 0.04)),
}
_VISUAL_RANGE = {
    "clear": (100000.0, 100000.0),
    "overcast": (10000.0, 50000.0),
    "rain": (1000.0, 10000.0),
    "fog": (50.0, 200.0),
}
_DAYTIME = {
    "morning": (25200.0, 36000.0),
    "midday": (39600.0, 50400.0),
    "evening": (61200.0, 72000.0),
    "night": (79200.0, 86399.0),
}


class DetailingError(ValueError):
    pass


class TimelineError(DetailingError):
    def __init__(self, actor: str, maneuver: str, reason: str):
        self.actor, self.maneuver = actor, maneuver
        super().__init__(f"{actor} {maneuver}: {reason}")


# -- timeline types -------------------------------------------------------------

Value = Union[ParamRef, float]


@dataclass(frozen=True)
class Trigger:
    kind: str  # at_time | gap_below | gap_above | lane_change_complete | traveled
    value: Value = 0.0
    actor: str | None = None
    other: str | None = None


@dataclass(frozen=True)
class Action:
    kind: str  # set_speed | lane_change | hold_lane | hold_gap
    target: Value | None = None  # speed for set_speed, gap for hold_gap
    rate: Value | None = None
    direction: int = 0
    duration: Value | None = None
    leader: str | None = None


@dataclass(frozen=True)
class Event:
    name: str
    trigger: Trigger
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class Act:
    actor: str
    maneuver: str
    events: tuple[Event, ...]


@dataclass(frozen=True)
class EventTimeline:
    acts: tuple[Act, ...]

    def act(self, actor: str) -> Act:
        for a in self.acts:
            if a.actor == actor:
                return a
        raise KeyError(actor)

    def events(self) -> list[tuple[str, Event]]:
        return [(a.actor, e) for a in self.acts for e in a.events]


def resolve(value: Value | None, values) -> float | None:
    if value is None:
        return None
    if isinstance(value, ParamRef):
        return float(values[value])
    return float(value)


# -- helpers --------------------------------------------------------------------

def lane_id(index: int) -> str:
    return f"lane_{index}"


def maneuver_id(actor: str, kind: str) -> str:
    return f"{actor}_{kind}"


def _r(obj: str, name: str) -> Ref:
    return Ref(ParamRef(obj, name))


def _scaled(expr: Expr, k: int) -> Expr:
    return expr if k == 1 else mul(expr, num(k))


def _rule(rule_id: str, role: str, expr: Compare) -> ConstraintRule:
    objs = list(dict.fromkeys(r.obj for r in references(expr)))
    if len(objs) == 1:
        return ConstraintRule(rule_id, role, expr, RelationKind.PARAMETER_DEPENDENCY, objs[0])
    return ConstraintRule(rule_id, role, expr, RelationKind.OBJECT_DEPENDENCY)


def _define(rule_id: str, target: ParamRef, expr: Expr) -> ConstraintRule:
    return _rule(rule_id, "define", Compare("=", Ref(target), expr))


def _derived(name: str, unit: str, lo: float, hi: float, rule_id: str) -> Parameter:
    return interval(name, unit, lo, hi, derived_by=rule_id)


# -- road -----------------------------------------------------------------------

def expand_road_keywords(road: RoadSpec) -> tuple[list[ObjectNode], list[ConstraintRule]]:
    """Layer 1/2 objects for a road spec plus their in-object dependencies."""
    objs = [ObjectNode(ROAD, ObjectKind.ROAD_SECTION, Layer.ROAD, (
        interval("L", "m", 500, 2000),
        interval("d_slot", "m", 30, 150),
    ), ("lanes",))]
    for i in range(1, road.n_driving_lanes + 1):
        lid = lane_id(i)
        objs.append(ObjectNode(lid, ObjectKind.LANE, Layer.ROAD, (
            interval("w", "m", 3.25, 3.75),
            _derived("w_end", "m", 3.25, 3.75, f"{lid}.w_end"),
        ), ("lanes",)))
    if road.hard_shoulder:
        objs.append(ObjectNode(SHOULDER, ObjectKind.LANE, Layer.ROAD, (
            interval("w", "m", 2.0, 3.0),
            _derived("w_end", "m", 2.0, 3.0, f"{SHOULDER}.w_end"),
        ), ("hard_shoulder",)))

    if road.alignment == "straight":
        params: tuple[Parameter, ...] = ()
    else:
        sign = 1 if road.alignment == "curve_left" else -1
        params = (interval("R_h", "m", 900, 10000), fixed("direction", "1", sign))
    objs.append(ObjectNode(road.alignment, ObjectKind.ALIGNMENT, Layer.ROAD, params, (road.alignment,)))

    kind = road.elevation
    if kind == "plane":
        params = (fixed("s1", "1", 0),)
    elif kind in ("incline", "decline"):
        params = (interval("s", "1", 0.01, 0.04),)
    else:
        (rlo, rhi), (alo, ahi), (blo, bhi) = _ELEVATION_RANGES[kind]
        params = (
            interval("R", "m", rlo, rhi),
            interval("s1", "1", alo, ahi),
            interval("s2", "1", blo, bhi),
            _derived("T", "m", rlo * 0.01, rhi * 0.04, f"{kind}.T"),
        )
    objs.append(ObjectNode(kind, ObjectKind.ELEVATION, Layer.ROAD, params, (kind,)))

    if road.speed_limit is not None:
        objs.append(ObjectNode("speed_limit", ObjectKind.SIGNAL, Layer.INFRASTRUCTURE, (
            interval("s_pos", "m", 0, 2000),
            fixed("value", "1", road.speed_limit),
        ), ("speed_limit",)))
    for side in sorted(road.guard_rail):
        gid = f"guard_rail_{side}"
        objs.append(ObjectNode(gid, ObjectKind.GUARD_RAIL, Layer.INFRASTRUCTURE, (
            interval("s_pos", "m", 0, 2000),
            _derived("length", "m", 0, 2000, f"{gid}.length"),
        ), ("guard_rail",)))
    return objs, derive_parameter_dependencies(objs)


def derive_parameter_dependencies(objects: Iterable[ObjectNode]) -> list[ConstraintRule]:
    """Define rules that live entirely inside one object."""
    out = []
    for o in objects:
        if o.kind is ObjectKind.ELEVATION and o.id in _ELEVATION_RANGES:
            out.append(_define(f"{o.id}.T", o.ref("T"), div(
                mul(_r(o.id, "R"), call("abs", sub(_r(o.id, "s1"), _r(o.id, "s2")))), num(2))))
    return out


def expand_environment(fs: FunctionalScenario) -> list[ObjectNode]:
    env = fs.environment
    vlo, vhi = _VISUAL_RANGE[env.weather]
    vis = fixed("visual_range", "m", vlo) if vlo == vhi else interval("visual_range", "m", vlo, vhi)
    rain = interval("precipitation", "1", 0.1, 1.0) if env.weather == "rain" else fixed("precipitation", "1", 0)
    tlo, thi = _DAYTIME[env.daytime]
    return [
        ObjectNode("weather", ObjectKind.ENVIRONMENT, Layer.ENVIRONMENT, (vis, rain), (env.weather,)),
        ObjectNode("daytime", ObjectKind.ENVIRONMENT, Layer.ENVIRONMENT,
                   (interval("time_of_day", "s", tlo, thi),), (env.daytime,)),
    ]


# -- actors ---------------------------------------------------------------------

def _speed_range(vehicle_type: str, limit: int | None) -> tuple[float, float]:
    lo, hi = vehicle_table()[vehicle_type].v0
    if limit is not None:
        hi = min(hi, limit / 3.6)
    if hi < lo:
        raise DetailingError(f"{vehicle_type} speed range empty under limit {limit} km/h")
    return lo, hi


def expand_actors(fs: FunctionalScenario) -> list[ObjectNode]:
    """Vehicle objects followed by maneuver objects (explicit start maneuvers only)."""
    table = vehicle_table()
    out = []
    for a in fs.actors:
        vt = table[a.vehicle_type]
        lo, hi = _speed_range(a.vehicle_type, fs.road.speed_limit)
        m = fs.maneuver(a.id)
        derived_by = f"{maneuver_id(a.id, m.kind)}.speed" if m.kind == "follow_vehicle" else None
        out.append(ObjectNode(a.id, ObjectKind.VEHICLE, Layer.OBJECTS, (
            interval("v0", "m/s", lo, hi, derived_by=derived_by),
            fixed("length", "m", vt.length),
            fixed("width", "m", vt.width),
            fixed("height", "m", vt.height),
        ), (a.vehicle_type,)))
    for a in fs.actors:
        if a.id not in fs.start_maneuvers:
            continue
        kind = fs.start_maneuvers[a.id].kind
        mid = maneuver_id(a.id, kind)
        if kind in ("approach", "fall_back"):
            g = (20, 60) if kind == "approach" else (60, 300)
            params = (
                interval("g_end", "m", *g),
                fixed("a", "m/s^2", MATCH_RATE),
                _derived("gap0", "m", -100, 3000, f"{mid}.gap0"),
                _derived("t_done", "s", 0, T_END, f"{mid}.t_done"),
            )
        elif kind == "follow_vehicle":
            params = (_derived("g_follow", "m", G_MIN, 3000, f"{mid}.g_follow"),)
        elif kind in LANE_SHIFT:
            params = (
                interval("d_trigger", "m", 10, 150),
                interval("d_lc", "s", 3, 6),
                _derived("lat_rate", "m/s", 0, LAT_RATE_MAX, f"{mid}.lat_rate"),
                _derived("t_done", "s", 0, T_END, f"{mid}.t_done"),
            )
        else:
            params = ()
        out.append(ObjectNode(mid, ObjectKind.MANEUVER_EVENT, Layer.OBJECTS, params, (kind,)))
    return out


# -- relations ------------------------------------------------------------------

def driving_lanes_right_to_left(n: int, hard_shoulder: bool) -> list[str]:
    return ([SHOULDER] if hard_shoulder else []) + [lane_id(i) for i in range(1, n + 1)]


def derive_arrangement_relations(fs: FunctionalScenario) -> list[Relation]:
    """lane_of, left_neighbor (right, left), positioned_on, ahead_of (front, behind)."""
    A = RelationKind.ARRANGEMENT
    lanes = driving_lanes_right_to_left(fs.road.n_driving_lanes, fs.road.hard_shoulder)
    out = [Relation(A, (lane, ROAD), "lane_of") for lane in lanes]
    out += [Relation(A, (r, l), "left_neighbor") for r, l in zip(lanes, lanes[1:])]
    out += [Relation(A, (a.id, lane_id(a.start.lane)), "positioned_on") for a in fs.actors]
    for a, b in combinations(fs.actors, 2):
        if a.start.slot != b.start.slot and a.start.lane == b.start.lane:
            front, back = (a, b) if a.start.slot > b.start.slot else (b, a)
            out.append(Relation(A, (front.id, back.id), "ahead_of"))
    return out


def _speed_envelope(fs: FunctionalScenario, actor: str) -> tuple[Expr, Expr]:
    """(highest, lowest) speed an actor can hold under its template."""
    m = fs.maneuver(actor)
    v = _r(actor, "v0")
    if m.kind == "approach":
        return v, _r(m.target, "v0")
    if m.kind == "fall_back":
        return _r(m.target, "v0"), v
    return v, v


def _bumper_gap(front, back, d_slot: Expr) -> Expr:
    return sub(_scaled(d_slot, front.start.slot - back.start.slot),
               div(add(_r(front.id, "length"), _r(back.id, "length")), num(2)))


def _run_time(objects: Iterable[ObjectNode]) -> Expr | None:
    refs = [Ref(ParamRef(o.id, "t_done")) for o in objects
            if o.kind is ObjectKind.MANEUVER_EVENT and any(p.name == "t_done" for p in o.parameters)]
    return maximum(*refs) if refs else None


def derive_object_dependencies(fs: FunctionalScenario, objects: Iterable[ObjectNode]) -> list[ConstraintRule]:
    objects = list(objects)
    ids = {o.id for o in objects}
    L, d = _r(ROAD, "L"), _r(ROAD, "d_slot")
    out: list[ConstraintRule] = []

    # lane width continuity (single section: the end width repeats the start width)
    for o in objects:
        if o.kind is ObjectKind.LANE:
            out.append(_define(f"{o.id}.w_end", o.ref("w_end"), _r(o.id, "w")))

    elev = next(o for o in objects if o.kind is ObjectKind.ELEVATION)
    if elev.id in _ELEVATION_RANGES:
        out.append(_rule(f"{elev.id}.fit", "check", compare("<=", mul(num(2), _r(elev.id, "T")), L)))
    if "speed_limit" in ids:
        out.append(_rule("speed_limit.on_road", "check", compare("<=", _r("speed_limit", "s_pos"), L)))
    for o in objects:
        if o.kind is ObjectKind.GUARD_RAIL:
            out.append(_rule(f"{o.id}.on_road", "check",
                             compare("<=", _r(o.id, "s_pos"), sub(L, num(50)))))
            out.append(_define(f"{o.id}.length", o.ref("length"), sub(L, _r(o.id, "s_pos"))))

    actors = {a.id: a for a in fs.actors}
    for a in fs.actors:
        if a.id not in fs.start_maneuvers:
            continue
        m = fs.start_maneuvers[a.id]
        mid = maneuver_id(a.id, m.kind)
        va = _r(a.id, "v0")
        if m.kind in ("approach", "fall_back"):
            t = actors[m.target]
            vt = _r(t.id, "v0")
            gap0, g_end, rate = _r(mid, "gap0"), _r(mid, "g_end"), _r(mid, "a")
            out.append(_define(f"{mid}.gap0", ParamRef(mid, "gap0"), _bumper_gap(t, a, d)))
            if m.kind == "approach":
                dv = sub(va, vt)
                out.append(_rule(f"{mid}.speed", "check", compare(">=", va, add(vt, num(DELTA_MIN)))))
                out.append(_rule(f"{mid}.settle", "check", compare(
                    ">=", sub(g_end, div(mul(dv, dv), mul(num(2), rate))), num(SETTLE_GAP))))
                out.append(_rule(f"{mid}.trigger", "check",
                                 compare(">=", gap0, add(g_end, num(TRIGGER_MARGIN)))))
                out.append(_define(f"{mid}.t_done", ParamRef(mid, "t_done"),
                                   add(div(sub(gap0, g_end), dv), div(dv, rate))))
            else:
                dv = sub(vt, va)
                out.append(_rule(f"{mid}.speed", "check", compare("<=", va, sub(vt, num(DELTA_MIN)))))
                out.append(_rule(f"{mid}.trigger", "check",
                                 compare(">=", g_end, add(gap0, num(TRIGGER_MARGIN)))))
                out.append(_define(f"{mid}.t_done", ParamRef(mid, "t_done"),
                                   add(div(sub(g_end, gap0), dv), div(dv, rate))))
        elif m.kind == "follow_vehicle":
            t = actors[m.target]
            out.append(_define(f"{mid}.speed", ParamRef(a.id, "v0"), _r(t.id, "v0")))
            out.append(_define(f"{mid}.g_follow", ParamRef(mid, "g_follow"), _bumper_gap(t, a, d)))
        elif m.kind in LANE_SHIFT:
            dest = lane_id(a.start.lane + LANE_SHIFT[m.kind])
            out.append(_define(f"{mid}.lat_rate", ParamRef(mid, "lat_rate"),
                               div(_r(dest, "w"), _r(mid, "d_lc"))))
            out.append(_rule(f"{mid}.comfort", "check",
                             compare("<=", _r(mid, "lat_rate"), num(LAT_RATE_MAX))))
            out.append(_define(f"{mid}.t_done", ParamRef(mid, "t_done"),
                               add(div(_r(mid, "d_trigger"), va), _r(mid, "d_lc"))))

    # pairwise spacing and ordering
    t_run = _run_time(objects)
    horizon = add(t_run, num(TIME_MARGIN)) if t_run is not None else num(TIME_MARGIN)
    post = maneuver_post_lanes(fs)
    shares = lane_sets(fs, post)
    env = {a.id: _speed_envelope(fs, a.id) for a in fs.actors}
    for a, b in combinations(fs.actors, 2):
        if a.start.slot == b.start.slot:
            lead = maximum(sub(env[a.id][0], env[b.id][1]), sub(env[b.id][0], env[a.id][1]))
            out.append(_rule(f"tie.{a.id}.{b.id}", "check",
                             compare("<=", mul(lead, horizon), div(d, num(2)))))
            continue
        front, back = (a, b) if a.start.slot > b.start.slot else (b, a)
        if shares[a.id] & shares[b.id]:
            out.append(_rule(f"gap.{back.id}.{front.id}", "check",
                             compare(">=", _bumper_gap(front, back, d), num(G_MIN))))
            linked = fs.maneuver(back.id).target == front.id
            if not linked:
                out.append(_rule(f"follow.{back.id}.{front.id}", "check",
                                 compare("<=", env[back.id][0], env[front.id][1])))
        else:
            lag = sub(env[front.id][1], env[back.id][0])
            out.append(_rule(f"order.{back.id}.{front.id}", "check", compare(
                ">=", add(_scaled(d, front.start.slot - back.start.slot), mul(lag, horizon)),
                num(ORDER_MARGIN))))

    for a in fs.actors:
        half = div(_r(a.id, "length"), num(2))
        origin: Expr = div(L, num(2))
        if a.start.slot > 0:
            origin = add(origin, _scaled(d, a.start.slot))
        elif a.start.slot < 0:
            origin = sub(origin, _scaled(d, -a.start.slot))
            out.append(_rule(f"entry.{a.id}", "check", compare(">=", sub(origin, half), num(0))))
        out.append(_rule(f"exit.{a.id}", "check", compare(
            "<=", add(add(origin, half), mul(env[a.id][0], horizon)), L)))
    if t_run is not None:
        out.append(_rule("horizon", "check", compare("<=", horizon, num(T_END))))
    return out


def _dependency_relations(rules: Iterable[ConstraintRule]) -> list[Relation]:
    out = []
    for r in rules:
        objs = tuple(dict.fromkeys(ref.obj for ref in r.scope))
        out.append(Relation(r.relation, objs, rule=r.id))
    return out


def prune_tautologies(ps: ParameterSpace) -> ParameterSpace:
    """Drop check rules that hold everywhere on the parameter box."""
    box = {ref: intervals.Interval(*ps.parameter(ref).bounds) for ref in ps.free}
    keep = []
    for r in ps.rules:
        if r.role == "check" and intervals.always_holds(ps.inline_derived(r.expr), box):
            continue
        keep.append(r)
    kept = {r.id for r in keep}
    relations = tuple(x for x in ps.relations if x.rule is None or x.rule in kept)
    return ParameterSpace(ps.name, ps.objects, relations, tuple(keep), ps.order)


# -- maneuvers ------------------------------------------------------------------

def expand_maneuvers(fs: FunctionalScenario, ps: ParameterSpace) -> EventTimeline:
    acts = []
    for a in fs.actors:
        m = fs.maneuver(a.id)
        mid = maneuver_id(a.id, m.kind)
        v0 = ParamRef(a.id, "v0")
        if m.kind == "follow_lane":
            events = (Event(f"{a.id}_hold", Trigger("at_time", 0.0),
                            (Action("hold_lane"), Action("set_speed", target=v0, rate=MATCH_RATE))),)
        elif m.kind in ("approach", "fall_back"):
            rate = ParamRef(mid, "a")
            trig = "gap_below" if m.kind == "approach" else "gap_above"
            events = (
                Event(f"{a.id}_cruise", Trigger("at_time", 0.0),
                      (Action("set_speed", target=v0, rate=rate),)),
                Event(f"{a.id}_{'match' if m.kind == 'approach' else 'release'}",
                      Trigger(trig, ParamRef(mid, "g_end"), a.id, m.target),
                      (Action("set_speed", target=ParamRef(m.target, "v0"), rate=rate),)),
            )
        elif m.kind == "follow_vehicle":
            events = (Event(f"{a.id}_follow", Trigger("at_time", 0.0),
                            (Action("hold_gap", target=ParamRef(mid, "g_follow"), leader=m.target),)),)
        else:
            events = (Event(f"{a.id}_lane_change", Trigger("traveled", ParamRef(mid, "d_trigger"), a.id),
                            (Action("lane_change", direction=LANE_SHIFT[m.kind],
                                    duration=ParamRef(mid, "d_lc")),)),)
        acts.append(Act(a.id, m.kind, events))
    tl = EventTimeline(tuple(acts))
    check_timeline(fs, tl)
    return tl


def timeline_post_state(fs: FunctionalScenario, tl: EventTimeline) -> dict[str, int]:
    """Discrete post-state: each actor's lane after all of its events fired."""
    lanes = {a.id: a.start.lane for a in fs.actors}
    for act in tl.acts:
        for ev in act.events:
            for action in ev.actions:
                if action.kind == "lane_change":
                    lanes[act.actor] += action.direction
    return lanes


def check_timeline(fs: FunctionalScenario, tl: EventTimeline) -> None:
    for act in tl.acts:
        lateral = [x for e in act.events for x in e.actions if x.kind in ("lane_change", "hold_lane")]
        if len(lateral) > 1:
            raise TimelineError(act.actor, act.maneuver, "more than one lateral action")
    lanes = timeline_post_state(fs, tl)
    for a in fs.actors:
        end = fs.end_positions[a.id]
        if not 1 <= lanes[a.id] <= fs.road.n_driving_lanes or lanes[a.id] != end.lane:
            raise TimelineError(a.id, fs.maneuver(a.id).kind, f"ends in lane {lanes[a.id]}, end scene wants {end.lane}")
    # templates never overtake, so the end order must be the start order
    for x, y in order_preserved(fs, fs.end_positions):
        raise TimelineError(x, fs.maneuver(x).kind, f"end scene reorders {x} and {y}")


# -- entry point ----------------------------------------------------------------

def parameter_order(objects: list[ObjectNode]) -> tuple[ParamRef, ...]:
    """Declaration order, except the grid spacing goes last.

    The default pass shifts the last-ordered parameter of a violated rule, and
    the spacing is the knob most rules can bend.
    """
    refs = [ParamRef(o.id, p.name) for o in objects for p in o.parameters]
    spacing = ParamRef(ROAD, "d_slot")
    return tuple([r for r in refs if r != spacing] + [spacing])


def detail_scenario(fs: FunctionalScenario) -> tuple[ParameterSpace, EventTimeline]:
    diags = validate_scenario(fs)
    if diags:
        raise ScenarioError(diags)
    road_objs, rules = expand_road_keywords(fs.road)
    objects = road_objs + expand_environment(fs) + expand_actors(fs)
    seen: set[str] = set()
    for o in objects:
        if o.id in seen:
            raise DetailingError(f"object id {o.id!r} produced twice")
        seen.add(o.id)
    rules = rules + derive_object_dependencies(fs, objects)
    relations = derive_arrangement_relations(fs) + _dependency_relations(rules)
    ps = ParameterSpace(fs.name, {o.id: o for o in objects}, tuple(relations), tuple(rules),
                        parameter_order(objects))
    ps = prune_tautologies(ps)
    return ps, expand_maneuvers(fs, ps)

