"""Storyboard IR (layers 4-5), OpenSCENARIO 1.0 output and the rules file."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from lxml import etree

from .config import vehicle_table
from .detailing import ROAD, T_END, EventTimeline, resolve
from .opendrive import RoadNetworkIR, fmt
from .parameter_space import (
    ConstraintRule,
    Layer,
    ObjectKind,
    ObjectNode,
    Parameter,
    ParameterSpace,
    Relation,
    RelationKind,
    as_mapping,
)
from .rules import ParamRef, parse_infix
from .scenario_model import FunctionalScenario, GridPosition

RULES_VERSION = "scenario-forge-rules/1"
CONSUMED_KINDS = (ObjectKind.VEHICLE, ObjectKind.MANEUVER_EVENT, ObjectKind.ENVIRONMENT)
CONSUMED_LAYERS = (Layer.OBJECTS, Layer.ENVIRONMENT)

_CLOUDS = {"clear": "free", "overcast": "overcast", "rain": "rainy", "fog": "cloudy"}
# sun (intensity lx, azimuth rad, elevation rad) per daytime keyword
_SUN = {
    "morning": (30000.0, 1.57, 0.35),
    "midday": (100000.0, 3.14, 1.0),
    "evening": (20000.0, 4.71, 0.2),
    "night": (0.0, 0.0, -0.5),
}


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridMapping:
    s_origin: float
    d_slot: float
    lane_ids: dict[int, int]  # driving lane index -> road lane id
    road_length: float

    @classmethod
    def from_road(cls, road: RoadNetworkIR, d_slot: float) -> "GridMapping":
        n = sum(1 for ln in road.lane_sections[0].lanes if ln.type == "driving")
        return cls(road.length / 2.0, d_slot, {i: road.driving_lane_id(i) for i in range(1, n + 1)}, road.length)

    def s_of(self, slot: int) -> float:
        return self.s_origin + slot * self.d_slot

    def position(self, pos: GridPosition) -> tuple[int, float]:
        s = self.s_of(pos.slot)
        if not 0.0 <= s <= self.road_length:
            raise GridError("grid exceeds section")
        return self.lane_ids[pos.lane], s

    def lane_index(self, lid: int) -> int:
        for k, v in self.lane_ids.items():
            if v == lid:
                return k
        raise KeyError(lid)


@dataclass(frozen=True)
class Entity:
    name: str
    category: str
    length: float
    width: float
    height: float
    max_speed: float
    max_acceleration: float
    max_deceleration: float


@dataclass(frozen=True)
class InitState:
    actor: str
    road_id: str
    lane_id: int
    s: float
    offset: float
    speed: float


@dataclass(frozen=True)
class TriggerIR:
    kind: str
    value: float = 0.0
    actor: str | None = None
    other: str | None = None
    after: str | None = None  # name of the event that must have fired first


@dataclass(frozen=True)
class ActionIR:
    kind: str
    target: float | None = None
    rate: float | None = None
    direction: int = 0
    duration: float | None = None
    leader: str | None = None


@dataclass(frozen=True)
class EventIR:
    name: str
    trigger: TriggerIR
    actions: tuple[ActionIR, ...]


@dataclass(frozen=True)
class ActIR:
    actor: str
    maneuver: str
    events: tuple[EventIR, ...]


@dataclass(frozen=True)
class EnvironmentIR:
    weather: str
    daytime: str
    time_of_day: float
    visual_range: float
    precipitation: float


@dataclass(frozen=True)
class StoryboardIR:
    name: str
    entities: tuple[Entity, ...]
    init: tuple[InitState, ...]
    acts: tuple[ActIR, ...]
    environment: EnvironmentIR
    mapping: GridMapping
    t_end: float = T_END

    def entity(self, name: str) -> Entity:
        return next(e for e in self.entities if e.name == name)


def build_storyboard(tl: EventTimeline, ps: ParameterSpace, v, road: RoadNetworkIR,
                     fs: FunctionalScenario) -> StoryboardIR:
    values = as_mapping(v)
    table = vehicle_table()
    mapping = GridMapping.from_road(road, values[ParamRef(ROAD, "d_slot")])
    entities, init = [], []
    for a in fs.actors:
        vt = table[a.vehicle_type]
        g = lambda n: values[ParamRef(a.id, n)]  # noqa: E731
        entities.append(Entity(a.id, a.vehicle_type, g("length"), g("width"), g("height"),
                               vt.max_speed, vt.max_acceleration, vt.max_deceleration))
        lid, s = mapping.position(a.start)
        init.append(InitState(a.id, road.road_id, lid, s, 0.0, g("v0")))
    acts = []
    for act in tl.acts:
        events, prev = [], None
        for ev in act.events:
            tr = ev.trigger
            trig = TriggerIR(tr.kind, resolve(tr.value, values), tr.actor, tr.other, prev)
            actions = tuple(ActionIR(x.kind, resolve(x.target, values), resolve(x.rate, values),
                                     x.direction, resolve(x.duration, values), x.leader)
                            for x in ev.actions)
            events.append(EventIR(ev.name, trig, actions))
            prev = ev.name
        acts.append(ActIR(act.actor, act.maneuver, tuple(events)))
    env = EnvironmentIR(fs.environment.weather, fs.environment.daytime,
                        values[ParamRef("daytime", "time_of_day")],
                        values[ParamRef("weather", "visual_range")],
                        values[ParamRef("weather", "precipitation")])
    return StoryboardIR(fs.name, tuple(entities), tuple(init), tuple(acts), env, mapping)


# -- XML ------------------------------------------------------------------------

def _e(parent, tag, **attrs):
    return etree.SubElement(parent, tag, attrs)


def _clock(seconds: float) -> str:
    sec = int(round(seconds)) % 86400
    return f"2020-06-01T{sec // 3600:02d}:{sec % 3600 // 60:02d}:{sec % 60:02d}"


def _time_condition(group, name: str, value: float):
    c = _e(group, "Condition", name=name, delay="0", conditionEdge="rising")
    _e(_e(c, "ByValueCondition"), "SimulationTimeCondition", value=fmt(value), rule="greaterThan")


def _private_action(parent, action: ActionIR, actor: str):
    pa = _e(parent, "PrivateAction")
    if action.kind == "set_speed":
        sa = _e(_e(pa, "LongitudinalAction"), "SpeedAction")
        _e(sa, "SpeedActionDynamics", dynamicsShape="linear", value=fmt(action.rate), dynamicsDimension="rate")
        _e(_e(sa, "SpeedActionTarget"), "AbsoluteTargetSpeed", value=fmt(action.target))
    elif action.kind == "hold_gap":
        _e(_e(pa, "LongitudinalAction"), "LongitudinalDistanceAction", entityRef=action.leader,
           distance=fmt(action.target), freespace="true", continuous="true")
    elif action.kind == "lane_change":
        lc = _e(_e(pa, "LateralAction"), "LaneChangeAction")
        _e(lc, "LaneChangeActionDynamics", dynamicsShape="sinusoidal", value=fmt(action.duration),
           dynamicsDimension="time")
        _e(_e(lc, "LaneChangeTarget"), "RelativeTargetLane", entityRef=actor, value=str(action.direction))
    elif action.kind == "hold_lane":
        lo = _e(_e(pa, "LateralAction"), "LaneOffsetAction", continuous="true")
        _e(lo, "LaneOffsetActionDynamics", dynamicsShape="step")
        _e(_e(lo, "LaneOffsetTarget"), "AbsoluteTargetLaneOffset", value="0")
    else:
        raise ValueError(f"unknown action {action.kind}")


def _start_trigger(parent, ev: EventIR, lane_change_events: dict[str, str]):
    group = _e(_e(parent, "StartTrigger"), "ConditionGroup")
    tr = ev.trigger
    if tr.after is not None:
        c = _e(group, "Condition", name=f"{ev.name}_after", delay="0", conditionEdge="none")
        _e(_e(c, "ByValueCondition"), "StoryboardElementStateCondition", storyboardElementType="event",
           storyboardElementRef=tr.after, state="endTransition")
    if tr.kind == "at_time":
        _time_condition(group, f"{ev.name}_time", tr.value)
        return
    if tr.kind == "lane_change_complete":
        c = _e(group, "Condition", name=f"{ev.name}_lc", delay="0", conditionEdge="rising")
        _e(_e(c, "ByValueCondition"), "StoryboardElementStateCondition", storyboardElementType="event",
           storyboardElementRef=lane_change_events[tr.actor], state="endTransition")
        return
    c = _e(group, "Condition", name=f"{ev.name}_cond", delay="0", conditionEdge="rising")
    by = _e(c, "ByEntityCondition")
    _e(_e(by, "TriggeringEntities", triggeringEntitiesRule="any"), "EntityRef", entityRef=tr.actor)
    ec = _e(by, "EntityCondition")
    if tr.kind == "traveled":
        _e(ec, "TraveledDistanceCondition", value=fmt(tr.value))
    else:
        _e(ec, "RelativeDistanceCondition", entityRef=tr.other, freespace="true",
           relativeDistanceType="longitudinal", value=fmt(tr.value),
           rule="lessThan" if tr.kind == "gap_below" else "greaterThan")


def emit_openscenario(sb: StoryboardIR, xodr_path: str) -> bytes:
    root = etree.Element("OpenSCENARIO")
    _e(root, "FileHeader", revMajor="1", revMinor="0", date="2020-01-01T00:00:00",
       description=sb.name, author="scenario_forge")
    _e(root, "ParameterDeclarations")
    _e(root, "CatalogLocations")
    rn = _e(root, "RoadNetwork")
    _e(rn, "LogicFile", filepath=xodr_path)
    ents = _e(root, "Entities")
    for ent in sb.entities:
        so = _e(ents, "ScenarioObject", name=ent.name)
        veh = _e(so, "Vehicle", name=ent.category, vehicleCategory=ent.category)
        _e(veh, "ParameterDeclarations")
        bb = _e(veh, "BoundingBox")
        _e(bb, "Center", x=fmt(0.3 * ent.length), y="0", z=fmt(ent.height / 2))
        _e(bb, "Dimensions", width=fmt(ent.width), length=fmt(ent.length), height=fmt(ent.height))
        _e(veh, "Performance", maxSpeed=fmt(ent.max_speed), maxAcceleration=fmt(ent.max_acceleration),
           maxDeceleration=fmt(ent.max_deceleration))
        axles = _e(veh, "Axles")
        wheel = fmt(0.8 if ent.category == "car" else 1.0)
        track = fmt(ent.width - 0.2)
        _e(axles, "FrontAxle", maxSteering="0.5", wheelDiameter=wheel, trackWidth=track,
           positionX=fmt(0.6 * ent.length), positionZ=fmt(float(wheel) / 2))
        _e(axles, "RearAxle", maxSteering="0", wheelDiameter=wheel, trackWidth=track,
           positionX="0", positionZ=fmt(float(wheel) / 2))
        _e(veh, "Properties")

    board = _e(root, "Storyboard")
    actions = _e(_e(board, "Init"), "Actions")
    envir = _e(_e(_e(actions, "GlobalAction"), "EnvironmentAction"), "Environment", name="environment")
    env = sb.environment
    _e(envir, "TimeOfDay", animation="false", dateTime=_clock(env.time_of_day))
    w = _e(envir, "Weather", cloudState=_CLOUDS[env.weather])
    inten, az, el = _SUN[env.daytime]
    _e(w, "Sun", intensity=fmt(inten), azimuth=fmt(az), elevation=fmt(el))
    _e(w, "Fog", visualRange=fmt(env.visual_range))
    _e(w, "Precipitation", precipitationType="rain" if env.precipitation > 0 else "dry",
       intensity=fmt(env.precipitation))
    _e(envir, "RoadCondition", frictionScaleFactor="0.7" if env.weather == "rain" else "1")
    for st in sb.init:
        priv = _e(actions, "Private", entityRef=st.actor)
        tp = _e(_e(priv, "PrivateAction"), "TeleportAction")
        _e(_e(tp, "Position"), "LanePosition", roadId=st.road_id, laneId=str(st.lane_id),
           offset=fmt(st.offset), s=fmt(st.s))
        sa = _e(_e(_e(priv, "PrivateAction"), "LongitudinalAction"), "SpeedAction")
        _e(sa, "SpeedActionDynamics", dynamicsShape="step", value="0", dynamicsDimension="time")
        _e(_e(sa, "SpeedActionTarget"), "AbsoluteTargetSpeed", value=fmt(st.speed))

    lc_events = {act.actor: ev.name for act in sb.acts for ev in act.events
                 if any(a.kind == "lane_change" for a in ev.actions)}
    story = _e(board, "Story", name=f"{sb.name}_story")
    for act in sb.acts:
        a = _e(story, "Act", name=f"{act.actor}_act")
        mg = _e(a, "ManeuverGroup", maximumExecutionCount="1", name=f"{act.actor}_group")
        _e(_e(mg, "Actors", selectTriggeringEntities="false"), "EntityRef", entityRef=act.actor)
        man = _e(mg, "Maneuver", name=f"{act.actor}_{act.maneuver}")
        for ev in act.events:
            e = _e(man, "Event", name=ev.name, priority="parallel", maximumExecutionCount="1")
            for i, action in enumerate(ev.actions):
                _private_action(_e(e, "Action", name=f"{ev.name}_{i}"), action, act.actor)
            _start_trigger(e, ev, lc_events)
        _time_condition(_e(_e(a, "StartTrigger"), "ConditionGroup"), f"{act.actor}_start", 0.0)
        _time_condition(_e(_e(a, "StopTrigger"), "ConditionGroup"), f"{act.actor}_stop", sb.t_end)
    _time_condition(_e(_e(board, "StopTrigger"), "ConditionGroup"), "end", sb.t_end)
    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)


def logic_file(data: bytes) -> str:
    return etree.fromstring(data).find("RoadNetwork/LogicFile").get("filepath")


def read_init(data: bytes) -> list[tuple[str, str, int, float]]:
    """(entity, road id, lane id, s) for every teleport in Init."""
    root = etree.fromstring(data)
    out = []
    for priv in root.iterfind("Storyboard/Init/Actions/Private"):
        lp = priv.find("PrivateAction/TeleportAction/Position/LanePosition")
        out.append((priv.get("entityRef"), lp.get("roadId"), int(lp.get("laneId")), float(lp.get("s"))))
    return out


# -- rules file -----------------------------------------------------------------

def _param_record(ref: ParamRef, p: Parameter) -> dict:
    rec = {"path": str(ref), "unit": p.unit, "kind": p.value_kind}
    if p.is_set:
        rec["values"] = list(p.values)
    else:
        rec["range"] = [p.lo, p.hi]
    if p.derived_by:
        rec["rule"] = p.derived_by
    return rec


def _rule_record(r: ConstraintRule) -> dict:
    rec = {"id": r.id, "kind": r.role, "relation": r.relation.value, "expr": r.infix()}
    if r.scope_object is not None:
        rec["object"] = r.scope_object
    return rec


def rules_document(ps: ParameterSpace, v_default, examples=()) -> dict:
    values = as_mapping(v_default)
    doc = {
        "version": RULES_VERSION,
        "scenario": ps.name,
        "objects": [{"id": o.id, "kind": o.kind.value, "layer": o.layer.label,
                     "keywords": list(o.keywords)} for o in ps.objects.values()],
        "parameters": [_param_record(r, ps.parameter(r)) for r in ps.order],
        "rules": [_rule_record(r) for r in ps.rules],
        "relations": [{"kind": x.kind.value, "endpoints": list(x.endpoints),
                       **({"label": x.label} if x.label else {}),
                       **({"rule": x.rule} if x.rule else {})} for x in ps.relations],
        "defaults": {str(r): values[r] for r in ps.order},
    }
    if examples:
        doc["examples"] = [{"seed": e.seed, "index": e.index, "values": {str(r): e.values[r] for r in ps.order}}
                           for e in examples]
    return doc


def emit_rules_file(ps: ParameterSpace, v_default, examples=()) -> str:
    return json.dumps(rules_document(ps, v_default, examples), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


@dataclass(frozen=True)
class RulesFile:
    version: str
    space: ParameterSpace
    defaults: dict[ParamRef, float]
    examples: tuple[dict[ParamRef, float], ...] = ()


class RulesFileError(ValueError):
    pass


def parse_rules_file(text: str) -> RulesFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RulesFileError(f"not JSON: {exc}") from None
    if doc.get("version") != RULES_VERSION:
        raise RulesFileError(f"unsupported rules version {doc.get('version')!r}")
    params: dict[str, list[Parameter]] = {}
    order = []
    for rec in doc["parameters"]:
        ref = ParamRef.parse(rec["path"])
        if "values" in rec:
            p = Parameter(ref.name, rec["unit"], values=tuple(float(x) for x in rec["values"]),
                          derived_by=rec.get("rule"))
        else:
            lo, hi = rec["range"]
            p = Parameter(ref.name, rec["unit"], lo=float(lo), hi=float(hi), derived_by=rec.get("rule"))
        params.setdefault(ref.obj, []).append(p)
        order.append(ref)
    objects = {}
    for o in doc["objects"]:
        objects[o["id"]] = ObjectNode(o["id"], ObjectKind(o["kind"]), Layer(int(o["layer"][1:])),
                                      tuple(params.get(o["id"], ())), tuple(o.get("keywords", ())))
    rules = []
    for rec in doc["rules"]:
        expr = parse_infix(rec["expr"], rec.get("object"))
        rules.append(ConstraintRule(rec["id"], rec["kind"], expr, RelationKind(rec["relation"]),
                                    rec.get("object")))
    relations = tuple(Relation(RelationKind(x["kind"]), tuple(x["endpoints"]), x.get("label"), x.get("rule"))
                      for x in doc.get("relations", ()))
    ps = ParameterSpace(doc["scenario"], objects, relations, tuple(rules), tuple(order))
    defaults = {ParamRef.parse(k): float(v) for k, v in doc["defaults"].items()}
    examples = tuple({ParamRef.parse(k): float(v) for k, v in e["values"].items()}
                     for e in doc.get("examples", ()))
    return RulesFile(doc["version"], ps, defaults, examples)


def is_finite(x: float) -> bool:
    return math.isfinite(x)
