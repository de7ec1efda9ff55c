"""Road IR (layers 1-3), plan-view/elevation geometry and OpenDRIVE 1.4 I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass

from lxml import etree

from .detailing import ROAD, SHOULDER, lane_id
from .parameter_space import Layer, ObjectKind, ParameterSpace, as_mapping
from .rules import ParamRef

ROAD_ID = "1"
GUARD_RAIL_OFFSET = 0.5  # m beyond the outer lane edge
SIGNAL_OFFSET = 1.0

# keywords whose objects this emitter reads (layers 1-3)
CONSUMED_KINDS = (ObjectKind.ROAD_SECTION, ObjectKind.ALIGNMENT, ObjectKind.ELEVATION,
                  ObjectKind.LANE, ObjectKind.SIGNAL, ObjectKind.GUARD_RAIL)
CONSUMED_LAYERS = (Layer.ROAD, Layer.INFRASTRUCTURE, Layer.TEMPORARY)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class GeometrySegment:
    s0: float
    x0: float
    y0: float
    hdg0: float
    length: float
    curvature: float | None = None  # None for a line

    @property
    def shape(self) -> str:
        return "line" if self.curvature is None else "arc"


@dataclass(frozen=True)
class ElevationPoly:
    s0: float
    a: float
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def value(self, ds: float) -> float:
        return self.a + self.b * ds + self.c * ds * ds + self.d * ds ** 3

    def slope(self, ds: float) -> float:
        return self.b + 2.0 * self.c * ds + 3.0 * self.d * ds * ds


@dataclass(frozen=True)
class Lane:
    id: int
    type: str  # driving | shoulder
    width: float


@dataclass(frozen=True)
class LaneSection:
    s0: float
    lanes: tuple[Lane, ...]  # right lanes, id -1, -2, ...

    def lane(self, lid: int) -> Lane:
        for ln in self.lanes:
            if ln.id == lid:
                return ln
        raise KeyError(lid)

    @property
    def total_width(self) -> float:
        return sum(ln.width for ln in self.lanes)


@dataclass(frozen=True)
class SignalRecord:
    id: str
    s: float
    t: float
    value: int  # km/h
    country: str = "DE"
    type: str = "274"

    @property
    def subtype(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class RoadsideObject:
    id: str
    side: str
    s: float
    length: float
    t: float
    type: str = "barrier"


@dataclass(frozen=True)
class RoadNetworkIR:
    road_id: str
    name: str
    length: float
    plan_view: tuple[GeometrySegment, ...]
    elevation: tuple[ElevationPoly, ...]
    lane_sections: tuple[LaneSection, ...]
    signals: tuple[SignalRecord, ...] = ()
    objects: tuple[RoadsideObject, ...] = ()

    def driving_lane_id(self, index: int) -> int:
        """Road lane id of driving lane ``index`` (1 = rightmost)."""
        n = sum(1 for ln in self.lane_sections[0].lanes if ln.type == "driving")
        if not 1 <= index <= n:
            raise KeyError(index)
        return -(n - index + 1)

    def driving_lane_index(self, lid: int) -> int:
        n = sum(1 for ln in self.lane_sections[0].lanes if ln.type == "driving")
        return n + 1 + lid

    def lane_center_t(self, lid: int) -> float:
        t = 0.0
        for ln in sorted(self.lane_sections[0].lanes, key=lambda x: -x.id):
            if ln.id == lid:
                return -(t + ln.width / 2)
            t += ln.width
        raise KeyError(lid)


# -- geometry -------------------------------------------------------------------

def plan_view_end_pose(seg: GeometrySegment, kappa: float | None = None) -> tuple[float, float, float]:
    """Closed-form end pose; pass ``kappa`` to force the arc branch."""
    k = seg.curvature if kappa is None else kappa
    L = seg.length
    if seg.shape == "line" and kappa is None:
        return seg.x0 + L * math.cos(seg.hdg0), seg.y0 + L * math.sin(seg.hdg0), seg.hdg0
    if k == 0:
        raise GeometryError("zero curvature in arc branch; use a line")
    h1 = seg.hdg0 + k * L
    return (seg.x0 + (math.sin(h1) - math.sin(seg.hdg0)) / k,
            seg.y0 - (math.cos(h1) - math.cos(seg.hdg0)) / k,
            h1)


def pose_at(seg: GeometrySegment, ds: float) -> tuple[float, float, float]:
    part = GeometrySegment(seg.s0, seg.x0, seg.y0, seg.hdg0, ds, seg.curvature)
    if ds == 0:
        return seg.x0, seg.y0, seg.hdg0
    return plan_view_end_pose(part)


def elevation_polys(kind: str, params: dict[str, float], L: float) -> list[ElevationPoly]:
    if kind == "plane":
        return [ElevationPoly(0.0, 0.0, params.get("s1", 0.0))]
    if kind in ("incline", "decline"):
        s = params["s"]
        return [ElevationPoly(0.0, 0.0, s if kind == "incline" else -s)]
    if kind not in ("crest", "sag"):
        raise GeometryError(f"unknown elevation kind {kind!r}")
    R, s1, s2, T = params["R"], params["s1"], params["s2"], params["T"]
    if 2 * T > L:
        raise GeometryError(f"vertical curve of length {2 * T} does not fit a {L} m section")
    c = (-1.0 if kind == "crest" else 1.0) / (2.0 * R)
    m = L / 2.0
    start = m - T
    out = []
    if start > 0:
        out.append(ElevationPoly(0.0, 0.0, s1))
    a_p = s1 * start
    out.append(ElevationPoly(start, a_p, s1, c))
    end = start + 2.0 * T
    if end < L:
        out.append(ElevationPoly(end, a_p + s1 * (2.0 * T) + c * (2.0 * T) ** 2, s2))
    return out


def _values(ps: ParameterSpace, v, obj: str) -> dict[str, float]:
    node = ps.objects[obj]
    return {p.name: v[ParamRef(obj, p.name)] for p in node.parameters}


def build_road_ir(ps: ParameterSpace, v) -> RoadNetworkIR:
    values = as_mapping(v)
    L = values[ParamRef(ROAD, "L")]
    align = ps.objects_of(ObjectKind.ALIGNMENT)[0]
    if align.id == "straight":
        seg = GeometrySegment(0.0, 0.0, 0.0, 0.0, L)
    else:
        a = _values(ps, values, align.id)
        seg = GeometrySegment(0.0, 0.0, 0.0, 0.0, L, a["direction"] / a["R_h"])
    elev = ps.objects_of(ObjectKind.ELEVATION)[0]
    polys = elevation_polys(elev.id, _values(ps, values, elev.id), L)

    lanes = sorted((o.id for o in ps.objects_of(ObjectKind.LANE) if o.id != SHOULDER),
                   key=lambda x: int(x.split("_")[1]))
    n = len(lanes)
    recs = [Lane(-(n - i + 1), "driving", values[ParamRef(lane_id(i), "w")]) for i in range(n, 0, -1)]
    if SHOULDER in ps.objects:
        recs.append(Lane(-(n + 1), "shoulder", values[ParamRef(SHOULDER, "w")]))
    section = LaneSection(0.0, tuple(recs))
    width = section.total_width

    signals = []
    if "speed_limit" in ps.objects:
        sv = _values(ps, values, "speed_limit")
        signals.append(SignalRecord("1", sv["s_pos"], -(width + SIGNAL_OFFSET), int(sv["value"])))
    objects = []
    for o in ps.objects_of(ObjectKind.GUARD_RAIL):
        side = o.id.rsplit("_", 1)[1]
        gv = _values(ps, values, o.id)
        t = GUARD_RAIL_OFFSET if side == "left" else -(width + GUARD_RAIL_OFFSET)
        objects.append(RoadsideObject(str(len(objects) + 1), side, gv["s_pos"], gv["length"], t))
    return RoadNetworkIR(ROAD_ID, ps.name, L, (seg,), tuple(polys), (section,),
                         tuple(signals), tuple(objects))


def check_ir(ir: RoadNetworkIR, tol_pos: float = 1e-6, tol_hdg: float = 1e-9, tol_elev: float = 1e-9) -> list[str]:
    """Invariant report (empty when partitions and continuity hold)."""
    out = []
    s = 0.0
    for i, seg in enumerate(ir.plan_view):
        if seg.length <= 0:
            out.append(f"segment {i} has non-positive length")
        if abs(seg.s0 - s) > tol_pos:
            out.append(f"segment {i} starts at s={seg.s0}, expected {s}")
        if i:
            x, y, h = plan_view_end_pose(ir.plan_view[i - 1])
            if math.hypot(seg.x0 - x, seg.y0 - y) > tol_pos or abs(seg.hdg0 - h) > tol_hdg:
                out.append(f"plan view discontinuous before segment {i}")
        s = seg.s0 + seg.length
    if abs(s - ir.length) > tol_pos:
        out.append("plan view does not cover the road")
    if not ir.elevation or ir.elevation[0].s0 != 0.0:
        out.append("elevation does not start at s=0")
    for i in range(1, len(ir.elevation)):
        p, q = ir.elevation[i - 1], ir.elevation[i]
        ds = q.s0 - p.s0
        if ds <= 0:
            out.append(f"elevation piece {i} has non-positive length")
        if abs(p.value(ds) - q.a) > tol_elev or abs(p.slope(ds) - q.b) > tol_elev:
            out.append(f"elevation discontinuous at s={q.s0}")
    if ir.elevation and ir.elevation[-1].s0 >= ir.length:
        out.append("last elevation piece starts beyond the road")
    if len(ir.lane_sections) != 1:
        out.append("expected exactly one lane section")
    ids = sorted((ln.id for ln in ir.lane_sections[0].lanes), reverse=True)
    if ids != list(range(-1, -len(ids) - 1, -1)):
        out.append(f"lane ids not consecutive: {ids}")
    if any(ln.width <= 0 for ln in ir.lane_sections[0].lanes):
        out.append("non-positive lane width")
    return out


# -- XML ------------------------------------------------------------------------

def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _sub(parent, tag, **attrs):
    return etree.SubElement(parent, tag, {k: v for k, v in attrs.items()})


def emit_opendrive(ir: RoadNetworkIR) -> bytes:
    root = etree.Element("OpenDRIVE")
    _sub(root, "header", revMajor="1", revMinor="4", name=ir.name, version="1.00", vendor="scenario_forge")
    road = _sub(root, "road", name=ir.name, length=fmt(ir.length), id=ir.road_id, junction="-1")
    _sub(road, "type", s="0", type="motorway")
    pv = _sub(road, "planView")
    for seg in ir.plan_view:
        g = _sub(pv, "geometry", s=fmt(seg.s0), x=fmt(seg.x0), y=fmt(seg.y0), hdg=fmt(seg.hdg0),
                 length=fmt(seg.length))
        if seg.shape == "line":
            _sub(g, "line")
        else:
            _sub(g, "arc", curvature=fmt(seg.curvature))
    ep = _sub(road, "elevationProfile")
    for p in ir.elevation:
        _sub(ep, "elevation", s=fmt(p.s0), a=fmt(p.a), b=fmt(p.b), c=fmt(p.c), d=fmt(p.d))
    lanes = _sub(road, "lanes")
    for sec in ir.lane_sections:
        ls = _sub(lanes, "laneSection", s=fmt(sec.s0))
        center = _sub(ls, "center")
        c = _sub(center, "lane", id="0", type="none", level="false")
        _sub(c, "roadMark", sOffset="0", type="solid", weight="standard", color="standard", width="0.15")
        right = _sub(ls, "right")
        for ln in sorted(sec.lanes, key=lambda x: -x.id):
            e = _sub(right, "lane", id=str(ln.id), type=ln.type, level="false")
            _sub(e, "width", sOffset="0", a=fmt(ln.width), b="0", c="0", d="0")
            mark = "solid" if ln.type == "shoulder" or ln.id == -len(sec.lanes) else "broken"
            _sub(e, "roadMark", sOffset="0", type=mark, weight="standard", color="standard", width="0.15")
    if ir.objects:
        objs = _sub(road, "objects")
        for o in ir.objects:
            e = _sub(objs, "object", type=o.type, name="guardRail", id=o.id, s=fmt(o.s), t=fmt(o.t),
                     zOffset="0", validLength=fmt(o.length), orientation="none", length=fmt(o.length),
                     width="0.3", height="0.75", hdg="0", pitch="0", roll="0")
            _sub(e, "repeat", s=fmt(o.s), length=fmt(o.length), distance="0", tStart=fmt(o.t), tEnd=fmt(o.t),
                 widthStart="0.3", widthEnd="0.3", heightStart="0.75", heightEnd="0.75",
                 zOffsetStart="0", zOffsetEnd="0")
    if ir.signals:
        sigs = _sub(road, "signals")
        for sg in ir.signals:
            _sub(sigs, "signal", s=fmt(sg.s), t=fmt(sg.t), id=sg.id, name=f"speed_limit_{sg.value}",
                 dynamic="no", orientation="+", zOffset="1.5", country=sg.country, type=sg.type,
                 subtype=sg.subtype, value=str(sg.value), unit="km/h", height="0.9", width="0.9")
    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)


def read_opendrive(data: bytes) -> RoadNetworkIR:
    """Reader oracle: rebuild the IR from an emitted document."""
    root = etree.fromstring(data)
    road = root.find("road")
    f = float
    plan = []
    for g in road.find("planView").findall("geometry"):
        arc = g.find("arc")
        plan.append(GeometrySegment(f(g.get("s")), f(g.get("x")), f(g.get("y")), f(g.get("hdg")),
                                    f(g.get("length")), None if arc is None else f(arc.get("curvature"))))
    elev = [ElevationPoly(f(e.get("s")), f(e.get("a")), f(e.get("b")), f(e.get("c")), f(e.get("d")))
            for e in road.find("elevationProfile").findall("elevation")]
    sections = []
    for ls in road.find("lanes").findall("laneSection"):
        lanes = []
        right = ls.find("right")
        for ln in (right.findall("lane") if right is not None else []):
            lanes.append(Lane(int(ln.get("id")), ln.get("type"), f(ln.find("width").get("a"))))
        sections.append(LaneSection(f(ls.get("s")), tuple(lanes)))
    signals = []
    if road.find("signals") is not None:
        for sg in road.find("signals").findall("signal"):
            signals.append(SignalRecord(sg.get("id"), f(sg.get("s")), f(sg.get("t")), int(sg.get("value")),
                                        sg.get("country"), sg.get("type")))
    objects = []
    if road.find("objects") is not None:
        for o in road.find("objects").findall("object"):
            rep = o.find("repeat")
            t = f(o.get("t"))
            objects.append(RoadsideObject(o.get("id"), "left" if t > 0 else "right",
                                          f(rep.get("s")), f(rep.get("length")), t, o.get("type")))
    return RoadNetworkIR(road.get("id"), road.get("name"), f(road.get("length")), tuple(plan),
                         tuple(elev), tuple(sections), tuple(signals), tuple(objects))
