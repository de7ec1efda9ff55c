"""Static plan-view preview of a compiled scenario."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .opendrive import RoadNetworkIR, pose_at
from .openscenario import StoryboardIR

STEP = 5.0  # m between polyline samples
MARGIN = 20.0
SCALE = 1.0  # px per m before the viewBox fit

_LANE_FILL = {"driving": "#d9d9d9", "shoulder": "#eeeecc"}


def road_pose(ir: RoadNetworkIR, s: float) -> tuple[float, float, float]:
    seg = ir.plan_view[0]
    for g in ir.plan_view:
        if g.s0 <= s:
            seg = g
    return pose_at(seg, min(max(s - seg.s0, 0.0), seg.length))


def offset_point(ir: RoadNetworkIR, s: float, t: float) -> tuple[float, float]:
    x, y, h = road_pose(ir, s)
    return x - t * math.sin(h), y + t * math.cos(h)


def _stations(ir: RoadNetworkIR, s0: float = 0.0, s1: float | None = None) -> list[float]:
    s1 = ir.length if s1 is None else s1
    n = max(1, math.ceil((s1 - s0) / STEP))
    return [s0 + (s1 - s0) * i / n for i in range(n + 1)]


def _path(points) -> str:
    return " ".join(f"{'M' if i == 0 else 'L'}{x:.3f},{-y:.3f}" for i, (x, y) in enumerate(points))


def _edges(ir: RoadNetworkIR) -> list[tuple[str, float, float]]:
    """(type, t_inner, t_outer) per lane, reference line at t = 0."""
    out, t = [], 0.0
    for ln in sorted(ir.lane_sections[0].lanes, key=lambda x: -x.id):
        out.append((ln.type, -t, -(t + ln.width)))
        t += ln.width
    return out


def render_svg(ir: RoadNetworkIR, sb: StoryboardIR | None = None) -> str:
    root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", version="1.1")
    g = ET.SubElement(root, "g", id="road")
    xs, ys = [], []
    stations = _stations(ir)
    for kind, t_in, t_out in _edges(ir):
        inner = [offset_point(ir, s, t_in) for s in stations]
        outer = [offset_point(ir, s, t_out) for s in reversed(stations)]
        xs += [p[0] for p in inner + outer]
        ys += [-p[1] for p in inner + outer]
        ET.SubElement(g, "path", d=_path(inner + outer) + " Z", fill=_LANE_FILL.get(kind, "#cccccc"),
                      stroke="#ffffff", **{"stroke-width": "0.3"})
    ref = [offset_point(ir, s, 0.0) for s in stations]
    ET.SubElement(g, "path", d=_path(ref), fill="none", stroke="#cc0000", id="reference_line",
                  **{"stroke-width": "0.4", "stroke-dasharray": "4 2"})

    glyphs = ET.SubElement(root, "g", id="infrastructure")
    for obj in ir.objects:
        pts = [offset_point(ir, s, obj.t) for s in _stations(ir, obj.s, obj.s + obj.length)]
        ET.SubElement(glyphs, "path", d=_path(pts), fill="none", stroke="#444444", id=obj.id,
                      **{"stroke-width": "1.2"})
    for sig in ir.signals:
        x, y = offset_point(ir, sig.s, sig.t)
        c = ET.SubElement(glyphs, "g", id=sig.id)
        ET.SubElement(c, "circle", cx=f"{x:.3f}", cy=f"{-y:.3f}", r="4", fill="#ffffff",
                      stroke="#cc0000", **{"stroke-width": "1.2"})
        label = ET.SubElement(c, "text", x=f"{x:.3f}", y=f"{-y + 1.5:.3f}", fill="#000000",
                              **{"font-size": "4", "text-anchor": "middle"})
        label.text = str(sig.value)

    if sb is not None:
        actors = ET.SubElement(root, "g", id="actors")
        for st in sb.init:
            x, y = offset_point(ir, st.s, ir.lane_center_t(st.lane_id))
            ent = sb.entity(st.actor)
            hdg = math.degrees(road_pose(ir, st.s)[2])
            box = ET.SubElement(actors, "g", id=st.actor,
                                transform=f"translate({x:.3f},{-y:.3f}) rotate({-hdg:.3f})")
            ET.SubElement(box, "rect", x=f"{-ent.length / 2:.3f}", y=f"{-ent.width / 2:.3f}",
                          width=f"{ent.length:.3f}", height=f"{ent.width:.3f}", fill="#1f77b4")
            label = ET.SubElement(box, "text", x="0", y=f"{-ent.width:.3f}", fill="#1f77b4",
                                  **{"font-size": "4", "text-anchor": "middle"})
            label.text = st.actor

    x0, x1 = min(xs) - MARGIN, max(xs) + MARGIN
    y0, y1 = min(ys) - MARGIN, max(ys) + MARGIN
    root.set("viewBox", f"{x0:.3f} {y0:.3f} {x1 - x0:.3f} {y1 - y0:.3f}")
    root.set("width", f"{(x1 - x0) * SCALE:.0f}")
    root.set("height", f"{(y1 - y0) * SCALE:.0f}")
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"
