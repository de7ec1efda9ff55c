import json

import pytest
from lxml import etree

from helpers import MINIMAL
from scenario_forge.opendrive import ElevationPoly, GeometrySegment, Lane, LaneSection, RoadNetworkIR
from scenario_forge.openscenario import (
    RULES_VERSION,
    GridError,
    GridMapping,
    RulesFileError,
    emit_rules_file,
    logic_file,
    parse_rules_file,
    read_init,
)
from scenario_forge.pipeline import compile_scenario
from scenario_forge.rules import ParamRef
from scenario_forge.scenario_model import GridPosition
from scenario_forge.validation import validate_openscenario
from scenario_forge.valuation import sample_concrete


def straight_road(L=1250.0, lanes=3):
    return RoadNetworkIR("1", "r", L, (GeometrySegment(0, 0, 0, 0, L),), (ElevationPoly(0.0, 0.0),),
                         (LaneSection(0.0, tuple(Lane(-(i + 1), "driving", 3.5) for i in range(lanes))),))


def test_slot_zero_sits_mid_section():
    m = GridMapping.from_road(straight_road(), 50.0)
    assert m.position(GridPosition(2, 0)) == (-2, 625.0)
    assert m.s_of(2) == 725.0 and m.s_of(-1) == 575.0
    assert m.lane_ids == {1: -3, 2: -2, 3: -1}
    assert m.lane_index(-3) == 1


def test_grid_outside_section():
    m = GridMapping.from_road(straight_road(L=500.0), 150.0)
    with pytest.raises(GridError, match="grid exceeds section"):
        m.position(GridPosition(1, 10))


def xml(c):
    return etree.fromstring(c.xosc)


def test_gap_trigger(fig6):
    cond = xml(fig6).find(".//Event[@name='A1_match']//RelativeDistanceCondition")
    assert cond.get("rule") == "lessThan"
    assert float(cond.get("value")) == fig6.valuation[ParamRef("A1_approach", "g_end")] == 40.0
    assert cond.get("freespace") == "true" and cond.get("entityRef") == "A2"
    after = xml(fig6).find(".//Event[@name='A1_match']//StoryboardElementStateCondition")
    assert after.get("storyboardElementRef") == "A1_cruise" and after.get("state") == "endTransition"


def test_follow_lane_only():
    c = compile_scenario(MINIMAL)
    root = xml(c)
    assert len(root.findall("Storyboard/Init/Actions/Private")) == 1
    (event,) = root.findall(".//Event")
    assert event.get("name") == "A1_hold"
    assert event.find(".//LaneOffsetAction") is not None
    assert event.find(".//SimulationTimeCondition").get("value") == "0"


def test_fig6_structure(fig6):
    root = xml(fig6)
    assert len(root.findall("Entities/ScenarioObject")) == 2
    assert len(root.findall("Storyboard/Init/Actions/Private/PrivateAction/TeleportAction")) == 2
    assert len(root.findall("Storyboard/Init/Actions/Private/PrivateAction/LongitudinalAction/SpeedAction")) == 2
    assert len(root.findall("Storyboard/Story")) == 1
    assert root.find("FileHeader").get("revMajor") == "1" and root.find("FileHeader").get("revMinor") == "0"
    assert validate_openscenario(fig6.xosc) == []


def test_init_positions(fig6):
    d = fig6.storyboard.mapping.d_slot
    assert read_init(fig6.xosc) == [("A1", "1", -2, 625.0), ("A2", "1", -2, 625.0 + 2 * d)]
    assert logic_file(fig6.xosc) == "fig6.xodr"


@pytest.mark.parametrize("vtype, dims", [("car", (4.5, 1.8, 1.5)), ("truck", (12.0, 2.55, 3.8))])
def test_bounding_boxes(vtype, dims):
    c = compile_scenario(MINIMAL.replace("A1 car", f"A1 {vtype}"))
    d = xml(c).find(".//BoundingBox/Dimensions")
    assert (float(d.get("length")), float(d.get("width")), float(d.get("height"))) == dims


def test_schema_rejects_unknown_element(fig6):
    root = xml(fig6)
    etree.SubElement(root.find("Entities"), "Pedestrian")
    assert validate_openscenario(etree.tostring(root))


def test_referential_integrity(fig6):
    root = xml(fig6)
    entities = {e.get("name") for e in root.iterfind("Entities/ScenarioObject")}
    events = {e.get("name") for e in root.iter("Event")}
    refs = [e.get("entityRef") for e in root.iter() if e.get("entityRef") is not None]
    assert refs and set(refs) <= entities
    assert {e.get("storyboardElementRef") for e in root.iter("StoryboardElementStateCondition")} <= events
    lanes = {ln.id for ln in fig6.road.lane_sections[0].lanes}
    assert all(lid in lanes and 0 <= s <= fig6.road.length for _, _, lid, s in read_init(fig6.xosc))


def test_story_numbers_come_from_the_valuation(fig6):
    """Every number the story and init carry is a parameter value or a grid position."""
    sb = fig6.storyboard
    allowed = set(fig6.valuation.values.values())
    allowed |= {st.s for st in sb.init} | {0.0, 1.0, -1.0, sb.t_end}
    root = xml(fig6).find("Storyboard")
    for env in root.iter("Environment"):
        env.getparent().remove(env)
    for el in root.iter():
        for name, text in el.attrib.items():
            if name in ("roadId", "laneId", "maximumExecutionCount"):
                continue
            try:
                x = float(text)
            except ValueError:
                continue
            assert x in allowed, f"{el.tag}.{name}={text}"


# -- rules file ----------------------------------------------------------------------

def test_rules_records(fig6):
    doc = json.loads(fig6.rules)
    assert doc["version"] == RULES_VERSION
    rules = {r["id"]: r for r in doc["rules"]}
    assert rules["A1_approach.speed"]["expr"] == "A1.v0 >= A2.v0 + 2.78"
    assert rules["A1_approach.speed"]["relation"] == "object_dependency"
    gap0 = rules["A1_approach.gap0"]
    assert gap0["kind"] == "define"
    crest = compile_scenario(MINIMAL.replace("plane", "crest"))
    crest_rules = {r["id"]: r for r in json.loads(crest.rules)["rules"]}
    assert crest_rules["crest.T"] == {"id": "crest.T", "kind": "define", "relation": "parameter_dependency",
                                      "object": "crest", "expr": "T = R * abs(s1 - s2) / 2"}


def test_rules_round_trip(fig6):
    examples = sample_concrete(fig6.space, 3, 4)
    text = emit_rules_file(fig6.space, fig6.valuation, examples)
    back = parse_rules_file(text)
    assert back.space.rules == fig6.space.rules
    assert back.space.order == fig6.space.order
    assert dict(back.space.objects) == dict(fig6.space.objects)
    assert back.space.relations == fig6.space.relations
    assert back.defaults == fig6.valuation.values
    assert back.examples == tuple(e.values for e in examples)
    assert emit_rules_file(back.space, back.defaults, examples) == text


@pytest.mark.parametrize("text", ["[", '{"version": "other/9"}'])
def test_rules_file_errors(text):
    with pytest.raises(RulesFileError):
        parse_rules_file(text)
