"""Functional-scenario vocabulary and the ``.fscn`` keyword DSL.

A document is line oriented, one statement per line, ``#`` starts a comment::

    scenario fig6
    road lanes 3 hard_shoulder
    road alignment curve_right
    actor A1 car lane 2 slot 0
    start A1 approach of A2
    end A1 lane 2 slot 1

:func:`parse_functional_scenario` collects every diagnostic of a document
before giving up, so one run reports all problems.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations

from .parameter_space import Layer

ALIGNMENTS = ("straight", "curve_left", "curve_right")
ELEVATIONS = ("plane", "incline", "decline", "crest", "sag")
SPEED_LIMITS = (80, 100, 120, 130)
GUARD_RAIL_SIDES = ("left", "right", "both")
WEATHERS = ("clear", "overcast", "rain", "fog")
DAYTIMES = ("morning", "midday", "evening", "night")
VEHICLE_TYPES = ("car", "truck")
MANEUVERS = ("follow_lane", "follow_vehicle", "approach", "lane_change_left",
             "lane_change_right", "fall_back")
TARGETED = ("follow_vehicle", "approach", "fall_back")
CONSTANT_SPEED = ("follow_lane", "lane_change_left", "lane_change_right")
LANE_SHIFT = {"lane_change_left": 1, "lane_change_right": -1}
MAX_SLOT = 10

# reserved for parameter-space object ids
RESERVED_IDS = {"road", "straight", "curve_left", "curve_right", "speed_limit",
                "weather", "daytime", "shoulder", *ELEVATIONS}

_LAYERS: dict[str, Layer] = {
    "lanes": Layer.ROAD, "hard_shoulder": Layer.ROAD,
    **{k: Layer.ROAD for k in ALIGNMENTS},
    **{k: Layer.ROAD for k in ELEVATIONS},
    "speed_limit": Layer.INFRASTRUCTURE, "guard_rail": Layer.INFRASTRUCTURE,
    **{k: Layer.OBJECTS for k in VEHICLE_TYPES},
    **{k: Layer.OBJECTS for k in MANEUVERS},
    **{k: Layer.ENVIRONMENT for k in WEATHERS},
    **{k: Layer.ENVIRONMENT for k in DAYTIMES},
}
VOCABULARY = tuple(_LAYERS)


class UnknownKeyword(KeyError):
    pass


def layer_of(keyword: str) -> Layer:
    try:
        return _LAYERS[keyword]
    except KeyError:
        raise UnknownKeyword(keyword) from None


@dataclass(frozen=True, order=True)
class GridPosition:
    lane: int
    slot: int


@dataclass(frozen=True)
class RoadSpec:
    n_driving_lanes: int
    hard_shoulder: bool = False
    alignment: str = "straight"
    elevation: str = "plane"
    speed_limit: int | None = None
    guard_rail: frozenset[str] = frozenset()


@dataclass(frozen=True)
class EnvironmentSpec:
    weather: str = "clear"
    daytime: str = "midday"


@dataclass(frozen=True)
class ActorSpec:
    id: str
    vehicle_type: str
    start: GridPosition


@dataclass(frozen=True)
class ManeuverSpec:
    kind: str
    target: str | None = None


@dataclass(frozen=True)
class FunctionalScenario:
    name: str
    road: RoadSpec
    environment: EnvironmentSpec
    actors: tuple[ActorSpec, ...]
    start_maneuvers: dict[str, ManeuverSpec] = field(default_factory=dict)
    end_positions: dict[str, GridPosition] = field(default_factory=dict)

    def actor(self, actor_id: str) -> ActorSpec:
        for a in self.actors:
            if a.id == actor_id:
                return a
        raise KeyError(actor_id)

    def maneuver(self, actor_id: str) -> ManeuverSpec:
        return self.start_maneuvers.get(actor_id, ManeuverSpec("follow_lane"))

    def keywords(self) -> list[str]:
        """Vocabulary terms used by this scenario, in a stable order."""
        r = self.road
        out = ["lanes"]
        if r.hard_shoulder:
            out.append("hard_shoulder")
        out += [r.alignment, r.elevation]
        if r.speed_limit is not None:
            out.append("speed_limit")
        if r.guard_rail:
            out.append("guard_rail")
        for a in self.actors:
            out.append(a.vehicle_type)
            out.append(self.maneuver(a.id).kind)
        out += [self.environment.weather, self.environment.daytime]
        return list(dict.fromkeys(out))


@dataclass(frozen=True, order=True)
class Diagnostic:
    line: int
    column: int
    code: str
    message: str
    element: str = ""

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}: " if self.line else ""
        tail = f" [{self.element}]" if self.element else ""
        return f"{where}{self.message}{tail}"

    def as_dict(self) -> dict:
        return {"line": self.line, "column": self.column, "code": self.code,
                "message": self.message, "element": self.element}


class ScenarioError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


# -- parsing ------------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*$")
_NAME = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.-]*$")
_INT = re.compile(r"[-+]?\d+$")


class _Collector:
    def __init__(self):
        self.diags: list[Diagnostic] = []

    def add(self, line, col, code, message, element=""):
        self.diags.append(Diagnostic(line, col, code, message, element))


def _tokens(line: str) -> list[tuple[int, str]]:
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]


def parse_functional_scenario(text: str) -> FunctionalScenario:
    """Parse and validate a DSL document.

    Raises :class:`ScenarioError` carrying every diagnostic found (syntax
    and semantic), each with a line and column.
    """
    fs, diags = _parse(text)
    if fs is not None:
        lines = _Lines(text)
        diags += [lines.locate(d) for d in validate_scenario(fs)]
    if diags:
        raise ScenarioError(sorted(set(diags)))
    return fs


class _Lines:
    """Maps semantic diagnostics back to the statement that introduced the element."""

    def __init__(self, text: str):
        self.where: dict[tuple[str, str], tuple[int, int]] = {}
        for no, raw in enumerate(text.splitlines(), 1):
            toks = _tokens(raw.split("#", 1)[0])
            if len(toks) >= 2 and toks[0][1] in ("actor", "start", "end"):
                self.where.setdefault((toks[0][1], toks[1][1]), (no, toks[1][0]))
            elif toks and toks[0][1] == "road":
                self.where.setdefault(("road", ""), (no, 1))

    def locate(self, d: Diagnostic) -> Diagnostic:
        stmt = {"start_position": "actor", "maneuver": "start", "end_position": "end"}
        kind, _, idents = d.element.partition(":")
        ident = idents.split(",")[0]  # pairwise diagnostics point at the first actor
        pos = self.where.get((stmt.get(kind, kind), ident)) or self.where.get(("road", ""))
        if pos is None:
            return d
        return Diagnostic(pos[0], pos[1], d.code, d.message, d.element)


def _parse(text: str) -> tuple[FunctionalScenario | None, list[Diagnostic]]:
    c = _Collector()
    name = None
    lanes = None
    shoulder = False
    road: dict = {}
    env: dict = {}
    guard: set[str] = set()
    actors: list[ActorSpec] = []
    starts: dict[str, ManeuverSpec] = {}
    ends: dict[str, GridPosition] = {}
    seen_single: set[str] = set()
    attempted = {"scenario": False, "lanes": False}

    def once(key, no, col):
        if key in seen_single:
            c.add(no, col, "duplicate_statement", f"duplicate statement '{key}'")
            return False
        seen_single.add(key)
        return True

    def integer(tok, no, what):
        col, val = tok
        if not _INT.match(val):
            c.add(no, col, "syntax", f"expected integer {what}, got '{val}'")
            return None
        return int(val)

    def enum(tok, choices, no):
        col, val = tok
        if val not in choices:
            c.add(no, col, "unknown_keyword", f"unknown keyword '{val}'")
            return None
        return val

    for no, raw in enumerate(text.splitlines(), 1):
        toks = _tokens(raw.split("#", 1)[0])
        if not toks:
            continue
        col0, head = toks[0]
        args = toks[1:]
        if head == "scenario":
            attempted["scenario"] = True
            if not args:
                c.add(no, col0, "syntax", "scenario needs a name")
                continue
            raw_name = raw.split("#", 1)[0].strip()[len("scenario"):].strip().strip('"')
            if not _NAME.match(raw_name):
                c.add(no, args[0][0], "syntax", f"invalid scenario name '{raw_name}'")
            elif once("scenario", no, col0):
                name = raw_name
        elif head == "road":
            if not args:
                c.add(no, col0, "syntax", "road statement needs a property")
                continue
            pcol, prop = args[0]
            rest = args[1:]
            if prop == "lanes":
                attempted["lanes"] = True
                if not rest or len(rest) > 2:
                    c.add(no, pcol, "syntax", "usage: road lanes <2|3|4> [hard_shoulder]")
                    continue
                n = integer(rest[0], no, "lane count")
                if n is not None and n not in (2, 3, 4):
                    c.add(no, rest[0][0], "range", f"lane count {n} not in {{2, 3, 4}}")
                    n = None
                if len(rest) == 2 and enum(rest[1], ("hard_shoulder",), no) is None:
                    continue
                if once("road lanes", no, col0) and n is not None:
                    lanes, shoulder = n, len(rest) == 2
            elif prop in ("alignment", "elevation", "speed_limit", "guard_rail"):
                if len(rest) != 1:
                    c.add(no, pcol, "syntax", f"road {prop} takes one value")
                    continue
                if prop == "speed_limit":
                    v = integer(rest[0], no, "speed limit")
                    if v is not None and v not in SPEED_LIMITS:
                        c.add(no, rest[0][0], "unknown_keyword", f"unknown keyword '{v}'")
                    elif v is not None and once("road speed_limit", no, col0):
                        road["speed_limit"] = v
                elif prop == "guard_rail":
                    side = enum(rest[0], GUARD_RAIL_SIDES, no)
                    if side:
                        guard |= {"left", "right"} if side == "both" else {side}
                else:
                    choices = ALIGNMENTS if prop == "alignment" else ELEVATIONS
                    v = enum(rest[0], choices, no)
                    if v and once(f"road {prop}", no, col0):
                        road[prop] = v
            else:
                c.add(no, pcol, "unknown_keyword", f"unknown keyword '{prop}'")
        elif head == "env":
            if len(args) != 2:
                c.add(no, col0, "syntax", "usage: env <weather|daytime> <value>")
                continue
            pcol, prop = args[0]
            if prop not in ("weather", "daytime"):
                c.add(no, pcol, "unknown_keyword", f"unknown keyword '{prop}'")
                continue
            v = enum(args[1], WEATHERS if prop == "weather" else DAYTIMES, no)
            if v and once(f"env {prop}", no, col0):
                env[prop] = v
        elif head == "actor":
            if len(args) != 6 or args[2][1] != "lane" or args[4][1] != "slot":
                c.add(no, col0, "syntax", "usage: actor <id> <car|truck> lane <int> slot <int>")
                continue
            icol, ident = args[0]
            if not _IDENT.match(ident) or ident in RESERVED_IDS or ident.startswith("lane_"):
                c.add(no, icol, "syntax", f"invalid actor id '{ident}'")
                continue
            vtype = enum(args[1], VEHICLE_TYPES, no)
            lane = integer(args[3], no, "lane")
            slot = integer(args[5], no, "slot")
            if any(a.id == ident for a in actors):
                c.add(no, icol, "duplicate_actor", f"duplicate actor id '{ident}'", f"actor:{ident}")
                continue
            if vtype and lane is not None and slot is not None:
                actors.append(ActorSpec(ident, vtype, GridPosition(lane, slot)))
        elif head == "start":
            if len(args) not in (2, 4) or (len(args) == 4 and args[2][1] != "of"):
                c.add(no, col0, "syntax", "usage: start <id> <maneuver> [of <id>]")
                continue
            ident = args[0][1]
            kind = enum(args[1], MANEUVERS, no)
            if kind is None:
                continue
            if ident in starts:
                c.add(no, args[0][0], "duplicate_statement", f"duplicate start for '{ident}'")
                continue
            starts[ident] = ManeuverSpec(kind, args[3][1] if len(args) == 4 else None)
        elif head == "end":
            if len(args) != 5 or args[1][1] != "lane" or args[3][1] != "slot":
                c.add(no, col0, "syntax", "usage: end <id> lane <int> slot <int>")
                continue
            ident = args[0][1]
            lane = integer(args[2], no, "lane")
            slot = integer(args[4], no, "slot")
            if ident in ends:
                c.add(no, args[0][0], "duplicate_statement", f"duplicate end for '{ident}'")
                continue
            if lane is not None and slot is not None:
                ends[ident] = GridPosition(lane, slot)
        else:
            c.add(no, col0, "unknown_keyword", f"unknown keyword '{head}'")

    if name is None and not attempted["scenario"]:
        c.add(1, 1, "missing", "missing 'scenario' statement")
    if lanes is None and not attempted["lanes"]:
        c.add(1, 1, "missing", "missing 'road lanes' statement")
    if name is None or lanes is None:
        return None, c.diags
    fs = FunctionalScenario(
        name=name,
        road=RoadSpec(lanes, shoulder, road.get("alignment", "straight"),
                      road.get("elevation", "plane"), road.get("speed_limit"),
                      frozenset(guard)),
        environment=EnvironmentSpec(env.get("weather", "clear"), env.get("daytime", "midday")),
        actors=tuple(actors),
        start_maneuvers=starts,
        end_positions=ends,
    )
    return fs, c.diags


def print_functional_scenario(fs: FunctionalScenario) -> str:
    """Canonical DSL text; ``parse(print(fs)) == fs`` for valid scenarios."""
    r = fs.road
    out = [f"scenario {fs.name}",
           f"road lanes {r.n_driving_lanes}" + (" hard_shoulder" if r.hard_shoulder else ""),
           f"road alignment {r.alignment}",
           f"road elevation {r.elevation}"]
    if r.speed_limit is not None:
        out.append(f"road speed_limit {r.speed_limit}")
    if r.guard_rail == {"left", "right"}:
        out.append("road guard_rail both")
    elif r.guard_rail:
        out.append(f"road guard_rail {next(iter(r.guard_rail))}")
    out.append(f"env weather {fs.environment.weather}")
    out.append(f"env daytime {fs.environment.daytime}")
    for a in fs.actors:
        out.append(f"actor {a.id} {a.vehicle_type} lane {a.start.lane} slot {a.start.slot}")
    for a in fs.actors:
        if a.id in fs.start_maneuvers:
            m = fs.start_maneuvers[a.id]
            out.append(f"start {a.id} {m.kind}" + (f" of {m.target}" if m.target else ""))
    for a in fs.actors:
        if a.id in fs.end_positions:
            e = fs.end_positions[a.id]
            out.append(f"end {a.id} lane {e.lane} slot {e.slot}")
    return "\n".join(out) + "\n"


# -- semantics ------------------------------------------------------------------

def maneuver_post_lanes(fs: FunctionalScenario) -> dict[str, int]:
    """Lane of every actor after its start-scene maneuver (discrete model)."""
    return {a.id: a.start.lane + LANE_SHIFT.get(fs.maneuver(a.id).kind, 0) for a in fs.actors}


def lane_sets(fs: FunctionalScenario, post: dict[str, int]) -> dict[str, set[int]]:
    return {a.id: {a.start.lane, post[a.id]} for a in fs.actors}


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)


def order_preserved(fs: FunctionalScenario, ends: dict[str, GridPosition]) -> list[tuple[str, str]]:
    """Actor pairs whose longitudinal order (incl. ties) differs between the scenes."""
    bad = []
    for a, b in combinations(fs.actors, 2):
        if a.id in ends and b.id in ends:
            if _sign(a.start.slot - b.start.slot) != _sign(ends[a.id].slot - ends[b.id].slot):
                bad.append((a.id, b.id))
    return bad


def validate_scenario(fs: FunctionalScenario) -> list[Diagnostic]:
    """All invariant and cross-field violations, sorted, never raising."""
    out: list[Diagnostic] = []

    def diag(code, message, element):
        out.append(Diagnostic(0, 0, code, message, element))

    n = fs.road.n_driving_lanes
    if n not in (2, 3, 4):
        diag("range", f"lane count {n} not in {{2, 3, 4}}", "road:")
    ids = [a.id for a in fs.actors]
    if not fs.actors:
        diag("no_actors", "scenario needs at least one actor", "actors:")
    for ident in sorted({i for i in ids if ids.count(i) > 1}):
        diag("duplicate_actor", f"duplicate actor id '{ident}'", f"actor:{ident}")
    actors = {a.id: a for a in fs.actors}

    def check_pos(pos: GridPosition, element: str):
        ok = True
        if not 1 <= pos.lane <= n:
            diag("lane_range", "lane index exceeds road lanes", element)
            ok = False
        if abs(pos.slot) > MAX_SLOT:
            diag("slot_range", "grid slot out of bounds", element)
            ok = False
        return ok

    for a in fs.actors:
        check_pos(a.start, f"start_position:{a.id}")
    for ident, pos in fs.end_positions.items():
        if ident not in actors:
            diag("unknown_actor", f"end position for undeclared actor '{ident}'", f"end_position:{ident}")
        else:
            check_pos(pos, f"end_position:{ident}")
    for ident in ids:
        if ident not in fs.end_positions:
            diag("missing_end", "missing end position", f"end_position:{ident}")

    starts = sorted(a.start for a in fs.actors)
    for pos in sorted({p for p in starts if starts.count(p) > 1}):
        who = ",".join(sorted(a.id for a in fs.actors if a.start == pos))
        diag("duplicate_start", "duplicate start position", f"start_position:{who}")
    ends = sorted(fs.end_positions.values())
    for pos in sorted({p for p in ends if ends.count(p) > 1}):
        who = ",".join(sorted(i for i, p in fs.end_positions.items() if p == pos))
        diag("duplicate_end", "duplicate end position", f"end_position:{who}")

    target_ok = True
    for ident, m in fs.start_maneuvers.items():
        el = f"maneuver:{ident}"
        if ident not in actors:
            diag("unknown_actor", f"maneuver for undeclared actor '{ident}'", el)
            target_ok = False
            continue
        if m.kind in TARGETED:
            if m.target is None:
                diag("target_missing", f"{m.kind} needs a target ('of <id>')", el)
                target_ok = False
            elif m.target not in actors or m.target == ident:
                diag("target_invalid", f"{m.kind} target '{m.target}' is not another declared actor", el)
                target_ok = False
            else:
                me, tgt = actors[ident].start, actors[m.target].start
                if tgt.lane != me.lane or tgt.slot <= me.slot:
                    diag("target_position", f"{m.kind.replace('_', ' ')} target must be ahead in same lane", el)
                    target_ok = False
                if fs.maneuver(m.target).kind not in CONSTANT_SPEED:
                    diag("target_maneuver", f"{m.kind} target must hold a constant speed", el)
                    target_ok = False
        elif m.target is not None:
            diag("target_forbidden", f"{m.kind} takes no target", el)
            target_ok = False

    if out or not target_ok:
        return sorted(out)

    post = maneuver_post_lanes(fs)
    for a in fs.actors:
        if fs.end_positions[a.id].lane != post[a.id]:
            diag("end_inconsistent", "end scene inconsistent with maneuver", f"end_position:{a.id}")
    for x, y in order_preserved(fs, fs.end_positions):
        diag("end_reorder", "end scene reorders vehicles", f"end_position:{x},{y}")
    shared = lane_sets(fs, post)
    for a, b in combinations(fs.actors, 2):
        if shared[a.id] & shared[b.id] and a.start.slot == b.start.slot:
            diag("shared_lane_tie", "vehicles sharing a lane must start at distinct slots",
                 f"start_position:{','.join(sorted((a.id, b.id)))}")
    return sorted(out)
