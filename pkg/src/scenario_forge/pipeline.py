"""End-to-end compile: DSL text to road, storyboard and rules documents."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .checker import ConformanceReport, Trace, check_conformance, simulate
from .detailing import EventTimeline, detail_scenario
from .opendrive import RoadNetworkIR, build_road_ir, emit_opendrive
from .openscenario import StoryboardIR, build_storyboard, emit_openscenario, emit_rules_file
from .parameter_space import ParameterSpace, check_valuation
from .scenario_model import FunctionalScenario, parse_functional_scenario
from .valuation import ConcreteValuation, assign_defaults


class CompileError(ValueError):
    def __init__(self, stage: str, errors: list[str]):
        self.stage = stage
        self.errors = list(errors)
        super().__init__(f"{stage}: " + "; ".join(self.errors))


@dataclass(frozen=True)
class CompiledScenario:
    fs: FunctionalScenario
    space: ParameterSpace
    timeline: EventTimeline
    valuation: ConcreteValuation
    road: RoadNetworkIR
    storyboard: StoryboardIR
    xodr: bytes
    xosc: bytes
    rules: str

    @property
    def name(self) -> str:
        return self.fs.name

    @property
    def xodr_name(self) -> str:
        return f"{self.name}.xodr"

    def outputs(self) -> dict[str, bytes]:
        return {
            "xodr": self.xodr,
            "xosc": self.xosc,
            "rules": self.rules.encode("utf-8"),
        }

    def file_names(self) -> dict[str, str]:
        return {"xodr": self.xodr_name, "xosc": f"{self.name}.xosc", "rules": f"{self.name}.rules.json"}

    def run(self, dt: float = 0.02) -> tuple[Trace, ConformanceReport]:
        trace = simulate(self.storyboard, self.road, dt)
        return trace, check_conformance(trace, self.fs, self.storyboard.mapping)


def realize(fs: FunctionalScenario, space: ParameterSpace, timeline: EventTimeline, valuation,
            examples=()) -> CompiledScenario:
    """Emit all three documents for one concrete valuation."""
    road = build_road_ir(space, valuation)
    sb = build_storyboard(timeline, space, valuation, road, fs)
    return CompiledScenario(
        fs, space, timeline, valuation, road, sb,
        emit_opendrive(road),
        emit_openscenario(sb, f"{fs.name}.xodr"),
        emit_rules_file(space, valuation, examples),
    )


def compile_scenario(source: str | FunctionalScenario) -> CompiledScenario:
    fs = parse_functional_scenario(source) if isinstance(source, str) else source
    space, timeline = detail_scenario(fs)
    valuation = assign_defaults(space)
    bad = check_valuation(space, valuation)
    if bad:
        raise CompileError("defaults", [f"{x.subject}: {x.message}" for x in bad])
    return realize(fs, space, timeline, valuation)


def compile_file(path: str | Path) -> CompiledScenario:
    return compile_scenario(Path(path).read_text(encoding="utf-8"))
