"""Keyword freeway scenarios to OpenDRIVE, OpenSCENARIO and a constraint-rules file."""

from .pipeline import CompiledScenario, CompileError, compile_file, compile_scenario
from .scenario_model import ScenarioError, parse_functional_scenario, print_functional_scenario

__version__ = "0.1.0"

__all__ = [
    "CompileError",
    "CompiledScenario",
    "ScenarioError",
    "compile_file",
    "compile_scenario",
    "parse_functional_scenario",
    "print_functional_scenario",
]
