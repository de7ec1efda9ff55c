"""Scenario corpora shared by the test modules."""

from __future__ import annotations

import itertools
from pathlib import Path

from scenario_forge.scenario_model import ALIGNMENTS, ELEVATIONS, GUARD_RAIL_SIDES, SPEED_LIMITS as LIMITS

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
FIG6 = SCENARIOS / "fig6.fscn"

LANE_COUNTS = (2, 3, 4)
SHOULDERS = (False, True)
SPEED_LIMITS = (None, *LIMITS)
GUARD_RAILS = GUARD_RAIL_SIDES

CANONICAL_ACTORS = """\
actor A1 car lane 1 slot 0
actor A2 truck lane 1 slot 1
start A1 approach of A2
end A1 lane 1 slot 0
end A2 lane 1 slot 1
"""


def road_variant(lanes, shoulder, alignment, elevation, limit, rail) -> str:
    name = f"v_{lanes}{'s' if shoulder else 'n'}_{alignment}_{elevation}_{limit or 'none'}_{rail or 'none'}"
    lines = [f"scenario {name}", f"road lanes {lanes}" + (" hard_shoulder" if shoulder else ""),
             f"road alignment {alignment}", f"road elevation {elevation}"]
    if limit:
        lines.append(f"road speed_limit {limit}")
    if rail:
        lines.append(f"road guard_rail {rail}")
    return "\n".join(lines) + "\n" + CANONICAL_ACTORS


def vocabulary_corpus() -> list[str]:
    """Every road keyword combination with the canonical two-actor approach."""
    return [road_variant(*combo) for combo in itertools.product(
        LANE_COUNTS, SHOULDERS, ALIGNMENTS, ELEVATIONS, SPEED_LIMITS, GUARD_RAILS)]


def curated_paths() -> list[Path]:
    return sorted((SCENARIOS / "curated").glob("*.fscn"))


def curated_texts() -> list[str]:
    return [p.read_text(encoding="utf-8") for p in curated_paths()]


def full_corpus() -> list[str]:
    return vocabulary_corpus() + curated_texts() + [FIG6.read_text(encoding="utf-8")]
