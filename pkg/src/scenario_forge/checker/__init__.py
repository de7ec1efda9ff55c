from .conformance import (
    CRASH_GAP,
    ConformanceReport,
    check_conformance,
    maneuver_signature,
    min_same_lane_gap,
    swap_speeds,
)
from .kernel import BACKEND
from .simulate import Trace, encode, simulate

__all__ = [
    "BACKEND",
    "CRASH_GAP",
    "ConformanceReport",
    "Trace",
    "check_conformance",
    "encode",
    "maneuver_signature",
    "min_same_lane_gap",
    "simulate",
    "swap_speeds",
]
