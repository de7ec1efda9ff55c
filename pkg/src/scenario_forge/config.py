"""Vehicle dimension and speed table, overridable via SCENARIO_FORGE_CONFIG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

ENV_VAR = "SCENARIO_FORGE_CONFIG"


@dataclass(frozen=True)
class VehicleType:
    name: str
    length: float
    width: float
    height: float
    v0: tuple[float, float]
    max_speed: float
    max_acceleration: float
    max_deceleration: float


@lru_cache(maxsize=8)
def _load(path: str | None) -> dict[str, VehicleType]:
    if path:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = json.loads(resources.files(__package__).joinpath("data/config.json").read_text("utf-8"))
    out = {}
    for name, v in raw["vehicles"].items():
        out[name] = VehicleType(name, float(v["length"]), float(v["width"]), float(v["height"]),
                                (float(v["v0"][0]), float(v["v0"][1])), float(v["max_speed"]),
                                float(v["max_acceleration"]), float(v["max_deceleration"]))
    return out


def vehicle_table() -> dict[str, VehicleType]:
    return _load(os.environ.get(ENV_VAR) or None)
