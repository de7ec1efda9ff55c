"""Small builders shared by the test modules."""

MINIMAL = """\
scenario minimal
road lanes 2
road alignment straight
road elevation plane
actor A1 car lane 1 slot 0
start A1 follow_lane
end A1 lane 1 slot 0
"""


def scenario(*lines: str, name: str = "t", road=("road lanes 3",)) -> str:
    return "\n".join((f"scenario {name}", *road, *lines)) + "\n"


def approach(road=("road lanes 3",), a1="car", a2="truck", name="ap") -> str:
    return scenario(
        f"actor A1 {a1} lane 1 slot 0",
        f"actor A2 {a2} lane 1 slot 1",
        "start A1 approach of A2",
        "end A1 lane 1 slot 0",
        "end A2 lane 1 slot 1",
        name=name,
        road=road,
    )
