"""Synthetic benchmark scenarios: signalized grids with turn-specific lanes.

Shapes mirror the usual 1x1 / 1x3 arterial / 4x4 grid benchmark scenarios
with synthetic demand. Signalized intersections sit at grid coordinates
(1..cols, 1..rows); a ring of virtual boundary nodes feeds and drains them.

Usage as a script writes every fixture to disk in both formats:
    python -m tscbench.fixtures OUTDIR
"""

from __future__ import annotations

from tscbench.model import (
    DEFAULT_VEHICLE,
    DEFAULT_YELLOW_TIME,
    FlowSet,
    FlowSpec,
    Intersection,
    Lane,
    Movement,
    Phase,
    Road,
    RoadNetwork,
    movement_id_for,
)

# headings by travel direction, y grows northward
_HEADINGS = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}
_LEFT = {(dx, dy): (-dy, dx) for dx, dy in _HEADINGS.values()}
_RIGHT = {(dx, dy): (dy, -dx) for dx, dy in _HEADINGS.values()}


def node_id(x: int, y: int) -> str:
    return f"I_{x}_{y}"


def road_id(fx: int, fy: int, tx: int, ty: int) -> str:
    return f"R_{fx}_{fy}_{tx}_{ty}"


def lane_id(road: str, index: int) -> str:
    return f"{road}_{index}"


def _turn_to_lane(turn: str, n_lanes: int) -> int:
    # rightmost lane turns right, leftmost turns left
    return {"right": 0, "straight": min(1, n_lanes - 1), "left": n_lanes - 1}[turn]


def grid_network(cols: int, rows: int, *, phase_count: int = 8,
                 lanes_per_road: int = 1, block: float = 300.0,
                 speed: float = 16.67,
                 yellow_time: float = DEFAULT_YELLOW_TIME) -> RoadNetwork:
    """Build a cols x rows signalized grid ringed by virtual boundary nodes.

    With multi-lane roads each turn starts from its approach lane (right turns
    from the rightmost, lefts from the leftmost) and fans out to every lane of
    the target road, so routes never need a lane change."""
    if phase_count not in (4, 8):
        raise ValueError("phase_count must be 4 or 8")

    signal = {(x, y) for x in range(1, cols + 1) for y in range(1, rows + 1)}
    boundary = ({(0, y) for y in range(1, rows + 1)}
                | {(cols + 1, y) for y in range(1, rows + 1)}
                | {(x, 0) for x in range(1, cols + 1)}
                | {(x, rows + 1) for x in range(1, cols + 1)})
    nodes = signal | boundary

    roads, lanes = [], []
    road_at = {}  # (from_xy, to_xy) -> road id
    for (x, y) in sorted(nodes):
        for dx, dy in _HEADINGS.values():
            nb = (x + dx, y + dy)
            if nb not in nodes:
                continue
            rid = road_id(x, y, *nb)
            lane_ids = tuple(lane_id(rid, i) for i in range(lanes_per_road))
            roads.append(Road(rid, node_id(x, y), node_id(*nb), block, lane_ids, speed))
            lanes.extend(Lane(lid, rid, i, block, speed) for i, lid in enumerate(lane_ids))
            road_at[((x, y), nb)] = rid

    movements = []
    moves_by_node = {}  # (x, y) -> {(dir_name, turn): [movement ids]}
    for (x, y) in sorted(signal):
        at = moves_by_node[(x, y)] = {}
        for dname, (dx, dy) in _HEADINGS.items():
            src = (x - dx, y - dy)
            in_road = road_at.get((src, (x, y)))
            if in_road is None:
                continue
            for turn, (tx, ty) in (("straight", (dx, dy)),
                                   ("left", _LEFT[(dx, dy)]),
                                   ("right", _RIGHT[(dx, dy)])):
                out_road = road_at.get(((x, y), (x + tx, y + ty)))
                if out_road is None:
                    continue
                li = _turn_to_lane(turn, lanes_per_road)
                in_lane = lane_id(in_road, li)
                ids = []
                for lo in range(lanes_per_road):
                    out_lane = lane_id(out_road, lo)
                    mid = movement_id_for(in_lane, out_lane)
                    movements.append(Movement(mid, in_lane, out_lane, turn))
                    ids.append(mid)
                at[(dname, turn)] = ids

    def group(node, *keys):
        ids = []
        for k in keys:
            ids.extend(moves_by_node[node].get(k, ()))
        return frozenset(ids)

    intersections = []
    for (x, y) in sorted(nodes):
        if (x, y) in boundary:
            intersections.append(Intersection(node_id(x, y),
                                              (x * block, y * block), True, (), 0.0))
            continue
        n = (x, y)
        # rights ride along with their approach's through phase
        groups = [
            group(n, ("N", "straight"), ("S", "straight"), ("N", "right"), ("S", "right")),
            group(n, ("N", "left"), ("S", "left")),
            group(n, ("E", "straight"), ("W", "straight"), ("E", "right"), ("W", "right")),
            group(n, ("E", "left"), ("W", "left")),
            group(n, ("N", "straight"), ("N", "left"), ("N", "right")),
            group(n, ("S", "straight"), ("S", "left"), ("S", "right")),
            group(n, ("E", "straight"), ("E", "left"), ("E", "right")),
            group(n, ("W", "straight"), ("W", "left"), ("W", "right")),
        ][:phase_count]
        phases = tuple(Phase(i, g) for i, g in enumerate(groups))
        intersections.append(Intersection(node_id(x, y), (x * block, y * block),
                                          False, phases, yellow_time))

    return RoadNetwork(tuple(intersections), tuple(roads), tuple(lanes), tuple(movements))


def _route(*hops: tuple[int, int]) -> tuple[str, ...]:
    return tuple(road_id(*a, *b) for a, b in zip(hops, hops[1:]))


def demand_1x1() -> FlowSet:
    """Asymmetric demand: a heavy east-west axis over a light north-south one."""
    v = DEFAULT_VEHICLE
    return FlowSet((
        FlowSpec(_route((0, 1), (1, 1), (2, 1)), 0.0, 3600.0, 4.0, v),    # W -> E through
        FlowSpec(_route((2, 1), (1, 1), (0, 1)), 0.0, 3600.0, 6.0, v),    # E -> W through
        FlowSpec(_route((1, 2), (1, 1), (1, 0)), 0.0, 3600.0, 25.0, v),   # N -> S through
        FlowSpec(_route((1, 0), (1, 1), (1, 2)), 0.0, 3600.0, 25.0, v),   # S -> N through
        FlowSpec(_route((0, 1), (1, 1), (1, 2)), 0.0, 3600.0, 40.0, v),   # eastbound left
        FlowSpec(_route((2, 1), (1, 1), (1, 0)), 0.0, 3600.0, 40.0, v),   # westbound left
    ))


def demand_1x3() -> FlowSet:
    v = DEFAULT_VEHICLE
    flows = [
        FlowSpec(_route((0, 1), (1, 1), (2, 1), (3, 1), (4, 1)), 0.0, 3600.0, 4.0, v),
        FlowSpec(_route((4, 1), (3, 1), (2, 1), (1, 1), (0, 1)), 0.0, 3600.0, 6.0, v),
    ]
    for x in (1, 2, 3):
        flows.append(FlowSpec(_route((x, 2), (x, 1), (x, 0)), 0.0, 3600.0, 30.0, v))
        flows.append(FlowSpec(_route((x, 0), (x, 1), (x, 2)), 0.0, 3600.0, 30.0, v))
    flows.append(FlowSpec(_route((1, 1), (2, 1), (2, 2)), 0.0, 3600.0, 45.0, v))
    return FlowSet(tuple(flows))


def demand_4x4() -> FlowSet:
    v = DEFAULT_VEHICLE
    flows = []
    for y in range(1, 5):
        flows.append(FlowSpec(_route(*[(x, y) for x in range(0, 6)]), 0.0, 3600.0, 8.0, v))
        flows.append(FlowSpec(_route(*[(x, y) for x in range(5, -1, -1)]), 0.0, 3600.0, 12.0, v))
    for x in range(1, 5):
        flows.append(FlowSpec(_route(*[(x, y) for y in range(0, 6)]), 0.0, 3600.0, 15.0, v))
        flows.append(FlowSpec(_route(*[(x, y) for y in range(5, -1, -1)]), 0.0, 3600.0, 15.0, v))
    return FlowSet(tuple(flows))


FIXTURE_NAMES = ("1x1", "1x1_4phase", "1x3", "4x4")


def fixture(name: str) -> tuple[RoadNetwork, FlowSet]:
    if name == "1x1":
        return grid_network(1, 1, phase_count=8), demand_1x1()
    if name == "1x1_4phase":
        return grid_network(1, 1, phase_count=4), demand_1x1()
    if name == "1x3":
        return grid_network(3, 1, phase_count=8), demand_1x3()
    if name == "4x4":
        return grid_network(4, 4, phase_count=8), demand_4x4()
    raise KeyError(f"unknown fixture {name!r}; have {FIXTURE_NAMES}")


def main(argv=None):
    import argparse
    import pathlib

    from tscbench import formats

    ap = argparse.ArgumentParser(description="write the shipped fixtures to disk")
    ap.add_argument("outdir", type=pathlib.Path)
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name in FIXTURE_NAMES:
        net, flows = fixture(name)
        for kind, next_, flowext in (("cityflow_style_json", ".json", ".flow.json"),
                                     ("sumo_style_xml", ".net.xml", ".rou.xml")):
            (args.outdir / f"{name}{next_}").write_bytes(formats.save_network(kind, net))
            (args.outdir / f"{name}{flowext}").write_bytes(formats.save_flows(kind, flows))
    print(f"wrote {len(FIXTURE_NAMES)} fixtures to {args.outdir}")


if __name__ == "__main__":
    main()
