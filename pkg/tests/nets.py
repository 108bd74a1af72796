"""Hand-sized networks for unit tests: a straight chain of roads with
virtual junctions, so signal logic stays out of the picture unless a test
builds its own grid."""

from __future__ import annotations

from tscbench.model import (
    Intersection,
    Lane,
    Movement,
    Road,
    RoadNetwork,
    movement_id_for,
)


def make_line(road_specs, speed: float = 16.67) -> RoadNetwork:
    """Chain of roads along +x. road_specs: sequence of (length, lane_count).

    All junctions are virtual; consecutive roads are joined all-lanes to
    all-lanes with straight movements.
    """
    nodes = []
    x = 0.0
    nodes.append(Intersection("J0", (0.0, 0.0), True, (), 0.0))
    for i, (length, _) in enumerate(road_specs):
        x += length
        nodes.append(Intersection(f"J{i + 1}", (x, 0.0), True, (), 0.0))

    roads = []
    lanes = []
    for i, (length, n_lanes) in enumerate(road_specs):
        rid = f"L{i}"
        lane_ids = tuple(f"{rid}_{k}" for k in range(n_lanes))
        roads.append(Road(rid, f"J{i}", f"J{i + 1}", length, lane_ids, speed))
        for k, lid in enumerate(lane_ids):
            lanes.append(Lane(lid, rid, k, length, speed))

    movements = []
    for i in range(len(road_specs) - 1):
        for a in roads[i].lanes:
            for b in roads[i + 1].lanes:
                movements.append(Movement(movement_id_for(a, b), a, b, "straight"))

    return RoadNetwork(tuple(nodes), tuple(roads), tuple(lanes), tuple(movements))
