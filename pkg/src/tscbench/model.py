"""Canonical in-memory road network, signal program, and demand types.

Everything here is immutable after construction and independent of any file
format. Identifiers are opaque strings; wherever a deterministic order is
needed downstream, lexicographic order of ids is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


TURN_KINDS = ("left", "straight", "right")


def movement_id_for(in_lane: str, out_lane: str) -> str:
    """Canonical movement id. Neither file format serializes movement ids,
    so loaders regenerate them from the lane pair with this function."""
    return f"{in_lane}__{out_lane}"


@dataclass(frozen=True)
class VehicleParams:
    """Kinematic parameters of a vehicle class. All strictly positive."""

    max_speed: float = 16.67  # m/s
    accel: float = 2.0       # m/s^2
    decel: float = 4.5       # m/s^2, informational for the safe-speed rule
    length: float = 5.0      # m
    min_gap: float = 2.5     # m


DEFAULT_VEHICLE = VehicleParams()
DEFAULT_YELLOW_TIME = 5.0


@dataclass(frozen=True)
class Phase:
    index: int
    allowed_movements: frozenset[str]


@dataclass(frozen=True)
class Intersection:
    id: str
    position: tuple[float, float]  # planar meters
    virtual: bool
    phases: tuple[Phase, ...]
    yellow_time: float


@dataclass(frozen=True)
class Road:
    id: str
    from_intersection: str
    to_intersection: str
    length: float
    lanes: tuple[str, ...]  # ordered lane ids, index 0 first
    speed_limit: float


@dataclass(frozen=True)
class Lane:
    id: str
    road: str
    index: int
    length: float  # equals road length
    max_speed: float


@dataclass(frozen=True)
class Movement:
    """An (in-lane -> out-lane) traversal through an intersection."""

    id: str
    in_lane: str
    out_lane: str
    turn_kind: str  # left | straight | right


@dataclass(frozen=True)
class FlowSpec:
    """One timed demand stream: spawns every `interval` s in [start, end]."""

    route: tuple[str, ...]  # ordered road ids; may be origin+destination only
    start_time: float
    end_time: float
    interval: float
    vehicle: VehicleParams = DEFAULT_VEHICLE
    od_only: bool = False  # source gave endpoints only; needs completion


@dataclass(frozen=True)
class FlowSet:
    flows: tuple[FlowSpec, ...]


@dataclass(frozen=True)
class RoadNetwork:
    intersections: tuple[Intersection, ...]
    roads: tuple[Road, ...]
    lanes: tuple[Lane, ...]
    movements: tuple[Movement, ...]
    # id indexes, derived
    intersections_by_id: dict = field(init=False, repr=False, compare=False)
    roads_by_id: dict = field(init=False, repr=False, compare=False)
    lanes_by_id: dict = field(init=False, repr=False, compare=False)
    movements_by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "intersections_by_id", {i.id: i for i in self.intersections})
        object.__setattr__(self, "roads_by_id", {r.id: r for r in self.roads})
        object.__setattr__(self, "lanes_by_id", {l.id: l for l in self.lanes})
        object.__setattr__(self, "movements_by_id", {m.id: m for m in self.movements})

    def incoming_roads(self, intersection_id: str) -> list[Road]:
        return [r for r in self.roads if r.to_intersection == intersection_id]

    def outgoing_roads(self, intersection_id: str) -> list[Road]:
        return [r for r in self.roads if r.from_intersection == intersection_id]

    def incoming_lanes(self, intersection_id: str) -> list[Lane]:
        """Incoming lanes ordered by (road id, lane index); the stable
        observation order used everywhere downstream."""
        lanes = []
        for road in self.incoming_roads(intersection_id):
            for lane_id in road.lanes:
                lanes.append(self.lanes_by_id[lane_id])
        lanes.sort(key=lambda l: (l.road, l.index))
        return lanes

    def movements_at(self, intersection_id: str) -> list[Movement]:
        """Movements whose in-lane road ends at this intersection, id-sorted."""
        out = []
        for m in self.movements:
            in_lane = self.lanes_by_id.get(m.in_lane)
            if in_lane is None:
                continue
            road = self.roads_by_id.get(in_lane.road)
            if road is not None and road.to_intersection == intersection_id:
                out.append(m)
        out.sort(key=lambda m: m.id)
        return out

    def controlled_intersections(self) -> list[Intersection]:
        return sorted((i for i in self.intersections if not i.virtual), key=lambda i: i.id)


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    entity: str
    message: str


@dataclass
class ValidationReport:
    """Violations are data, not faults. Warnings never fail validation."""

    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, entity: str, message: str):
        self.errors.append(ValidationIssue(code, entity, message))

    def warn(self, code: str, entity: str, message: str):
        self.warnings.append(ValidationIssue(code, entity, message))

    def lines(self) -> list[str]:
        out = [f"error: {e.code} [{e.entity}]: {e.message}" for e in self.errors]
        out += [f"warning: {w.code} [{w.entity}]: {w.message}" for w in self.warnings]
        return out


def validate_network(net: RoadNetwork) -> ValidationReport:
    """Check every structural invariant; list one issue per violation."""
    rep = ValidationReport()

    seen = set()
    for coll, kind in ((net.intersections, "intersection"), (net.roads, "road"),
                       (net.lanes, "lane"), (net.movements, "movement")):
        for item in coll:
            if item.id in seen:
                rep.error("duplicate id", item.id, f"{kind} id reused")
            seen.add(item.id)

    for road in net.roads:
        for end in (road.from_intersection, road.to_intersection):
            if end not in net.intersections_by_id:
                rep.error("dangling reference", road.id, f"endpoint intersection {end!r} absent")
        if road.length <= 0:
            rep.error("nonpositive length", road.id, f"length {road.length}")
        if road.speed_limit <= 0:
            rep.error("nonpositive speed", road.id, f"speed_limit {road.speed_limit}")
        if not road.lanes:
            rep.error("no lanes", road.id, "road must have at least one lane")
        for idx, lane_id in enumerate(road.lanes):
            lane = net.lanes_by_id.get(lane_id)
            if lane is None:
                rep.error("dangling reference", road.id, f"lane {lane_id!r} absent")
            elif lane.road != road.id or lane.index != idx:
                rep.error("lane mismatch", lane_id,
                          f"listed at index {idx} of {road.id} but carries ({lane.road}, {lane.index})")

    for lane in net.lanes:
        road = net.roads_by_id.get(lane.road)
        if road is None:
            rep.error("dangling reference", lane.id, f"road {lane.road!r} absent")
        elif not math.isclose(lane.length, road.length):
            rep.error("length mismatch", lane.id,
                      f"lane length {lane.length} != road length {road.length}")
        if lane.max_speed <= 0:
            rep.error("nonpositive speed", lane.id, f"max_speed {lane.max_speed}")

    for m in net.movements:
        in_lane = net.lanes_by_id.get(m.in_lane)
        out_lane = net.lanes_by_id.get(m.out_lane)
        if in_lane is None:
            rep.error("dangling reference", m.id, f"in-lane {m.in_lane!r} absent")
        if out_lane is None:
            rep.error("dangling reference", m.id, f"out-lane {m.out_lane!r} absent")
        if m.in_lane == m.out_lane:
            rep.error("self-loop movement", m.id, "in-lane equals out-lane")
        if m.turn_kind not in TURN_KINDS:
            rep.error("unknown turn kind", m.id, f"{m.turn_kind!r}")
        if in_lane is not None and out_lane is not None:
            r_in = net.roads_by_id.get(in_lane.road)
            r_out = net.roads_by_id.get(out_lane.road)
            if r_in is not None and r_out is not None and \
                    r_in.to_intersection != r_out.from_intersection:
                rep.error("disconnected movement", m.id,
                          f"{r_in.id} ends at {r_in.to_intersection}, "
                          f"{r_out.id} begins at {r_out.from_intersection}")

    for inter in net.intersections:
        if inter.yellow_time < 0:
            rep.error("negative yellow", inter.id, f"yellow_time {inter.yellow_time}")
        if inter.virtual:
            if inter.phases:
                rep.error("virtual with phases", inter.id, "virtual intersections carry no signal")
            continue
        if not inter.phases:
            rep.error("no phases", inter.id, "non-virtual intersection needs >= 1 phase")
            continue
        indices = sorted(p.index for p in inter.phases)
        if indices != list(range(len(inter.phases))):
            rep.error("phase index gap", inter.id, f"indices {indices}")
        for phase in inter.phases:
            if not phase.allowed_movements:
                rep.error("empty phase", f"{inter.id}/phase{phase.index}",
                          "phases must allow at least one movement")
            for mid in sorted(phase.allowed_movements):
                m = net.movements_by_id.get(mid)
                if m is None:
                    rep.error("dangling reference", f"{inter.id}/phase{phase.index}",
                              f"movement {mid!r} absent")
                    continue
                in_lane = net.lanes_by_id.get(m.in_lane)
                road = net.roads_by_id.get(in_lane.road) if in_lane else None
                if road is not None and road.to_intersection != inter.id:
                    rep.error("foreign movement", f"{inter.id}/phase{phase.index}",
                              f"movement {mid} does not end at {inter.id}")
    return rep


def validate_demand(net: RoadNetwork, flows: FlowSet) -> ValidationReport:
    """Demand-side checks: routes reference the network and are well-formed."""
    rep = ValidationReport()
    for i, flow in enumerate(flows.flows):
        ent = f"flow{i}"
        if not flow.route:
            rep.error("empty route", ent, "route must name at least one road")
            continue
        missing = [r for r in flow.route if r not in net.roads_by_id]
        if missing:
            rep.error("dangling reference", ent, f"unknown roads {missing}")
            continue
        for a, b in zip(flow.route, flow.route[1:]):
            ra, rb = net.roads_by_id[a], net.roads_by_id[b]
            if ra.to_intersection != rb.from_intersection:
                rep.error("disconnected route", ent, f"{a} -> {b} share no intersection")
        if flow.interval <= 0:
            rep.error("nonpositive interval", ent, f"interval {flow.interval}")
        if flow.start_time > flow.end_time:
            rep.error("inverted window", ent, f"start {flow.start_time} > end {flow.end_time}")
        v = flow.vehicle
        if min(v.max_speed, v.accel, v.decel, v.length, v.min_gap) <= 0:
            rep.error("nonpositive vehicle param", ent, f"{v}")
    return rep


def phase_movements(net: RoadNetwork, intersection_id: str, phase_index: int) -> frozenset[str]:
    """Movement ids granted green in one phase. Pure lookup."""
    inter = net.intersections_by_id.get(intersection_id)
    if inter is None:
        raise KeyError(f"unknown intersection {intersection_id!r}")
    if inter.virtual:
        raise ValueError(f"intersection {intersection_id!r} is virtual")
    if not 0 <= phase_index < len(inter.phases):
        raise IndexError(f"phase {phase_index} out of range for {intersection_id!r} "
                         f"({len(inter.phases)} phases)")
    return inter.phases[phase_index].allowed_movements


def movement_endpoints(net: RoadNetwork, movement_id: str) -> tuple[str, str]:
    m = net.movements_by_id.get(movement_id)
    if m is None:
        raise KeyError(f"unknown movement {movement_id!r}")
    return (m.in_lane, m.out_lane)


def network_equal(a: RoadNetwork, b: RoadNetwork) -> bool:
    """Graph equality with id preservation; order of collections ignored."""
    def inter_key(i: Intersection):
        return (i.id, i.position, i.virtual,
                tuple((p.index, tuple(sorted(p.allowed_movements))) for p in
                      sorted(i.phases, key=lambda p: p.index)),
                i.yellow_time)

    return (sorted(map(inter_key, a.intersections)) == sorted(map(inter_key, b.intersections))
            and sorted(a.roads, key=lambda r: r.id) == sorted(b.roads, key=lambda r: r.id)
            and sorted(a.lanes, key=lambda l: l.id) == sorted(b.lanes, key=lambda l: l.id)
            and sorted(a.movements, key=lambda m: m.id) == sorted(b.movements, key=lambda m: m.id))


def flows_equal(a: FlowSet, b: FlowSet, ignore_order: bool = False) -> bool:
    fa, fb = list(a.flows), list(b.flows)
    if ignore_order:
        key = lambda f: (f.start_time, f.route, f.end_time, f.interval)
        fa, fb = sorted(fa, key=key), sorted(fb, key=key)
    return fa == fb
