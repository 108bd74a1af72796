"""CityFlow-style JSON codec.

Structural subset: roadnet files carry `intersections[]` (point, virtual,
roads, roadLinks with laneLinks, trafficLight.lightphases) and `roads[]`
(points, lanes of {width, maxSpeed}, startIntersection/endIntersection);
flow files are arrays of {vehicle, route, interval, startTime, endTime}.

Conventions this codec pins down:
  - road length is the polyline length of `points`; we emit straight
    two-point polylines, so saving demands length == endpoint distance;
  - lane ids regenerate as "<road>_<index>", movement ids from the lane pair;
  - a lightphase with empty availableRoadLinks is a clearance interval: its
    `time` becomes yellow_time and it is dropped from the phase table.
"""

from __future__ import annotations

import json
import math

from tscbench.formats.errors import FormatSyntaxError, SemanticError, UnrepresentableError
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
    ValidationReport,
    VehicleParams,
    movement_id_for,
)

_TURN_IN = {"turn_left": "left", "go_straight": "straight", "turn_right": "right"}
_TURN_OUT = {v: k for k, v in _TURN_IN.items()}

LANE_WIDTH = 3.0  # informational; the engine has no lateral dimension
GREEN_PHASE_TIME = 30.0  # nominal duration attr; controllers decide timing


def _decode(data) -> object:
    text = data.decode("utf-8", errors="replace") if isinstance(data, (bytes, bytearray)) else data
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatSyntaxError(f"invalid JSON: {e.msg}", offset=e.pos) from e


def _num(obj, key, entity, default=None):
    val = obj.get(key, default)
    if val is None:
        raise SemanticError(f"missing numeric field {key!r}", entity)
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise SemanticError(f"field {key!r} must be a number, got {val!r}", entity)
    return float(val)


def _polyline_length(points, entity) -> float:
    if not isinstance(points, list) or len(points) < 2:
        raise SemanticError("road needs >= 2 points", entity)
    total = 0.0
    for a, b in zip(points, points[1:]):
        total += math.hypot(_num(b, "x", entity) - _num(a, "x", entity),
                            _num(b, "y", entity) - _num(a, "y", entity))
    return total


def load_network(data, report: ValidationReport | None = None) -> RoadNetwork:
    doc = _decode(data)
    if not isinstance(doc, dict):
        raise SemanticError("roadnet document must be a JSON object", "<root>")
    raw_roads = doc.get("roads")
    raw_inters = doc.get("intersections")
    if not isinstance(raw_roads, list) or not isinstance(raw_inters, list):
        raise SemanticError("roadnet needs 'roads' and 'intersections' arrays", "<root>")

    roads, lanes = [], []
    for rr in raw_roads:
        if not isinstance(rr, dict) or not isinstance(rr.get("id"), str):
            raise SemanticError("road entries need a string 'id'", "<roads>")
        rid = rr["id"]
        length = _polyline_length(rr.get("points"), rid)
        raw_lanes = rr.get("lanes")
        if not isinstance(raw_lanes, list) or not raw_lanes:
            raise SemanticError("road needs a non-empty 'lanes' array", rid)
        lane_ids = []
        for i, rl in enumerate(raw_lanes):
            if not isinstance(rl, dict):
                raise SemanticError(f"lane {i} must be an object", rid)
            lid = f"{rid}_{i}"
            lanes.append(Lane(lid, rid, i, length, _num(rl, "maxSpeed", lid)))
            lane_ids.append(lid)
        speed_limit = max(l.max_speed for l in lanes[-len(lane_ids):])
        start = rr.get("startIntersection")
        end = rr.get("endIntersection")
        if not isinstance(start, str) or not isinstance(end, str):
            raise SemanticError("road needs startIntersection/endIntersection", rid)
        roads.append(Road(rid, start, end, length, tuple(lane_ids), speed_limit))
    roads_by_id = {r.id: r for r in roads}

    intersections, movements = [], []
    seen_movements: dict[str, Movement] = {}
    for ri in raw_inters:
        if not isinstance(ri, dict) or not isinstance(ri.get("id"), str):
            raise SemanticError("intersection entries need a string 'id'", "<intersections>")
        iid = ri["id"]
        point = ri.get("point")
        if not isinstance(point, dict):
            raise SemanticError("intersection needs a 'point' object", iid)
        pos = (_num(point, "x", iid), _num(point, "y", iid))
        virtual = bool(ri.get("virtual", False))

        link_movements: list[list[str]] = []
        for k, link in enumerate(ri.get("roadLinks") or []):
            ent = f"{iid}/roadLink{k}"
            if not isinstance(link, dict):
                raise SemanticError("roadLink must be an object", ent)
            turn = _TURN_IN.get(link.get("type"))
            if turn is None:
                raise SemanticError(f"unknown roadLink type {link.get('type')!r}", ent)
            start_road = roads_by_id.get(link.get("startRoad"))
            end_road = roads_by_id.get(link.get("endRoad"))
            if start_road is None or end_road is None:
                raise SemanticError("roadLink references an unknown road", ent)
            ids = []
            for ll in link.get("laneLinks") or []:
                si = int(_num(ll, "startLaneIndex", ent))
                ei = int(_num(ll, "endLaneIndex", ent))
                if not (0 <= si < len(start_road.lanes) and 0 <= ei < len(end_road.lanes)):
                    raise SemanticError(f"laneLink indices ({si},{ei}) out of range", ent)
                in_lane, out_lane = start_road.lanes[si], end_road.lanes[ei]
                mid = movement_id_for(in_lane, out_lane)
                prior = seen_movements.get(mid)
                if prior is None:
                    m = Movement(mid, in_lane, out_lane, turn)
                    seen_movements[mid] = m
                    movements.append(m)
                elif prior.turn_kind != turn:
                    raise SemanticError(f"movement {mid} declared twice with "
                                        f"conflicting turn kinds", ent)
                ids.append(mid)
            link_movements.append(ids)

        phases: list[Phase] = []
        yellow = DEFAULT_YELLOW_TIME
        tl = ri.get("trafficLight") or {}
        for lp in tl.get("lightphases") or []:
            ent = f"{iid}/lightphase{len(phases)}"
            avail = lp.get("availableRoadLinks") or []
            if not avail:  # clearance interval, not a phase
                yellow = _num(lp, "time", ent, default=DEFAULT_YELLOW_TIME)
                continue
            allowed: set[str] = set()
            for idx in avail:
                if not isinstance(idx, int) or not 0 <= idx < len(link_movements):
                    raise SemanticError(f"availableRoadLinks index {idx!r} out of range", ent)
                allowed.update(link_movements[idx])
            phases.append(Phase(len(phases), frozenset(allowed)))

        if virtual:
            intersections.append(Intersection(iid, pos, True, (), 0.0))
        else:
            intersections.append(Intersection(iid, pos, False, tuple(phases), yellow))

    net = RoadNetwork(tuple(intersections), tuple(roads), tuple(lanes), tuple(movements))
    from tscbench.model import validate_network
    rep = validate_network(net)
    if report is not None:
        report.errors.extend(rep.errors)
        report.warnings.extend(rep.warnings)
    if not rep.ok:
        first = rep.errors[0]
        raise SemanticError(f"{first.code}: {first.message}", first.entity)
    return net


def save_network(net: RoadNetwork) -> bytes:
    from tscbench.model import validate_network

    if not net.intersections:
        raise SemanticError("no intersections", "<network>")
    rep = validate_network(net)
    if not rep.ok:
        first = rep.errors[0]
        raise SemanticError(f"cannot save invalid network ({first.code})", first.entity)

    inter_pos = {i.id: i.position for i in net.intersections}
    roads_out = []
    for road in sorted(net.roads, key=lambda r: r.id):
        p0, p1 = inter_pos[road.from_intersection], inter_pos[road.to_intersection]
        straight = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
        if not math.isclose(straight, road.length, rel_tol=1e-9, abs_tol=1e-6):
            raise UnrepresentableError(
                f"road {road.id}: length {road.length} differs from endpoint distance "
                f"{straight}; cityflow-style geometry derives length from points")
        roads_out.append({
            "id": road.id,
            "points": [{"x": p0[0], "y": p0[1]}, {"x": p1[0], "y": p1[1]}],
            "lanes": [{"width": LANE_WIDTH, "maxSpeed": net.lanes_by_id[lid].max_speed}
                      for lid in road.lanes],
            "startIntersection": road.from_intersection,
            "endIntersection": road.to_intersection,
        })

    inters_out = []
    for inter in sorted(net.intersections, key=lambda i: i.id):
        adjacent = sorted(r.id for r in net.roads
                          if inter.id in (r.from_intersection, r.to_intersection))
        entry = {
            "id": inter.id,
            "point": {"x": inter.position[0], "y": inter.position[1]},
            "virtual": inter.virtual,
            "roads": adjacent,
        }
        if inter.virtual:
            inters_out.append(entry)
            continue

        # group lane-level movements into road-to-road links
        groups: dict[tuple[str, str, str], list[Movement]] = {}
        for m in net.movements_at(inter.id):
            in_road = net.lanes_by_id[m.in_lane].road
            out_road = net.lanes_by_id[m.out_lane].road
            groups.setdefault((in_road, out_road, m.turn_kind), []).append(m)
        keys = sorted(groups)
        road_links = []
        movement_to_link = {}
        for k, key in enumerate(keys):
            in_road, out_road, turn = key
            lane_links = sorted(
                (net.lanes_by_id[m.in_lane].index, net.lanes_by_id[m.out_lane].index, m.id)
                for m in groups[key])
            for _, _, mid in lane_links:
                movement_to_link[mid] = k
            road_links.append({
                "type": _TURN_OUT[turn],
                "startRoad": in_road,
                "endRoad": out_road,
                "laneLinks": [{"startLaneIndex": si, "endLaneIndex": ei}
                              for si, ei, _ in lane_links],
            })
        link_members = [frozenset(m.id for m in groups[key]) for key in keys]

        lightphases = [{"time": inter.yellow_time, "availableRoadLinks": []}]
        for phase in sorted(inter.phases, key=lambda p: p.index):
            chosen = []
            covered: set[str] = set()
            for k, members in enumerate(link_members):
                if members <= phase.allowed_movements:
                    chosen.append(k)
                    covered |= members
            if covered != set(phase.allowed_movements):
                missing = sorted(set(phase.allowed_movements) - covered)
                raise UnrepresentableError(
                    f"{inter.id} phase {phase.index}: movements {missing} cover only part "
                    f"of a road link; cityflow-style phases are road-link granular")
            lightphases.append({"time": GREEN_PHASE_TIME, "availableRoadLinks": chosen})

        entry["roadLinks"] = road_links
        entry["trafficLight"] = {"roadLinkIndices": list(range(len(road_links))),
                                 "lightphases": lightphases}
        inters_out.append(entry)

    doc = {"intersections": inters_out, "roads": roads_out}
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _vehicle_from(obj, entity) -> VehicleParams:
    if obj is None:
        return DEFAULT_VEHICLE
    if not isinstance(obj, dict):
        raise SemanticError("'vehicle' must be an object", entity)
    d = DEFAULT_VEHICLE
    return VehicleParams(
        max_speed=_num(obj, "maxSpeed", entity, d.max_speed),
        accel=_num(obj, "maxPosAcc", entity, d.accel),
        decel=_num(obj, "maxNegAcc", entity, d.decel),
        length=_num(obj, "length", entity, d.length),
        min_gap=_num(obj, "minGap", entity, d.min_gap),
    )


def load_flows(data) -> FlowSet:
    doc = _decode(data)
    if not isinstance(doc, list):
        raise SemanticError("flow document must be a JSON array", "<root>")
    flows = []
    for i, rf in enumerate(doc):
        ent = f"flow{i}"
        if not isinstance(rf, dict):
            raise SemanticError("flow entries must be objects", ent)
        route = rf.get("route")
        if not isinstance(route, list) or not route or \
                not all(isinstance(r, str) for r in route):
            raise SemanticError("flow needs a non-empty 'route' of road ids", ent)
        interval = _num(rf, "interval", ent)
        if interval <= 0:
            raise SemanticError(f"interval must be positive, got {interval}", ent)
        start = _num(rf, "startTime", ent)
        end = _num(rf, "endTime", ent)
        if start > end:
            raise SemanticError(f"startTime {start} > endTime {end}", ent)
        flows.append(FlowSpec(tuple(route), start, end, interval,
                              _vehicle_from(rf.get("vehicle"), ent)))
    return FlowSet(tuple(flows))


def save_flows(flows: FlowSet) -> bytes:
    out = []
    for i, flow in enumerate(flows.flows):
        if flow.od_only:
            raise UnrepresentableError(
                f"flow {i} carries an origin/destination-only route; cityflow-style "
                f"files need full routes - run complete_routes first")
        v = flow.vehicle
        out.append({
            "vehicle": {
                "length": v.length,
                "minGap": v.min_gap,
                "maxPosAcc": v.accel,
                "maxNegAcc": v.decel,
                "maxSpeed": v.max_speed,
            },
            "route": list(flow.route),
            "interval": flow.interval,
            "startTime": flow.start_time,
            "endTime": flow.end_time,
        })
    return (json.dumps(out, indent=2) + "\n").encode("utf-8")
