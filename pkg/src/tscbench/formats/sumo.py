"""SUMO-style XML codec.

Structural subset: `<net>` with `<edge><lane/></edge>`, `<junction>`,
`<connection>`, and `<tlLogic><phase duration state/></tlLogic>`; route files
with `<vType>` and `<flow begin end period>` carrying either a
`<route edges=.../>` child or `from`/`to` attributes.

Phase state strings assign one letter per connection linkIndex: G/g green,
y yellow, r red. Green phases become the phase table; an all-yellow phase
supplies yellow_time and is dropped (the engine inserts yellows itself).
A junction with no signal program loads as virtual.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from tscbench.formats.errors import FormatSyntaxError, SemanticError
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
    validate_network,
)

_DIR_IN = {"l": "left", "s": "straight", "r": "right"}
_DIR_OUT = {"left": "l", "straight": "s", "right": "r"}
GREEN_PHASE_DURATION = 30.0


def _parse(data) -> ET.Element:
    text = data.decode("utf-8", errors="replace") if isinstance(data, (bytes, bytearray)) else data
    try:
        return ET.fromstring(text)
    except ET.ParseError as e:
        line, col = e.position
        lines = text.split("\n")
        offset = sum(len(l) + 1 for l in lines[:line - 1]) + col
        raise FormatSyntaxError(f"invalid XML: {e.msg}", offset=offset) from e
    except Exception as e:  # the stdlib parser can raise ValueError on odd bytes
        raise FormatSyntaxError(f"invalid XML: {e}") from e


def _attr(elem: ET.Element, name: str, entity: str) -> str:
    val = elem.get(name)
    if val is None:
        raise SemanticError(f"missing attribute {name!r} on <{elem.tag}>", entity)
    return val


def _fattr(elem: ET.Element, name: str, entity: str, default: float | None = None) -> float:
    val = elem.get(name)
    if val is None:
        if default is None:
            raise SemanticError(f"missing attribute {name!r} on <{elem.tag}>", entity)
        return default
    try:
        return float(val)
    except ValueError:
        raise SemanticError(f"attribute {name!r} is not a number: {val!r}", entity) from None


def _iattr(elem: ET.Element, name: str, entity: str) -> int:
    try:
        return int(_attr(elem, name, entity))
    except ValueError:
        raise SemanticError(f"attribute {name!r} is not an integer", entity) from None


def load_network(data, report: ValidationReport | None = None) -> RoadNetwork:
    rep = report if report is not None else ValidationReport()
    root = _parse(data)
    if root.tag != "net":
        raise SemanticError(f"expected <net> root, got <{root.tag}>", "<root>")

    roads, lanes = [], []
    for edge in root.iter("edge"):
        rid = _attr(edge, "id", "<edge>")
        frm, to = _attr(edge, "from", rid), _attr(edge, "to", rid)
        lane_elems = list(edge.iter("lane"))
        if not lane_elems:
            raise SemanticError("edge has no lanes", rid)
        length = _fattr(lane_elems[0], "length", f"{rid}_0")
        lane_ids = []
        for i, le in enumerate(lane_elems):
            lid = f"{rid}_{i}"
            l_len = _fattr(le, "length", lid, default=length)
            if l_len != length:
                rep.warn("lane length mismatch", lid,
                         f"lane length {l_len} coerced to road length {length}")
            lanes.append(Lane(lid, rid, i, length, _fattr(le, "speed", lid, default=16.67)))
            lane_ids.append(lid)
        speed_limit = max(l.max_speed for l in lanes[-len(lane_ids):])
        roads.append(Road(rid, frm, to, length, tuple(lane_ids), speed_limit))
    roads_by_id = {r.id: r for r in roads}

    junctions = {}
    for j in root.iter("junction"):
        jid = _attr(j, "id", "<junction>")
        junctions[jid] = (j.get("type", "priority"),
                          (_fattr(j, "x", jid, 0.0), _fattr(j, "y", jid, 0.0)))

    movements: list[Movement] = []
    seen: dict[str, Movement] = {}
    tl_links: dict[str, dict[int, list[str]]] = {}  # tl id -> linkIndex -> movement ids
    auto_index: dict[str, int] = {}
    for c in root.iter("connection"):
        ent = f"connection {c.get('from')}->{c.get('to')}"
        frm = roads_by_id.get(_attr(c, "from", ent))
        to = roads_by_id.get(_attr(c, "to", ent))
        if frm is None or to is None:
            raise SemanticError("connection references an unknown edge", ent)
        fi, ti = _iattr(c, "fromLane", ent), _iattr(c, "toLane", ent)
        if not (0 <= fi < len(frm.lanes) and 0 <= ti < len(to.lanes)):
            raise SemanticError(f"connection lane indices ({fi},{ti}) out of range", ent)
        d = c.get("dir", "s")
        turn = _DIR_IN.get(d)
        if turn is None:
            rep.warn("unknown dir", ent, f"dir={d!r} treated as straight")
            turn = "straight"
        in_lane, out_lane = frm.lanes[fi], to.lanes[ti]
        mid = movement_id_for(in_lane, out_lane)
        prior = seen.get(mid)
        if prior is None:
            m = Movement(mid, in_lane, out_lane, turn)
            seen[mid] = m
            movements.append(m)
        elif prior.turn_kind != turn:
            raise SemanticError("movement declared twice with conflicting dir", ent)
        tl = c.get("tl")
        if tl is not None:
            idx = c.get("linkIndex")
            if idx is None:
                idx = auto_index.get(tl, 0)
                rep.warn("missing linkIndex", ent, f"assigned document-order index {idx}")
            idx = int(idx)
            auto_index[tl] = idx + 1
            tl_links.setdefault(tl, {}).setdefault(idx, []).append(mid)

    programs: dict[str, list[tuple[float, str]]] = {}
    for tl in root.iter("tlLogic"):
        tid = _attr(tl, "id", "<tlLogic>")
        programs[tid] = [(_fattr(p, "duration", tid, GREEN_PHASE_DURATION),
                          _attr(p, "state", tid)) for p in tl.iter("phase")]

    intersections = []
    for jid, (jtype, pos) in sorted(junctions.items()):
        program = programs.get(jid)
        if program is None:
            if jtype == "traffic_light":
                rep.warn("type mismatch", jid,
                         "junction declared traffic_light but has no tlLogic; loaded virtual")
            intersections.append(Intersection(jid, pos, True, (), 0.0))
            continue
        links = tl_links.get(jid, {})
        n_links = max(links, default=-1) + 1
        phases: list[Phase] = []
        yellow = None
        for duration, state in program:
            if len(state) != n_links:
                rep.warn("state length mismatch", jid,
                         f"state {state!r} covers {len(state)} links, junction has {n_links}")
            greens = {i for i, ch in enumerate(state) if ch in "Gg"}
            if greens:
                allowed: set[str] = set()
                for i in greens:
                    allowed.update(links.get(i, ()))
                if not allowed:
                    rep.warn("empty phase", jid, f"state {state!r} greens no movement; dropped")
                    continue
                phases.append(Phase(len(phases), frozenset(allowed)))
            elif any(ch in "yY" for ch in state):
                if yellow is None:
                    yellow = duration
            # all-red phases are neither green nor clearance; dropped
        intersections.append(Intersection(
            jid, pos, False, tuple(phases),
            DEFAULT_YELLOW_TIME if yellow is None else yellow))

    net = RoadNetwork(tuple(intersections), tuple(roads), tuple(lanes), tuple(movements))
    vrep = validate_network(net)
    rep.errors.extend(vrep.errors)
    rep.warnings.extend(vrep.warnings)
    if vrep.errors:
        first = vrep.errors[0]
        raise SemanticError(f"{first.code}: {first.message}", first.entity)
    return net


def _fmt(x: float) -> str:
    return str(x)


def save_network(net: RoadNetwork) -> bytes:
    if not net.intersections:
        raise SemanticError("no intersections", "<network>")
    rep = validate_network(net)
    if not rep.ok:
        first = rep.errors[0]
        raise SemanticError(f"cannot save invalid network ({first.code})", first.entity)

    root = ET.Element("net")
    for road in sorted(net.roads, key=lambda r: r.id):
        e = ET.SubElement(root, "edge", id=road.id)
        e.set("from", road.from_intersection)
        e.set("to", road.to_intersection)
        for i, lid in enumerate(road.lanes):
            lane = net.lanes_by_id[lid]
            ET.SubElement(e, "lane", id=f"{road.id}_{i}", index=str(i),
                          speed=_fmt(lane.max_speed), length=_fmt(road.length))

    for inter in sorted(net.intersections, key=lambda i: i.id):
        ET.SubElement(root, "junction", id=inter.id,
                      type="priority" if inter.virtual else "traffic_light",
                      x=_fmt(inter.position[0]), y=_fmt(inter.position[1]))

    # connections in a deterministic order; linkIndex counts per junction
    signal_ids = {i.id for i in net.intersections if not i.virtual}
    link_order: dict[str, list[str]] = {iid: [] for iid in signal_ids}

    def conn_key(m: Movement):
        in_lane, out_lane = net.lanes_by_id[m.in_lane], net.lanes_by_id[m.out_lane]
        return (in_lane.road, in_lane.index, out_lane.road, out_lane.index)

    for m in sorted(net.movements, key=conn_key):
        in_lane, out_lane = net.lanes_by_id[m.in_lane], net.lanes_by_id[m.out_lane]
        junction = net.roads_by_id[in_lane.road].to_intersection
        c = ET.SubElement(root, "connection", to=out_lane.road,
                          fromLane=str(in_lane.index), toLane=str(out_lane.index),
                          dir=_DIR_OUT[m.turn_kind])
        c.set("from", in_lane.road)
        if junction in signal_ids:
            c.set("tl", junction)
            c.set("linkIndex", str(len(link_order[junction])))
            link_order[junction].append(m.id)

    for inter in sorted(net.intersections, key=lambda i: i.id):
        if inter.virtual:
            continue
        order = link_order[inter.id]
        tl = ET.SubElement(root, "tlLogic", id=inter.id, type="static",
                           programID="0", offset="0")
        for phase in sorted(inter.phases, key=lambda p: p.index):
            green = "".join("G" if mid in phase.allowed_movements else "r" for mid in order)
            ET.SubElement(tl, "phase", duration=_fmt(GREEN_PHASE_DURATION), state=green)
            clear = "".join("y" if mid in phase.allowed_movements else "r" for mid in order)
            ET.SubElement(tl, "phase", duration=_fmt(inter.yellow_time), state=clear)

    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _vtype_params(elem: ET.Element, entity: str) -> VehicleParams:
    d = DEFAULT_VEHICLE
    return VehicleParams(
        max_speed=_fattr(elem, "maxSpeed", entity, d.max_speed),
        accel=_fattr(elem, "accel", entity, d.accel),
        decel=_fattr(elem, "decel", entity, d.decel),
        length=_fattr(elem, "length", entity, d.length),
        min_gap=_fattr(elem, "minGap", entity, d.min_gap),
    )


def load_flows(data) -> FlowSet:
    root = _parse(data)
    if root.tag != "routes":
        raise SemanticError(f"expected <routes> root, got <{root.tag}>", "<root>")
    vtypes = {_attr(vt, "id", "<vType>"): _vtype_params(vt, vt.get("id", "<vType>"))
              for vt in root.iter("vType")}
    flows = []
    for i, f in enumerate(root.iter("flow")):
        ent = f.get("id", f"flow{i}")
        begin = _fattr(f, "begin", ent)
        end = _fattr(f, "end", ent)
        period = _fattr(f, "period", ent)
        if period <= 0:
            raise SemanticError(f"period must be positive, got {period}", ent)
        if begin > end:
            raise SemanticError(f"begin {begin} > end {end}", ent)
        tname = f.get("type")
        if tname is not None and tname not in vtypes:
            raise SemanticError(f"unknown vType {tname!r}", ent)
        vehicle = vtypes.get(tname, DEFAULT_VEHICLE)
        route_elem = f.find("route")
        if route_elem is not None:
            edges = tuple(_attr(route_elem, "edges", ent).split())
            if not edges:
                raise SemanticError("empty route edges", ent)
            flows.append(FlowSpec(edges, begin, end, period, vehicle))
        else:
            frm, to = f.get("from"), f.get("to")
            if frm is None or to is None:
                raise SemanticError("flow needs a <route> child or from/to attributes", ent)
            route = (frm,) if frm == to else (frm, to)
            flows.append(FlowSpec(route, begin, end, period, vehicle, od_only=True))
    return FlowSet(tuple(flows))


def save_flows(flows: FlowSet) -> bytes:
    ordered = sorted(flows.flows, key=lambda f: f.start_time)  # stable
    root = ET.Element("routes")
    vtype_ids: dict[VehicleParams, str] = {}
    for flow in ordered:
        if flow.vehicle not in vtype_ids:
            vid = f"vt{len(vtype_ids)}"
            vtype_ids[flow.vehicle] = vid
            v = flow.vehicle
            ET.SubElement(root, "vType", id=vid, accel=_fmt(v.accel), decel=_fmt(v.decel),
                          length=_fmt(v.length), minGap=_fmt(v.min_gap),
                          maxSpeed=_fmt(v.max_speed))
    for i, flow in enumerate(ordered):
        f = ET.SubElement(root, "flow", id=f"f{i}", type=vtype_ids[flow.vehicle],
                          begin=_fmt(flow.start_time), end=_fmt(flow.end_time),
                          period=_fmt(flow.interval))
        if flow.od_only:
            f.set("from", flow.route[0])
            f.set("to", flow.route[-1])
        else:
            ET.SubElement(f, "route", edges=" ".join(flow.route))
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"
