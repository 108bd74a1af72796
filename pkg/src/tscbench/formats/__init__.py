"""Load, save, and convert scenario files between the two simulator formats.

Conversion composes load -> route completion -> yellow normalization -> save
and never introduces dynamic-routing semantics: completed routes are written
out in full.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from tscbench.formats import cityflow, sumo
from tscbench.formats.errors import (
    FormatError,
    FormatSyntaxError,
    SemanticError,
    UnrepresentableError,
)
from tscbench.formats.routing import (
    UnreachableRouteError,
    complete_routes,
    road_adjacency,
    route_is_connected,
    shortest_route,
)
from tscbench.model import FlowSet, RoadNetwork, ValidationReport

SUMO_STYLE = "sumo_style_xml"
CITYFLOW_STYLE = "cityflow_style_json"
FORMAT_KINDS = (SUMO_STYLE, CITYFLOW_STYLE)

_CODECS = {SUMO_STYLE: sumo, CITYFLOW_STYLE: cityflow}


@dataclass(frozen=True)
class ConversionOptions:
    yellow_time_override: float | None = None
    complete_routes: bool = True
    drop_unsignalized_as_virtual: bool = True
    sort_departures: bool = True

    def __post_init__(self):
        if self.yellow_time_override is not None and self.yellow_time_override < 0:
            raise ValueError("yellow_time_override must be >= 0")


def _codec(kind: str):
    codec = _CODECS.get(kind)
    if codec is None:
        raise FormatError(f"unknown format kind {kind!r}; expected one of {FORMAT_KINDS}")
    return codec


def load_network(kind: str, data, report: ValidationReport | None = None) -> RoadNetwork:
    return _codec(kind).load_network(data, report)


def load_flows(kind: str, data) -> FlowSet:
    return _codec(kind).load_flows(data)


def save_network(kind: str, net: RoadNetwork) -> bytes:
    return _codec(kind).save_network(net)


def save_flows(kind: str, flows: FlowSet) -> bytes:
    return _codec(kind).save_flows(flows)


def normalize_yellow(net: RoadNetwork, yellow_time: float) -> RoadNetwork:
    """Set every signalized intersection's yellow_time; virtual ones stay 0."""
    inters = tuple(i if i.virtual else replace(i, yellow_time=yellow_time)
                   for i in net.intersections)
    return RoadNetwork(inters, net.roads, net.lanes, net.movements)


def sort_departures(flows: FlowSet) -> FlowSet:
    return FlowSet(tuple(sorted(flows.flows, key=lambda f: f.start_time)))  # stable


def convert(net_data, flow_data, src: str, dst: str,
            opts: ConversionOptions = ConversionOptions(),
            report: ValidationReport | None = None) -> tuple[bytes, bytes]:
    """Full conversion pipeline over serialized inputs."""
    net = load_network(src, net_data, report)
    flows = load_flows(src, flow_data)

    if not opts.drop_unsignalized_as_virtual:
        crossed = {net.lanes_by_id[m.in_lane].road for m in net.movements}
        for inter in net.intersections:
            if inter.virtual and any(r.id in crossed and r.to_intersection == inter.id
                                     for r in net.roads):
                raise SemanticError(
                    "unsignalized junction carries traffic movements and "
                    "drop_unsignalized_as_virtual is disabled", inter.id)

    if opts.complete_routes:
        flows = complete_routes(net, flows)
    if opts.yellow_time_override is not None:
        net = normalize_yellow(net, opts.yellow_time_override)
    if opts.sort_departures:
        flows = sort_departures(flows)
    return save_network(dst, net), save_flows(dst, flows)


__all__ = [
    "FORMAT_KINDS", "SUMO_STYLE", "CITYFLOW_STYLE",
    "ConversionOptions", "convert",
    "load_network", "load_flows", "save_network", "save_flows",
    "complete_routes", "shortest_route", "route_is_connected", "road_adjacency",
    "normalize_yellow", "sort_departures",
    "FormatError", "FormatSyntaxError", "SemanticError", "UnrepresentableError",
    "UnreachableRouteError",
]
