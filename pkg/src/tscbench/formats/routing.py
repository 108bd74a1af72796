"""Shortest-path route completion over the road graph.

Adjacency is movement-level: road u feeds road v iff some movement joins a
lane of u to a lane of v. That implies the share-an-intersection rule and
guarantees completed routes are drivable by the engine (no hop through a
junction that lacks the corresponding movement).
"""

from __future__ import annotations

import heapq

from tscbench.model import FlowSet, RoadNetwork


class UnreachableRouteError(Exception):
    """Raised when a route's destination cannot be reached from its origin."""


def road_adjacency(net: RoadNetwork) -> dict[str, list[str]]:
    """road id -> sorted successor road ids reachable through one movement."""
    nxt: dict[str, set[str]] = {r.id: set() for r in net.roads}
    for m in net.movements:
        in_lane = net.lanes_by_id[m.in_lane]
        out_lane = net.lanes_by_id[m.out_lane]
        nxt[in_lane.road].add(out_lane.road)
    return {rid: sorted(s) for rid, s in nxt.items()}


def route_is_connected(net: RoadNetwork, route: tuple[str, ...],
                       adjacency: dict[str, list[str]] | None = None) -> bool:
    adj = adjacency if adjacency is not None else road_adjacency(net)
    return all(b in adj.get(a, ()) for a, b in zip(route, route[1:]))


def travel_time(net: RoadNetwork, road_id: str) -> float:
    road = net.roads_by_id[road_id]
    return road.length / road.speed_limit


def shortest_route(net: RoadNetwork, origin: str, destination: str,
                   adjacency: dict[str, list[str]] | None = None) -> tuple[str, ...] | None:
    """Minimum-travel-time road sequence origin..destination, or None.

    Cost of a path is the summed length/speed_limit over every road on it.
    Equal-cost ties resolve to the lexicographically smallest road-id
    sequence: the heap is keyed by (cost, path), so the winning path is
    deterministic.
    """
    adj = adjacency if adjacency is not None else road_adjacency(net)
    if origin not in net.roads_by_id or destination not in net.roads_by_id:
        return None
    start = (travel_time(net, origin), (origin,))
    heap = [start]
    settled: set[str] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        head = path[-1]
        if head == destination:
            return path
        if head in settled:
            continue
        settled.add(head)
        for nxt in adj.get(head, ()):
            if nxt not in settled:
                heapq.heappush(heap, (cost + travel_time(net, nxt), path + (nxt,)))
    return None


def complete_routes(net: RoadNetwork, flows: FlowSet) -> FlowSet:
    """Fill every gap in every route with the shortest connecting sequence.

    Already-connected hops pass through unchanged. Output flows are always
    marked complete (od_only cleared).
    """
    from dataclasses import replace

    adj = road_adjacency(net)
    out = []
    for i, flow in enumerate(flows.flows):
        for rid in flow.route:
            if rid not in net.roads_by_id:
                raise UnreachableRouteError(f"flow {i}: unknown road {rid!r}")
        route = [flow.route[0]]
        for a, b in zip(flow.route, flow.route[1:]):
            if b in adj.get(a, ()):
                route.append(b)
                continue
            path = shortest_route(net, a, b, adj)
            if path is None:
                raise UnreachableRouteError(f"flow {i}: no route from {a!r} to {b!r}")
            route.extend(path[1:])
        out.append(replace(flow, route=tuple(route), od_only=False))
    return FlowSet(tuple(out))
