"""Deterministic microscopic traffic simulator.

The update law is a conservative stopped-leader rule: each tick a vehicle may
reach at most v' = min(v + accel*dt, v_max, v_safe) with
v_safe = max(0, (gap_to_obstacle - min_gap)/dt). Instant deceleration is
permitted, which makes the dynamics collision-free by construction. The
obstacle is the leader's rear bumper, the stop line when the signal ahead
withholds green (or is mid-yellow), or the lane end when the next lane has no
room to enter.

Sub-step order within one tick is fixed for determinism:
signal timers -> speeds (all lanes) -> moves/transfers -> spawning -> waiting.
Lanes are visited in lexicographic id order, vehicles front to back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tscbench.formats.routing import road_adjacency, route_is_connected
from tscbench.model import (
    FlowSet,
    RoadNetwork,
    VehicleParams,
    validate_demand,
    validate_network,
)


class EngineError(Exception):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1.0
    horizon: float = 3600.0
    waiting_speed_threshold: float = 0.1  # m/s; below this a vehicle "waits"
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        ticks = self.horizon / self.dt
        if self.horizon <= 0 or abs(ticks - round(ticks)) > 1e-9:
            raise ValueError("horizon must be a positive multiple of dt")


@dataclass(frozen=True)
class StepOutcome:
    spawned: int
    finished: int
    blocked_spawns: int


class VehicleState:
    __slots__ = ("id", "route", "route_pos", "lane", "position", "speed",
                 "next_speed", "params", "enter_time", "cumulative_waiting")

    def __init__(self, vid: str, route: tuple[str, ...], lane: str,
                 params: VehicleParams, enter_time: float):
        self.id = vid
        self.route = route
        self.route_pos = 0
        self.lane = lane
        self.position = 0.0
        self.speed = 0.0
        self.next_speed = 0.0
        self.params = params
        self.enter_time = enter_time
        self.cumulative_waiting = 0.0


class SignalState:
    __slots__ = ("current_phase", "phase_elapsed", "yellow_remaining", "pending_phase")

    def __init__(self):
        self.current_phase = 0
        self.phase_elapsed = 0.0
        self.yellow_remaining = 0.0
        self.pending_phase: int | None = None


class _FlowRuntime:
    __slots__ = ("spec", "spawn_lanes", "emitted", "pending")

    def __init__(self, spec, spawn_lanes):
        self.spec = spec
        self.spawn_lanes = spawn_lanes  # feasible first-road lane ids
        self.emitted = 0   # departures scheduled so far
        self.pending = 0   # departures waiting for headroom


class _NetIndex:
    """Static per-network lookup tables shared by every episode."""

    def __init__(self, net: RoadNetwork):
        self.net = net
        self.lane_ids = tuple(sorted(l.id for l in net.lanes))
        self.lane_length = {l.id: l.length for l in net.lanes}
        self.lane_max_speed = {l.id: l.max_speed for l in net.lanes}
        self.lane_road = {l.id: l.road for l in net.lanes}
        self.lane_index = {l.id: l.index for l in net.lanes}
        self.lane_end = {l.id: net.roads_by_id[l.road].to_intersection for l in net.lanes}
        self.end_ids = tuple(sorted(set(self.lane_end.values())))
        self.virtual = {i.id: i.virtual for i in net.intersections}
        self.yellow_time = {i.id: i.yellow_time for i in net.intersections}
        self.phases = {i.id: tuple(p.allowed_movements for p in
                                   sorted(i.phases, key=lambda p: p.index))
                       for i in net.intersections if not i.virtual}

        # roads reachable onward from each lane through one movement
        reachable: dict[str, set[str]] = {l.id: set() for l in net.lanes}
        for m in net.movements:
            reachable[m.in_lane].add(self.lane_road[m.out_lane])
        self.lane_reachable = {k: frozenset(v) for k, v in reachable.items()}

        # (in lane, next road) -> candidate (movement, out lane, out index) rows
        cand: dict[tuple[str, str], list[tuple[str, str, int]]] = {}
        for m in net.movements:
            out_road = self.lane_road[m.out_lane]
            out_idx = net.lanes_by_id[m.out_lane].index
            cand.setdefault((m.in_lane, out_road), []).append((m.id, m.out_lane, out_idx))
        self.transfer = {k: tuple(sorted(v, key=lambda row: row[2]))
                         for k, v in cand.items()}
        self.adjacency = road_adjacency(net)


class SimState:
    """One simulation run. Exclusively owned; all mutation happens in step()."""

    def __init__(self, index: _NetIndex, flows: FlowSet, cfg: SimConfig):
        self.index = index
        self.cfg = cfg
        self.clock = 0.0
        self.vehicles: dict[str, VehicleState] = {}
        self.lane_vehicles: dict[str, list[VehicleState]] = {lid: [] for lid in index.lane_ids}
        self.signals: dict[str, SignalState] = {iid: SignalState() for iid in index.phases}
        self.rng = np.random.default_rng(cfg.seed)  # carried for extensions; dynamics
        # are fully deterministic and never draw from it
        self.flows: list[_FlowRuntime] = []
        for spec in flows.flows:
            first = index.net.roads_by_id[spec.route[0]]
            if len(spec.route) > 1:
                lanes = [lid for lid in first.lanes
                         if spec.route[1] in index.lane_reachable[lid]]
            else:
                lanes = list(first.lanes)
            if not lanes:
                raise EngineError(f"flow on {spec.route[0]} has no lane reaching "
                                  f"{spec.route[1]}")
            self.flows.append(_FlowRuntime(spec, tuple(lanes)))
        self.finished_log: list[tuple[str, float, float]] = []
        self.total_spawned = 0
        self.total_blocked = 0

    # -- signal helpers -------------------------------------------------

    def green_movements(self, intersection_id: str) -> frozenset | None:
        """Movements allowed to cross now; None means uncontrolled (virtual)."""
        sig = self.signals.get(intersection_id)
        if sig is None:
            return None
        if sig.yellow_remaining > 0:
            return frozenset()
        return self.index.phases[intersection_id][sig.current_phase]


def init(net: RoadNetwork, flows: FlowSet, cfg: SimConfig,
         index: _NetIndex | None = None) -> SimState:
    """Fresh state: clock 0, no vehicles, all signals at phase 0.

    Pass a prebuilt index to skip re-validating the network between episodes.
    """
    if index is None:
        index = build_index(net)
    drep = validate_demand(net, flows)
    if not drep.ok:
        raise EngineError(f"invalid demand: {drep.lines()[0]}")
    for i, spec in enumerate(flows.flows):
        if not route_is_connected(net, spec.route, index.adjacency):
            raise EngineError(f"flow {i} route is not movement-connected; "
                              f"complete routes before simulating")
    return SimState(index, flows, cfg)


def build_index(net: RoadNetwork) -> _NetIndex:
    """Precompute the static tables once when running many episodes."""
    rep = validate_network(net)
    if not rep.ok:
        raise EngineError(f"invalid network: {rep.lines()[0]}")
    return _NetIndex(net)


def set_phase(state: SimState, intersection_id: str, phase_index: int) -> None:
    sig = state.signals.get(intersection_id)
    if sig is None:
        raise EngineError(f"no signal at {intersection_id!r} (unknown or virtual)")
    phases = state.index.phases[intersection_id]
    if not 0 <= phase_index < len(phases):
        raise EngineError(f"phase {phase_index} out of range at {intersection_id!r}")
    if phase_index == sig.current_phase:
        return  # idempotent; elapsed keeps counting
    if sig.yellow_remaining > 0:
        sig.pending_phase = phase_index  # replace target, timer untouched
        return
    yellow = state.index.yellow_time[intersection_id]
    if yellow > 0:
        sig.yellow_remaining = yellow
        sig.pending_phase = phase_index
    else:
        sig.current_phase = phase_index
        sig.phase_elapsed = 0.0


def _select_target(state: SimState, veh: VehicleState, green: frozenset | None):
    """Designated entry lane on the next route road, or None when no movement
    may cross now. Fewest vehicles wins, ties by lowest lane index; candidates
    able to continue toward the road after next are preferred."""
    idx = state.index
    next_road = veh.route[veh.route_pos + 1]
    rows = idx.transfer.get((veh.lane, next_road), ())
    after = veh.route[veh.route_pos + 2] if veh.route_pos + 2 < len(veh.route) else None

    best = None
    best_key = None
    fallback = None
    fallback_key = None
    for mv, out_lane, out_idx in rows:
        if green is not None and mv not in green:
            continue
        key = (len(state.lane_vehicles[out_lane]), out_idx)
        if fallback_key is None or key < fallback_key:
            fallback, fallback_key = out_lane, key
        if after is not None and after not in idx.lane_reachable[out_lane]:
            continue
        if best_key is None or key < best_key:
            best, best_key = out_lane, key
    return best if best is not None else fallback


def step(state: SimState) -> StepOutcome:
    cfg = state.cfg
    idx = state.index
    dt = cfg.dt
    if state.clock >= cfg.horizon - 1e-9:
        raise EngineError("stepping past horizon")
    clock_new = state.clock + dt

    # (1) signal timers
    for iid, sig in state.signals.items():
        sig.phase_elapsed += dt
        if sig.yellow_remaining > 0:
            sig.yellow_remaining -= dt
            if sig.yellow_remaining <= 1e-9:
                sig.yellow_remaining = 0.0
                sig.current_phase = sig.pending_phase
                sig.pending_phase = None
                sig.phase_elapsed = 0.0

    # (2) speeds, all lanes before anything moves
    greens = {iid: state.green_movements(iid) for iid in idx.end_ids}
    for lid in idx.lane_ids:
        row = state.lane_vehicles[lid]
        if not row:
            continue
        lane_len = idx.lane_length[lid]
        lane_speed = idx.lane_max_speed[lid]
        leader = None
        for veh in row:
            p = veh.params
            v_max = lane_speed if lane_speed < p.max_speed else p.max_speed
            v_new = veh.speed + p.accel * dt
            if v_new > v_max:
                v_new = v_max
            if leader is not None:
                gap = leader.position - leader.params.length - veh.position
                v_safe = (gap - p.min_gap) / dt
                if v_safe < 0.0:
                    v_safe = 0.0
                if v_new > v_safe:
                    v_new = v_safe
            elif veh.route_pos + 1 < len(veh.route):
                target = _select_target(state, veh, greens[idx.lane_end[lid]])
                stop = target is None
                if not stop:
                    trow = state.lane_vehicles[target]
                    if trow:
                        last = trow[-1]
                        if last.position - last.params.length < p.min_gap:
                            stop = True  # next lane's entry is blocked
                if stop:
                    gap = lane_len - veh.position
                    v_safe = (gap - p.min_gap) / dt
                    if v_safe < 0.0:
                        v_safe = 0.0
                    if v_new > v_safe:
                        v_new = v_safe
            # else: final road, free exit at the lane end
            veh.next_speed = v_new
            leader = veh

    # (3) positions advance; transfers and exits. Snapshots are taken up front
    # so a vehicle entering a lexicographically later lane moves once per tick.
    finished = 0
    snapshots = [(lid, list(state.lane_vehicles[lid]))
                 for lid in idx.lane_ids if state.lane_vehicles[lid]]
    for lid, snap in snapshots:
        row = state.lane_vehicles[lid]
        lane_len = idx.lane_length[lid]
        for veh in snap:
            v_new = veh.next_speed
            p_new = veh.position + v_new * dt
            veh.speed = v_new
            if p_new <= lane_len:
                veh.position = p_new
                continue
            if veh.route_pos + 1 >= len(veh.route):
                row.remove(veh)
                del state.vehicles[veh.id]
                state.finished_log.append((veh.id, veh.enter_time, clock_new))
                finished += 1
                continue
            target = _select_target(state, veh, greens[idx.lane_end[lid]])
            entered = False
            if target is not None:
                q = p_new - lane_len
                trow = state.lane_vehicles[target]
                limit = idx.lane_length[target]
                if trow:
                    last = trow[-1]
                    rear = last.position - last.params.length - veh.params.min_gap
                    if rear < limit:
                        limit = rear
                if limit >= 0.0:
                    row.remove(veh)
                    veh.lane = target
                    veh.route_pos += 1
                    veh.position = q if q < limit else limit
                    trow.append(veh)
                    entered = True
            if not entered:
                veh.position = lane_len  # wait at the stop line; retry next tick

    # (4) spawning
    spawned = 0
    blocked = 0
    for fi, fr in enumerate(state.flows):
        spec = fr.spec
        while True:
            due = spec.start_time + fr.emitted * spec.interval
            if due > clock_new + 1e-9 or due > spec.end_time + 1e-9:
                break
            fr.emitted += 1
            fr.pending += 1
        while fr.pending > 0:
            best = None
            best_key = None
            for lid in fr.spawn_lanes:
                key = (len(state.lane_vehicles[lid]), idx.lane_index[lid])
                if best_key is None or key < best_key:
                    best, best_key = lid, key
            lrow = state.lane_vehicles[best]
            if lrow:
                last = lrow[-1]
                headroom = last.position - last.params.length
            else:
                headroom = idx.lane_length[best]
            if headroom < spec.vehicle.length + spec.vehicle.min_gap:
                break
            vid = f"f{fi}.{state.total_spawned}"
            veh = VehicleState(vid, spec.route, best, spec.vehicle, clock_new)
            state.vehicles[vid] = veh
            lrow.append(veh)
            fr.pending -= 1
            spawned += 1
            state.total_spawned += 1
        blocked += fr.pending  # each deferred departure counts this tick
    state.total_blocked += blocked

    # (5) waiting time
    thr = cfg.waiting_speed_threshold
    for veh in state.vehicles.values():
        if veh.speed < thr:
            veh.cumulative_waiting += dt

    state.clock = clock_new
    return StepOutcome(spawned, finished, blocked)


def lane_query(state: SimState, lane_id: str, kind: str) -> float:
    row = state.lane_vehicles.get(lane_id)
    if row is None:
        raise EngineError(f"unknown lane {lane_id!r}")
    if kind == "count":
        return float(len(row))
    if kind == "waiting_count":
        thr = state.cfg.waiting_speed_threshold
        return float(sum(1 for v in row if v.speed < thr))
    if kind == "waiting_time_sum":
        return float(sum(v.cumulative_waiting for v in row))
    if kind == "mean_speed":
        if not row:
            return state.index.lane_max_speed[lane_id]
        return sum(v.speed for v in row) / len(row)
    raise EngineError(f"unknown lane query kind {kind!r}")


def state_digest(state: SimState) -> tuple:
    """Hashable snapshot of everything dynamic; equal digests = equal states."""
    vehicles = tuple((v.id, v.lane, v.route_pos, v.position, v.speed,
                      v.cumulative_waiting) for v in
                     sorted(state.vehicles.values(), key=lambda v: v.id))
    signals = tuple((iid, s.current_phase, s.phase_elapsed, s.yellow_remaining,
                     s.pending_phase) for iid, s in sorted(state.signals.items()))
    return (state.clock, vehicles, signals, state.total_spawned,
            len(state.finished_log), state.total_blocked)
