"""Classical signal controllers.

Each policy is a pure function of a ControlView, a plain snapshot of one
intersection, so decisions are unit-testable without running the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass

from tscbench.engine import SimState


@dataclass(frozen=True)
class ControlView:
    clock: float
    current_phase: int
    phase_elapsed: float
    phases: tuple[frozenset, ...]            # movement ids per phase
    movement_lanes: dict                     # movement id -> (in lane, out lane)
    waiting: dict                            # lane id -> waiting vehicle count


def control_view(state: SimState, intersection_id: str) -> ControlView:
    sig = state.signals.get(intersection_id)
    if sig is None:
        raise KeyError(f"no signal at {intersection_id!r}")
    phases = state.index.phases[intersection_id]
    net = state.index.net
    movement_lanes = {}
    lanes = set()
    for group in phases:
        for mid in group:
            m = net.movements_by_id[mid]
            movement_lanes[mid] = (m.in_lane, m.out_lane)
            lanes.add(m.in_lane)
            lanes.add(m.out_lane)
    thr = state.cfg.waiting_speed_threshold
    waiting = {lid: float(sum(1 for v in state.lane_vehicles[lid] if v.speed < thr))
               for lid in lanes}
    return ControlView(state.clock, sig.current_phase, sig.phase_elapsed,
                       phases, movement_lanes, waiting)


def fixed_time_action(view: ControlView, period: float = 30.0) -> int:
    """Cycle through the phases, holding each for `period` seconds."""
    return int(view.clock // period) % len(view.phases)


def phase_pressure(view: ControlView, phase_index: int) -> float:
    """Waiting vehicles upstream minus downstream over the phase's movements."""
    total = 0.0
    for mid in view.phases[phase_index]:
        in_lane, out_lane = view.movement_lanes[mid]
        total += view.waiting[in_lane] - view.waiting[out_lane]
    return total


def max_pressure_action(view: ControlView, t_min: float = 10.0) -> int:
    """Greedy pressure release with a minimum dwell of t_min seconds."""
    if view.phase_elapsed < t_min:
        return view.current_phase
    best = 0
    best_pressure = phase_pressure(view, 0)
    for k in range(1, len(view.phases)):
        p = phase_pressure(view, k)
        if p > best_pressure:
            best, best_pressure = k, p
    return best


def sotl_action(view: ControlView, t_min: float = 5.0,
                min_green_vehicle: float = 3.0,
                max_red_vehicle: float = 6.0) -> int:
    """Self-organizing threshold rule: advance to the next phase when enough
    demand waits on red approaches, unless a small green platoon would be cut.
    """
    if view.phase_elapsed < t_min:
        return view.current_phase
    green_movements = view.phases[view.current_phase]
    green_lanes = {view.movement_lanes[mid][0] for mid in green_movements}
    red_lanes = {view.movement_lanes[mid][0]
                 for group in view.phases for mid in group
                 if mid not in green_movements}
    g = sum(view.waiting[lid] for lid in green_lanes)
    r = sum(view.waiting[lid] for lid in red_lanes)
    if r > max_red_vehicle and not (0.0 < g < min_green_vehicle):
        return (view.current_phase + 1) % len(view.phases)
    return view.current_phase


CONTROLLERS = {
    "fixedtime": fixed_time_action,
    "maxpressure": max_pressure_action,
    "sotl": sotl_action,
}
