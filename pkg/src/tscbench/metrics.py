"""Episode-level performance measures.

All measures are collected by observing the live simulation state once per
tick, then reduced at the end of the episode. Lower is better for everything
except throughput.
"""

from __future__ import annotations

from tscbench.engine import SimState

METRIC_NAMES = ("travel_time", "queue", "delay", "real_delay", "throughput")

# orientation used when ranking runs against each other
HIGHER_IS_BETTER = frozenset({"throughput"})


def approx_delay(speeds, max_speed: float) -> float:
    """Relative speed shortfall of one lane: 1 - mean(v) / v_max.

    0 when everyone drives at the limit, 1 when everyone stands still.
    Empty lanes have no shortfall.
    """
    n = len(speeds)
    if n == 0:
        return 0.0
    return 1.0 - sum(speeds) / (n * max_speed)


def free_flow_time(net, route) -> float:
    """Seconds to cover the route at each road's speed limit."""
    return sum(r.length / r.speed_limit
               for r in (net.roads_by_id[rid] for rid in route))


class MetricsAccumulator:
    """Call observe() after every engine tick, then summary() once.

    travel_time counts vehicles still on the network at the horizon as if
    they finished right there; the summary reports how many such vehicles
    were included under "unfinished".
    """

    def __init__(self, state: SimState):
        self.state = state
        self.ticks = 0
        self.queue_total = 0.0
        self.delay_total = 0.0
        self.delay_ticks = 0
        self._free_time = [free_flow_time(state.index.net, fr.spec.route)
                           for fr in state.flows]

    def observe(self) -> None:
        st = self.state
        thr = st.cfg.waiting_speed_threshold
        max_speed = st.index.lane_max_speed
        waiting = 0
        shortfall = 0.0
        busy_lanes = 0
        for lid, row in st.lane_vehicles.items():
            if not row:
                continue
            total = 0.0
            for v in row:
                total += v.speed
                if v.speed < thr:
                    waiting += 1
            shortfall += 1.0 - total / (len(row) * max_speed[lid])
            busy_lanes += 1
        self.ticks += 1
        self.queue_total += waiting
        if busy_lanes:
            self.delay_total += shortfall / busy_lanes
            self.delay_ticks += 1

    def _flow_free_time(self, vehicle_id: str) -> float:
        return self._free_time[int(vehicle_id[1:vehicle_id.index(".")])]

    def summary(self) -> dict[str, float]:
        st = self.state
        horizon = st.cfg.horizon

        durations = [exit_t - enter_t for _, enter_t, exit_t in st.finished_log]
        unfinished = len(st.vehicles)
        durations.extend(horizon - v.enter_time for v in st.vehicles.values())
        travel_time = sum(durations) / len(durations) if durations else 0.0

        real = [max(0.0, (exit_t - enter_t) - self._flow_free_time(vid))
                for vid, enter_t, exit_t in st.finished_log]

        return {
            "travel_time": travel_time,
            "queue": self.queue_total / self.ticks if self.ticks else 0.0,
            "delay": self.delay_total / self.delay_ticks if self.delay_ticks else 0.0,
            "real_delay": sum(real) / len(real) if real else 0.0,
            "throughput": float(len(st.finished_log)),
            "unfinished": float(unfinished),
        }
