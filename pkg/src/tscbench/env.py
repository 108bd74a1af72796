"""Multi-intersection signal-control environment over the simulator.

Each controlled intersection is an agent slot: step() takes one phase index
per intersection, holds it for action_interval seconds of simulated time, and
returns per-intersection observations and rewards. Observations concatenate
the requested info channels over the intersection's incoming lanes (sorted by
road id, then lane index) so their layout is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from tscbench import engine
from tscbench.engine import SimConfig, SimState
from tscbench.metrics import MetricsAccumulator
from tscbench.model import FlowSet, RoadNetwork


class EnvError(Exception):
    pass


@dataclass(frozen=True)
class EnvConfig:
    action_interval: float = 10.0
    episode_steps: float = 3600.0   # simulated seconds per episode
    obs_spec: tuple[str, ...] = ("lane_count", "phase")
    reward_spec: str = "neg_waiting_count"
    phase_one_hot: bool = True


def _lane_counts(env: "TrafficEnv", iid: str) -> list[float]:
    rows = env.state.lane_vehicles
    return [float(len(rows[lid])) for lid in env.in_lanes[iid]]


def _lane_waiting_counts(env: "TrafficEnv", iid: str) -> list[float]:
    st = env.state
    thr = st.cfg.waiting_speed_threshold
    return [float(sum(1 for v in st.lane_vehicles[lid] if v.speed < thr))
            for lid in env.in_lanes[iid]]


def _lane_waiting_time(env: "TrafficEnv", iid: str) -> list[float]:
    rows = env.state.lane_vehicles
    return [sum(v.cumulative_waiting for v in rows[lid])
            for lid in env.in_lanes[iid]]


def _pressure(env: "TrafficEnv", iid: str) -> list[float]:
    return [env.pressure(iid)]


def _phase(env: "TrafficEnv", iid: str) -> list[float]:
    sig = env.state.signals[iid]
    if not env.cfg.phase_one_hot:
        return [float(sig.current_phase)]
    out = [0.0] * env.phase_counts[iid]
    out[sig.current_phase] = 1.0
    return out


INFO_FUNCTIONS = {
    "lane_count": _lane_counts,
    "lane_waiting_count": _lane_waiting_counts,
    "lane_waiting_time_count": _lane_waiting_time,
    "pressure": _pressure,
    "phase": _phase,
}


def _reward_neg_waiting_count(env: "TrafficEnv", iid: str) -> float:
    return -sum(_lane_waiting_counts(env, iid))


def _reward_neg_pressure_abs(env: "TrafficEnv", iid: str) -> float:
    return -abs(env.pressure(iid))


def _reward_neg_waiting_time(env: "TrafficEnv", iid: str) -> float:
    # waiting seconds accrued on incoming lanes since the previous decision
    return -env.waiting_accrual[iid]


REWARD_FUNCTIONS = {
    "neg_waiting_count": _reward_neg_waiting_count,
    "neg_pressure_abs": _reward_neg_pressure_abs,
    "neg_waiting_time": _reward_neg_waiting_time,
}


class TrafficEnv:
    """Reset-and-step loop around the simulator for signal control."""

    def __init__(self, net: RoadNetwork, flows: FlowSet, cfg: EnvConfig,
                 sim: SimConfig | None = None):
        sim = sim if sim is not None else SimConfig()
        for name in cfg.obs_spec:
            if name not in INFO_FUNCTIONS:
                raise EnvError(f"unknown observation channel {name!r}")
        if cfg.reward_spec not in REWARD_FUNCTIONS:
            raise EnvError(f"unknown reward {cfg.reward_spec!r}")
        ticks = cfg.action_interval / sim.dt
        if cfg.action_interval <= 0 or abs(ticks - round(ticks)) > 1e-9:
            raise EnvError("action_interval must be a positive multiple of dt")
        episode_ticks = cfg.episode_steps / sim.dt
        if cfg.episode_steps <= 0 or abs(episode_ticks - round(episode_ticks)) > 1e-9:
            raise EnvError("episode_steps must be a positive multiple of dt")

        self.net = net
        self.flows = flows
        self.cfg = cfg
        self.base_sim = replace(sim, horizon=cfg.episode_steps)
        self.ticks_per_action = int(round(ticks))
        self.index = engine.build_index(net)

        self.intersection_ids = tuple(i.id for i in net.controlled_intersections())
        if not self.intersection_ids:
            raise EnvError("network has no controlled intersections")
        self.phase_counts = {iid: len(net.intersections_by_id[iid].phases)
                             for iid in self.intersection_ids}
        self.in_lanes = {iid: tuple(l.id for l in net.incoming_lanes(iid))
                         for iid in self.intersection_ids}
        self.movements = {iid: tuple((m.in_lane, m.out_lane)
                                     for m in net.movements_at(iid))
                          for iid in self.intersection_ids}

        self.episode_index = 0
        self.state: SimState | None = None
        self.metrics: MetricsAccumulator | None = None
        self.waiting_accrual: dict[str, float] = {}
        self.done = True

    # -- per-intersection quantities ------------------------------------

    def observation_size(self, iid: str) -> int:
        """Width of the observation vector, known without running anything."""
        total = 0
        for name in self.cfg.obs_spec:
            if name == "pressure":
                total += 1
            elif name == "phase":
                total += self.phase_counts[iid] if self.cfg.phase_one_hot else 1
            else:
                total += len(self.in_lanes[iid])
        return total

    def pressure(self, iid: str) -> float:
        """Total vehicles on incoming minus outgoing lanes, over movements."""
        rows = self.state.lane_vehicles
        return float(sum(len(rows[a]) - len(rows[b])
                         for a, b in self.movements[iid]))

    def observations(self) -> dict[str, np.ndarray]:
        out = {}
        for iid in self.intersection_ids:
            parts: list[float] = []
            for name in self.cfg.obs_spec:
                parts.extend(INFO_FUNCTIONS[name](self, iid))
            out[iid] = np.asarray(parts, dtype=np.float64)
        return out

    def rewards(self) -> dict[str, float]:
        fn = REWARD_FUNCTIONS[self.cfg.reward_spec]
        return {iid: fn(self, iid) for iid in self.intersection_ids}

    # -- episode loop ----------------------------------------------------

    def reset(self) -> dict[str, np.ndarray]:
        sim = replace(self.base_sim, seed=self.base_sim.seed + self.episode_index)
        self.episode_index += 1
        self.state = engine.init(self.net, self.flows, sim, index=self.index)
        self.metrics = MetricsAccumulator(self.state)
        self.waiting_accrual = {iid: 0.0 for iid in self.intersection_ids}
        self.done = False
        return self.observations()

    def step(self, actions: dict[str, int]):
        if self.done:
            raise EnvError("episode is over; call reset()")
        if set(actions) != set(self.intersection_ids):
            raise EnvError("actions must cover every controlled intersection")
        for iid in self.intersection_ids:
            a = int(actions[iid])
            if not 0 <= a < self.phase_counts[iid]:
                raise EnvError(f"phase {a} out of range at {iid!r}")
            engine.set_phase(self.state, iid, a)

        for iid in self.intersection_ids:
            self.waiting_accrual[iid] = 0.0
        st = self.state
        dt = st.cfg.dt
        spawned = finished = blocked = 0
        for _ in range(self.ticks_per_action):
            out = engine.step(st)
            self.metrics.observe()
            spawned += out.spawned
            finished += out.finished
            blocked += out.blocked_spawns
            for iid in self.intersection_ids:
                self.waiting_accrual[iid] += sum(_lane_waiting_counts(self, iid)) * dt

        self.done = st.clock >= self.cfg.episode_steps - 1e-9
        info = {"clock": st.clock, "spawned": spawned, "finished": finished,
                "blocked_spawns": blocked}
        return self.observations(), self.rewards(), self.done, info

    def metrics_summary(self) -> dict[str, float]:
        if self.metrics is None:
            raise EnvError("no episode has been run")
        return self.metrics.summary()
