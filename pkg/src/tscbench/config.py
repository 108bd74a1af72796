"""Experiment files: a YAML document naming the scenario and the method.

Paths inside the file resolve relative to the file itself, so an experiment
directory can be moved around or shipped as a fixture. Unknown keys are
rejected rather than ignored; silent typos in benchmark configs are how wrong
numbers get published.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from tscbench.agents.dqn import DqnConfig
from tscbench.engine import SimConfig
from tscbench.env import EnvConfig
from tscbench.formats import CITYFLOW_STYLE, SUMO_STYLE
from tscbench.model import FlowSet, RoadNetwork
from tscbench.training import CLASSICAL_NAMES, LEARNED_NAMES

METHOD_NAMES = tuple(sorted(CLASSICAL_NAMES + LEARNED_NAMES))


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    network: str
    flows: str
    method: str = "fixedtime"
    seed: int = 0
    sim: SimConfig = field(default_factory=SimConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    dqn: DqnConfig = field(default_factory=DqnConfig)
    controller: dict = field(default_factory=dict)


def guess_format(path: str) -> str:
    if path.endswith(".json"):
        return CITYFLOW_STYLE
    if path.endswith(".xml"):
        return SUMO_STYLE
    raise ConfigError(f"cannot infer format from {path!r}; "
                      f"expected a .json or .xml file")


def _build(cls, section: dict, where: str):
    known = {f.name for f in fields(cls)}
    extra = set(section) - known
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")
    if "hidden" in section:
        section = dict(section, hidden=tuple(section["hidden"]))
    if "obs_spec" in section:
        section = dict(section, obs_spec=tuple(section["obs_spec"]))
    try:
        return cls(**section)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad {where} section: {e}") from e


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(str(e)) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")

    known = {"network", "flows", "method", "seed", "sim", "env", "dqn",
             "controller"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(extra))}")
    for key in ("network", "flows"):
        if not isinstance(raw.get(key), str):
            raise ConfigError(f"{path}: missing required key {key!r}")

    method = raw.get("method", "fixedtime")
    if method not in METHOD_NAMES:
        raise ConfigError(f"unknown method {method!r}; "
                          f"pick one of {', '.join(METHOD_NAMES)}")
    controller = raw.get("controller", {})
    if not isinstance(controller, dict):
        raise ConfigError("controller section must be a mapping")

    base = path.parent
    return ExperimentConfig(
        network=str((base / raw["network"]).resolve()),
        flows=str((base / raw["flows"]).resolve()),
        method=method,
        seed=int(raw.get("seed", 0)),
        sim=_build(SimConfig, raw.get("sim", {}), "sim"),
        env=_build(EnvConfig, raw.get("env", {}), "env"),
        dqn=_build(DqnConfig, raw.get("dqn", {}), "dqn"),
        controller=dict(controller),
    )


# -- reproducibility stamps --------------------------------------------------


def _canonical_network(net: RoadNetwork) -> dict:
    return {
        "intersections": sorted(
            (i.id, i.position, i.virtual, i.yellow_time,
             sorted((p.index, sorted(p.allowed_movements)) for p in i.phases))
            for i in net.intersections),
        "roads": sorted(
            (r.id, r.from_intersection, r.to_intersection, r.length,
             list(r.lanes), r.speed_limit) for r in net.roads),
        "lanes": sorted(
            (l.id, l.road, l.index, l.length, l.max_speed) for l in net.lanes),
        "movements": sorted(
            (m.id, m.in_lane, m.out_lane, m.turn_kind) for m in net.movements),
    }


def _canonical_flows(flows: FlowSet) -> list:
    return [
        (list(f.route), f.start_time, f.end_time, f.interval, f.od_only,
         asdict(f.vehicle))
        for f in flows.flows
    ]


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def scenario_fingerprint(net: RoadNetwork, flows: FlowSet) -> str:
    """Identifies the traffic problem itself, independent of file format,
    method, or seed. Runs are only comparable when these match."""
    return _digest({"network": _canonical_network(net),
                    "flows": _canonical_flows(flows)})


def run_fingerprint(net: RoadNetwork, flows: FlowSet,
                    cfg: ExperimentConfig) -> str:
    payload = {
        "network": _canonical_network(net),
        "flows": _canonical_flows(flows),
        "method": cfg.method,
        "seed": cfg.seed,
        "sim": asdict(cfg.sim),
        "env": asdict(cfg.env),
        "dqn": asdict(cfg.dqn),
        "controller": cfg.controller,
    }
    return _digest(payload)
