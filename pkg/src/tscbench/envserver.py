"""Line-oriented JSON server exposing TrafficEnv over stdio.

Foreign-language bindings talk to one environment per process: send a JSON
object per line on stdin, read one JSON object per line from stdout. The
protocol mirrors the Python API:

    {"op": "make", "config": "exp.yaml", "seed": 3}
    {"op": "reset"}
    {"op": "step", "actions": {"I_1_1": 2}}
    {"op": "metrics"}
    {"op": "close"}

Every response carries "ok"; failures carry "error" and leave the server
running so a client can recover or close cleanly.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace

from tscbench.config import load_experiment
from tscbench.env import TrafficEnv
from tscbench.formats import load_flows, load_network
from tscbench.training import AGENT_WIRINGS, wire_env_config

ENV_ID = "tscbench/MultiIntersection-v0"


class _Server:
    def __init__(self):
        self.env: TrafficEnv | None = None

    def handle(self, request: dict) -> dict:
        op = request.get("op")
        if op == "make":
            return self.make(request)
        if op == "close":
            return {"ok": True, "closed": True}
        if op not in ("reset", "step", "metrics"):
            return {"ok": False, "error": f"unknown op {op!r}"}
        if self.env is None:
            return {"ok": False, "error": "no environment; send make first"}
        if op == "reset":
            obs = self.env.reset()
            return {"ok": True, "obs": {k: v.tolist() for k, v in obs.items()}}
        if op == "step":
            actions = request.get("actions")
            if not isinstance(actions, dict):
                return {"ok": False, "error": "step needs an actions mapping"}
            obs, rewards, done, info = self.env.step(
                {k: int(v) for k, v in actions.items()})
            return {"ok": True,
                    "obs": {k: v.tolist() for k, v in obs.items()},
                    "rewards": rewards, "done": done, "info": info}
        return {"ok": True, "metrics": self.env.metrics_summary()}

    def make(self, request: dict) -> dict:
        env_id = request.get("env", ENV_ID)
        if env_id != ENV_ID:
            return {"ok": False, "error": f"unknown environment id {env_id!r}"}
        if "config" not in request:
            return {"ok": False, "error": "make needs a config path"}
        from tscbench.config import guess_format
        from tscbench.formats import complete_routes
        from pathlib import Path

        cfg = load_experiment(request["config"])
        if "seed" in request:
            cfg = replace(cfg, seed=int(request["seed"]))
        net = load_network(guess_format(cfg.network),
                           Path(cfg.network).read_bytes())
        flows = complete_routes(net, load_flows(guess_format(cfg.flows),
                                                Path(cfg.flows).read_bytes()))
        env_cfg = cfg.env
        if cfg.method in AGENT_WIRINGS:
            env_cfg = wire_env_config(env_cfg, cfg.method)
        self.env = TrafficEnv(net, flows, env_cfg,
                              replace(cfg.sim, seed=cfg.seed))
        return {
            "ok": True,
            "env_id": ENV_ID,
            "intersections": list(self.env.intersection_ids),
            "phase_counts": dict(self.env.phase_counts),
            "observation_sizes": {iid: self.env.observation_size(iid)
                                  for iid in self.env.intersection_ids},
            "action_interval": self.env.cfg.action_interval,
            "episode_steps": self.env.cfg.episode_steps,
        }


def serve(stdin=None, stdout=None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    server = _Server()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as e:
            print(json.dumps({"ok": False, "error": f"bad json: {e}"}),
                  file=stdout, flush=True)
            continue
        try:
            response = server.handle(request)
        except Exception as e:  # noqa: BLE001  - protocol reports, never dies
            response = {"ok": False, "error": f"{type(e).__name__}: {e}"}
        print(json.dumps(response), file=stdout, flush=True)
        if response.get("closed"):
            break


if __name__ == "__main__":
    serve()
