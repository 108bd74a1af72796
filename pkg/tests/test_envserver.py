import io
import json

from tscbench.cli import main
from tscbench.envserver import ENV_ID, serve
from tscbench.fixtures import fixture
from tscbench.formats import CITYFLOW_STYLE, save_flows, save_network


def write_scenario(tmp_path):
    net, flows = fixture("1x1")
    (tmp_path / "net.json").write_bytes(save_network(CITYFLOW_STYLE, net))
    (tmp_path / "flow.json").write_bytes(save_flows(CITYFLOW_STYLE, flows))
    p = tmp_path / "exp.yaml"
    p.write_text("network: net.json\nflows: flow.json\n"
                 "env: {episode_steps: 60.0}\n", encoding="utf-8")
    return p


def transact(requests):
    """Feed a request list through the server loop; return parsed replies."""
    stdin = io.StringIO("\n".join(json.dumps(r) if isinstance(r, dict) else r
                                  for r in requests) + "\n")
    stdout = io.StringIO()
    serve(stdin, stdout)
    return [json.loads(line) for line in stdout.getvalue().splitlines()]


def test_make_describes_environment(tmp_path):
    cfg = write_scenario(tmp_path)
    (made,) = transact([{"op": "make", "config": str(cfg)}])
    assert made["ok"] and made["env_id"] == ENV_ID
    assert made["intersections"] == ["I_1_1"]
    assert made["phase_counts"] == {"I_1_1": 8}
    assert made["observation_sizes"] == {"I_1_1": 12}
    assert made["action_interval"] == 10.0 and made["episode_steps"] == 60.0


def test_full_episode_over_the_wire(tmp_path):
    cfg = write_scenario(tmp_path)
    steps = [{"op": "step", "actions": {"I_1_1": 0}} for _ in range(6)]
    replies = transact([{"op": "make", "config": str(cfg), "seed": 4},
                        {"op": "reset"}, *steps,
                        {"op": "metrics"}, {"op": "close"}])
    made, reset, *rest = replies
    metrics, closed = rest[-2], rest[-1]
    stepped = rest[:-2]
    assert reset["ok"] and len(reset["obs"]["I_1_1"]) == 12
    assert [s["done"] for s in stepped] == [False] * 5 + [True]
    assert all(s["rewards"]["I_1_1"] <= 0.0 for s in stepped)
    assert stepped[-1]["info"]["clock"] == 60.0
    assert metrics["ok"] and metrics["metrics"]["throughput"] >= 0.0
    assert closed == {"ok": True, "closed": True}


def test_server_matches_in_process_env(tmp_path):
    # identical seeds must give identical rewards through either surface
    from tscbench.config import load_experiment
    from tscbench.env import TrafficEnv
    from tscbench.formats import load_flows, load_network, complete_routes
    from dataclasses import replace
    from pathlib import Path

    cfg_path = write_scenario(tmp_path)
    cfg = load_experiment(cfg_path)
    net = load_network(CITYFLOW_STYLE, Path(cfg.network).read_bytes())
    flows = complete_routes(net, load_flows(CITYFLOW_STYLE,
                                            Path(cfg.flows).read_bytes()))
    env = TrafficEnv(net, flows, cfg.env, replace(cfg.sim, seed=5))
    obs = env.reset()
    local = []
    done = False
    while not done:
        _, rewards, done, _ = env.step({"I_1_1": 2})
        local.append(rewards["I_1_1"])

    steps = [{"op": "step", "actions": {"I_1_1": 2}} for _ in range(len(local))]
    replies = transact([{"op": "make", "config": str(cfg_path), "seed": 5},
                        {"op": "reset"}, *steps])
    remote = [r["rewards"]["I_1_1"] for r in replies[2:]]
    assert remote == local


def test_protocol_errors_keep_serving(tmp_path):
    cfg = write_scenario(tmp_path)
    replies = transact([
        {"op": "step", "actions": {}},                       # before make
        "this is not json",
        {"op": "warp"},                                       # unknown op
        {"op": "make", "config": str(cfg), "env": "other/Env-v1"},
        {"op": "make", "config": str(tmp_path / "missing.yaml")},
        {"op": "make"},                                       # no config
        {"op": "make", "config": str(cfg)},                   # still works
        {"op": "step", "actions": {"I_1_1": 99}},             # out of range
        {"op": "step", "actions": "nope"},
        {"op": "reset"},
    ])
    oks = [r["ok"] for r in replies]
    assert oks == [False] * 6 + [True, False, False, True]
    assert "no environment" in replies[0]["error"]
    assert "bad json" in replies[1]["error"]
    assert "unknown op" in replies[2]["error"]
    assert "unknown environment id" in replies[3]["error"]


def test_step_after_done_is_an_error(tmp_path):
    cfg = write_scenario(tmp_path)
    steps = [{"op": "step", "actions": {"I_1_1": 0}} for _ in range(7)]
    replies = transact([{"op": "make", "config": str(cfg)},
                        {"op": "reset"}, *steps])
    assert replies[-2]["ok"] and replies[-2]["done"]
    assert not replies[-1]["ok"]
    # reset clears the flag
    more = transact([{"op": "make", "config": str(cfg)}, {"op": "reset"},
                     *steps[:6], {"op": "reset"},
                     {"op": "step", "actions": {"I_1_1": 1}}])
    assert more[-1]["ok"]


def test_server_episode_matches_cli_run(tmp_path, capsys):
    # a fixed-time action trace through the server reproduces `run` metrics
    net, flows = fixture("1x1")
    (tmp_path / "net.json").write_bytes(save_network(CITYFLOW_STYLE, net))
    (tmp_path / "flow.json").write_bytes(save_flows(CITYFLOW_STYLE, flows))
    cfg = tmp_path / "exp.yaml"
    cfg.write_text("network: net.json\nflows: flow.json\nmethod: fixedtime\n"
                   "env: {episode_steps: 300.0}\n", encoding="utf-8")
    out = tmp_path / "native"
    assert main(["run", "--config", str(cfg), "--out", str(out),
                 "--no-plots"]) == 0
    native = json.loads((out / "summary.json").read_text())["final"]

    requests = [{"op": "make", "config": str(cfg), "seed": 0}, {"op": "reset"}]
    for k in range(30):
        phase = int((k * 10.0) // 30.0) % 8
        requests.append({"op": "step", "actions": {"I_1_1": phase}})
    requests.append({"op": "metrics"})
    served = transact(requests)[-1]["metrics"]
    assert served == native
