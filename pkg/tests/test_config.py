import pytest

from tscbench.config import (
    ConfigError,
    guess_format,
    load_experiment,
    run_fingerprint,
    scenario_fingerprint,
)
from tscbench.fixtures import fixture
from tscbench.formats import (
    CITYFLOW_STYLE,
    SUMO_STYLE,
    load_flows,
    load_network,
    save_flows,
    save_network,
)


def write_yaml(tmp_path, text, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_minimal_experiment_defaults(tmp_path):
    p = write_yaml(tmp_path, "network: net.json\nflows: flow.json\n")
    cfg = load_experiment(p)
    assert cfg.method == "fixedtime" and cfg.seed == 0
    assert cfg.sim.dt == 1.0 and cfg.env.action_interval == 10.0
    assert cfg.dqn.episodes == 200
    # paths resolve against the yaml location, not the cwd
    assert cfg.network == str(tmp_path / "net.json")
    assert cfg.flows == str(tmp_path / "flow.json")


def test_sections_and_coercions(tmp_path):
    p = write_yaml(tmp_path, """
network: a.xml
flows: b.xml
method: idqn
seed: 3
sim: {dt: 0.5, horizon: 300.0}
env:
  action_interval: 5.0
  obs_spec: [lane_count, pressure]
dqn:
  hidden: [16, 16]
  episodes: 4
controller: {period: 20.0}
""")
    cfg = load_experiment(p)
    assert cfg.method == "idqn" and cfg.seed == 3
    assert cfg.sim.dt == 0.5
    assert cfg.env.obs_spec == ("lane_count", "pressure")
    assert cfg.dqn.hidden == (16, 16) and cfg.dqn.episodes == 4
    assert cfg.controller == {"period": 20.0}


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown top-level"):
        load_experiment(write_yaml(tmp_path, "network: a.xml\nflows: b.xml\nbogus: 1\n"))
    with pytest.raises(ConfigError, match="unknown key.*sim"):
        load_experiment(write_yaml(
            tmp_path, "network: a.xml\nflows: b.xml\nsim: {speed: 3}\n"))
    with pytest.raises(ConfigError, match="unknown key.*dqn"):
        load_experiment(write_yaml(
            tmp_path, "network: a.xml\nflows: b.xml\ndqn: {lr: 0.1}\n"))


def test_required_and_invalid_values(tmp_path):
    with pytest.raises(ConfigError, match="network"):
        load_experiment(write_yaml(tmp_path, "flows: b.xml\n"))
    with pytest.raises(ConfigError, match="unknown method"):
        load_experiment(write_yaml(
            tmp_path, "network: a.xml\nflows: b.xml\nmethod: webster\n"))
    with pytest.raises(ConfigError, match="mapping"):
        load_experiment(write_yaml(tmp_path, "- just\n- a list\n"))
    with pytest.raises(ConfigError, match="controller"):
        load_experiment(write_yaml(
            tmp_path, "network: a.xml\nflows: b.xml\ncontroller: 7\n"))
    # constructor-level validation surfaces as ConfigError too
    with pytest.raises(ConfigError, match="sim"):
        load_experiment(write_yaml(
            tmp_path, "network: a.xml\nflows: b.xml\nsim: {dt: -1.0}\n"))


def test_missing_file_and_bad_yaml(tmp_path):
    with pytest.raises(ConfigError):
        load_experiment(tmp_path / "absent.yaml")
    with pytest.raises(ConfigError):
        load_experiment(write_yaml(tmp_path, "network: [unclosed\n"))


def test_guess_format():
    assert guess_format("x/net.json") == CITYFLOW_STYLE
    assert guess_format("x/net.xml") == SUMO_STYLE
    with pytest.raises(ConfigError):
        guess_format("net.yaml")


def test_scenario_fingerprint_is_format_independent():
    net, flows = fixture("1x1")
    base = scenario_fingerprint(net, flows)
    for kind in (SUMO_STYLE, CITYFLOW_STYLE):
        net2 = load_network(kind, save_network(kind, net))
        flows2 = load_flows(kind, save_flows(kind, flows))
        assert scenario_fingerprint(net2, flows2) == base, kind


def test_fingerprints_react_to_changes(tmp_path):
    import dataclasses

    net, flows = fixture("1x1")
    base = scenario_fingerprint(net, flows)
    busier = dataclasses.replace(flows.flows[0], interval=1.0)
    changed = type(flows)((busier,) + flows.flows[1:])
    assert scenario_fingerprint(net, changed) != base

    p = write_yaml(tmp_path, "network: a.json\nflows: b.json\n")
    cfg = load_experiment(p)
    run_a = run_fingerprint(net, flows, cfg)
    assert run_fingerprint(net, flows, dataclasses.replace(cfg, seed=1)) != run_a
    assert run_fingerprint(net, flows, dataclasses.replace(cfg, method="sotl")) != run_a
    # the scenario stamp ignores method and seed entirely
    assert scenario_fingerprint(net, flows) == base
