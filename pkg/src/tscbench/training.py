"""Episode loops tying controllers and learners to the environment.

The two learned methods share every line of the update path; they differ only
in which observation channels and reward the environment is wired with, looked
up from AGENT_WIRINGS.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from tscbench.agents.dqn import DqnAgent, DqnConfig, save_checkpoint
from tscbench.controllers import CONTROLLERS, control_view
from tscbench.env import EnvConfig, TrafficEnv


@dataclass(frozen=True)
class Wiring:
    obs_spec: tuple[str, ...]
    reward_spec: str


AGENT_WIRINGS = {
    "idqn": Wiring(("lane_count", "phase"), "neg_waiting_count"),
    "presslight": Wiring(("lane_count", "phase"), "neg_pressure_abs"),
}

CLASSICAL_NAMES = tuple(sorted(CONTROLLERS))
LEARNED_NAMES = tuple(sorted(AGENT_WIRINGS))


def wire_env_config(base: EnvConfig, method: str) -> EnvConfig:
    """Environment config with the method's observation and reward channels."""
    wiring = AGENT_WIRINGS[method]
    return replace(base, obs_spec=wiring.obs_spec, reward_spec=wiring.reward_spec)


def classical_policy(name: str, params: dict | None = None):
    controller = CONTROLLERS[name]
    params = params or {}

    def decide(env: TrafficEnv) -> dict[str, int]:
        return {iid: controller(control_view(env.state, iid), **params)
                for iid in env.intersection_ids}

    return decide


def greedy_policy(agents: dict[str, DqnAgent]):
    def decide(env: TrafficEnv, obs) -> dict[str, int]:
        return {iid: agents[iid].act(obs[iid], explore=False)
                for iid in env.intersection_ids}

    return decide


def run_episode(env: TrafficEnv, decide) -> dict[str, float]:
    """One full episode under a fixed policy; returns its metrics.

    decide is called as decide(env) or decide(env, obs), whichever it accepts.
    """
    obs = env.reset()
    wants_obs = getattr(decide, "__code__", None)
    takes_obs = wants_obs is not None and wants_obs.co_argcount >= 2
    done = False
    while not done:
        actions = decide(env, obs) if takes_obs else decide(env)
        obs, _, done, _ = env.step(actions)
    return env.metrics_summary()


def evaluate(env: TrafficEnv, agents: dict[str, DqnAgent]) -> dict[str, float]:
    """Greedy rollout (no exploration, no learning)."""
    return run_episode(env, greedy_policy(agents))


def make_agents(env: TrafficEnv, cfg: DqnConfig, seed: int) -> dict[str, DqnAgent]:
    """One learner per controlled intersection, seeded seed, seed+1, ... in
    sorted intersection order."""
    return {iid: DqnAgent(env.observation_size(iid), env.phase_counts[iid],
                          cfg, seed + k)
            for k, iid in enumerate(env.intersection_ids)}


def run_training(env: TrafficEnv, cfg: DqnConfig, seed: int,
                 episodes: int | None = None,
                 checkpoint_dir: str | None = None,
                 on_episode=None):
    """Train, then greedily evaluate, once per episode.

    Returns (agents, history) where history holds one record per episode with
    the training rollout metrics and the greedy evaluation metrics.
    """
    agents = make_agents(env, cfg, seed)
    episodes = cfg.episodes if episodes is None else episodes
    history = []
    for ep in range(episodes):
        obs = env.reset()
        done = False
        while not done:
            actions = {iid: agents[iid].act(obs[iid]) for iid in env.intersection_ids}
            next_obs, rewards, done, _ = env.step(actions)
            for iid in env.intersection_ids:
                agent = agents[iid]
                agent.remember(obs[iid], actions[iid], rewards[iid],
                               next_obs[iid], done)
                agent.maybe_train()
            obs = next_obs
        record = {
            "episode": ep,
            "train": env.metrics_summary(),
            "eval": evaluate(env, agents),
        }
        history.append(record)
        if checkpoint_dir and (ep + 1) % cfg.save_rate == 0:
            path = os.path.join(checkpoint_dir, f"checkpoint_{ep + 1:04d}.json")
            save_checkpoint(path, agents, cfg, ep + 1)
        if on_episode is not None:
            on_episode(record)
    return agents, history
