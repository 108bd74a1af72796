"""Per-intersection Q-learning with a target network.

Plain SGD on the TD error, epsilon-greedy exploration with multiplicative
decay, and JSON checkpoints that capture the full learner state including the
random generator, so a resumed run continues bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from tscbench.agents.nn import QNetwork, clip_gradients
from tscbench.agents.replay import ReplayBuffer

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class DqnConfig:
    learning_rate: float = 0.001
    gamma: float = 0.95
    epsilon_start: float = 0.1
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.01
    buffer_size: int = 5000
    batch_size: int = 64
    learning_start: int = 1000
    update_model_rate: int = 1
    update_target_rate: int = 10
    grad_clip: float = 5.0
    hidden: tuple[int, ...] = (20, 20)
    episodes: int = 200
    save_rate: int = 20


def epsilon_greedy(q_values: np.ndarray, epsilon: float,
                   rng: np.random.Generator) -> int:
    """Ties in the greedy branch resolve to the lowest action index."""
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


def td_targets(rewards, next_q_max, dones, gamma: float) -> np.ndarray:
    """r for terminal transitions, r + gamma * max_a' Q_target otherwise."""
    return rewards + gamma * next_q_max * ~dones


class DqnAgent:
    def __init__(self, obs_dim: int, n_actions: int, cfg: DqnConfig, seed: int):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.rng = np.random.default_rng(seed)
        sizes = [obs_dim, *cfg.hidden, n_actions]
        self.online = QNetwork(sizes, self.rng)
        self.target = QNetwork(sizes, self.rng)
        self.target.copy_from(self.online)
        self.buffer = ReplayBuffer(cfg.buffer_size, obs_dim)
        self.epsilon = cfg.epsilon_start
        self.decisions = 0
        self.train_steps = 0

    def q_values(self, obs) -> np.ndarray:
        return self.online.predict(np.asarray(obs)[None, :])[0]

    def act(self, obs, explore: bool = True) -> int:
        q = self.q_values(obs)
        if not explore:
            return int(np.argmax(q))
        action = epsilon_greedy(q, self.epsilon, self.rng)
        self.epsilon = max(self.cfg.epsilon_min,
                           self.epsilon * self.cfg.epsilon_decay)
        return action

    def remember(self, obs, action, reward, next_obs, done) -> None:
        self.buffer.add(obs, action, reward, next_obs, done)

    def maybe_train(self) -> float | None:
        """One SGD step when the buffer is warm and the cadence allows it.
        Returns the minibatch loss, or None when no step was taken."""
        self.decisions += 1
        if len(self.buffer) < self.cfg.learning_start:
            return None
        if self.decisions % self.cfg.update_model_rate != 0:
            return None
        return self._train_step()

    def _train_step(self) -> float:
        cfg = self.cfg
        s, a, r, s2, done = self.buffer.sample(cfg.batch_size, self.rng)
        next_q_max = self.target.predict(s2).max(axis=1)
        y = td_targets(r, next_q_max, done, cfg.gamma)

        q, cache = self.online.forward(s)
        rows = np.arange(len(a))
        err = q[rows, a] - y
        loss = float((err * err).mean())

        dq = np.zeros_like(q)
        dq[rows, a] = 2.0 * err / len(a)
        d_w, d_b = self.online.backward(cache, dq)
        d_w, d_b, _ = clip_gradients(d_w, d_b, cfg.grad_clip)
        for w, g in zip(self.online.weights, d_w):
            w -= cfg.learning_rate * g
        for b, g in zip(self.online.biases, d_b):
            b -= cfg.learning_rate * g

        self.train_steps += 1
        if self.train_steps % cfg.update_target_rate == 0:
            self.target.copy_from(self.online)
        return loss

    # -- persistence -------------------------------------------------------

    def export_state(self) -> dict:
        return {
            "obs_dim": self.obs_dim,
            "n_actions": self.n_actions,
            "epsilon": self.epsilon,
            "decisions": self.decisions,
            "train_steps": self.train_steps,
            "online": self.online.export_parameters(),
            "target": self.target.export_parameters(),
            "rng_state": self.rng.bit_generator.state,
        }

    def restore_state(self, data: dict) -> None:
        self.epsilon = float(data["epsilon"])
        self.decisions = int(data["decisions"])
        self.train_steps = int(data["train_steps"])
        self.online = QNetwork.from_parameters(data["online"])
        self.target = QNetwork.from_parameters(data["target"])
        self.rng.bit_generator.state = data["rng_state"]


def save_checkpoint(path, agents: dict[str, DqnAgent], cfg: DqnConfig,
                    episode: int, extra: dict | None = None) -> None:
    """Replay buffers are deliberately not persisted; a resumed run re-warms.
    Everything else round-trips exactly."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "episode": episode,
        "config": asdict(cfg),
        "agents": {iid: agent.export_state() for iid, agent in agents.items()},
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {data.get('version')!r}")
    cfg = data["config"]
    cfg["hidden"] = tuple(cfg["hidden"])
    data["config"] = DqnConfig(**cfg)
    return data


def restore_agents(data: dict, cfg: DqnConfig | None = None) -> dict[str, DqnAgent]:
    cfg = cfg if cfg is not None else data["config"]
    agents = {}
    for iid, blob in data["agents"].items():
        agent = DqnAgent(int(blob["obs_dim"]), int(blob["n_actions"]), cfg, seed=0)
        agent.restore_state(blob)
        agents[iid] = agent
    return agents
