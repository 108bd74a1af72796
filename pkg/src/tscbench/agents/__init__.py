from tscbench.agents.dqn import (
    DqnAgent,
    DqnConfig,
    epsilon_greedy,
    load_checkpoint,
    restore_agents,
    save_checkpoint,
    td_targets,
)
from tscbench.agents.nn import QNetwork, clip_gradients
from tscbench.agents.replay import ReplayBuffer

__all__ = [
    "DqnAgent",
    "DqnConfig",
    "QNetwork",
    "ReplayBuffer",
    "clip_gradients",
    "epsilon_greedy",
    "load_checkpoint",
    "restore_agents",
    "save_checkpoint",
    "td_targets",
]
