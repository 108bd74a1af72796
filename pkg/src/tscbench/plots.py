"""Figure rendering for run and comparison reports.

Uses the Agg backend so it works headless; every figure goes straight to a
file next to the delimited output, which stays the primary artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from tscbench.metrics import METRIC_NAMES


def learning_curve(rows: list[dict], path, method: str) -> None:
    """Travel time and throughput per evaluation episode."""
    episodes = [r["episode"] for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(episodes, [r["travel_time"] for r in rows],
            color="tab:blue", marker="o" if len(rows) <= 25 else None,
            markersize=3, label="travel time [s]")
    ax.set_xlabel("episode")
    ax.set_ylabel("average travel time [s]", color="tab:blue")
    ax.tick_params(axis="y", labelcolor="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(episodes, [r["throughput"] for r in rows],
             color="tab:orange", alpha=0.7, label="throughput")
    ax2.set_ylabel("throughput [vehicles]", color="tab:orange")
    ax2.tick_params(axis="y", labelcolor="tab:orange")
    ax.set_title(f"{method}: evaluation by episode")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def comparison_bars(runs: list[dict], path) -> None:
    """One bar panel per metric; runs keep their given order and labels."""
    labels = [r["label"] for r in runs]
    fig, axes = plt.subplots(1, len(METRIC_NAMES),
                             figsize=(3.0 * len(METRIC_NAMES), 3.6))
    for ax, name in zip(axes, METRIC_NAMES):
        values = [r["metrics"][name] for r in runs]
        ax.bar(range(len(runs)), values, color="tab:blue")
        ax.set_xticks(range(len(runs)))
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
        ax.set_title(name, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
