"""Figure rendering for run reports.

Figures are written next to the delimited output: per-task harmonic-mean
and unseen-accuracy curves for a single run, and the metric-vs-alpha
curves for a task-importance sweep.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_task_curves(result, outdir) -> list[Path]:
    outdir = Path(outdir)
    tasks = list(range(1, len(result.per_task_seen) + 1))
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    pts = [(t, h) for t, h in zip(tasks, result.per_task_harmonic) if h is not None]
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o")
    ax.set_xlabel("task")
    ax.set_ylabel("harmonic mean")
    ax.set_title("Per-task harmonic mean")
    ax.set_xticks(tasks)
    ax.grid(alpha=0.3)
    path = outdir / "harmonic_by_task.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    pts = [(t, u) for t, u in zip(tasks, result.per_task_unseen) if u is not None]
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", color="tab:orange")
    ax.plot(tasks, result.per_task_seen, marker="s", color="tab:blue")
    ax.legend(["unseen accuracy", "seen accuracy"])
    ax.set_xlabel("task")
    ax.set_ylabel("per-class accuracy")
    ax.set_title("Per-task seen/unseen accuracy")
    ax.set_xticks(tasks)
    ax.grid(alpha=0.3)
    path = outdir / "accuracy_by_task.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)
    return written


def plot_alpha_sweep(results: dict, outdir) -> Path:
    outdir = Path(outdir)
    alphas = sorted(results)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, label in (("msa", "mSA"), ("mua", "mUA"), ("mh", "mH")):
        ax.plot(alphas, [getattr(results[a], key) for a in alphas],
                marker="o", label=label)
    ax.set_xlabel("task importance (alpha)")
    ax.set_ylabel("metric value")
    ax.set_title("Task-importance sweep")
    ax.legend()
    ax.grid(alpha=0.3)
    path = outdir / "alpha_sweep.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
