"""Render benchmark figures next to the CSV output.

Input rows are dicts shaped like the ``results.csv`` columns (values may
still be strings when re-read from disk).
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _to_float(value):
    return None if value in ("", None) else float(value)


def _by_algorithm(rows):
    algos = {}
    for row in rows:
        algos.setdefault(row["algorithm"], []).append(row)
    return algos


def convergence_figure(rows, path):
    """Median cost versus iteration, one curve per algorithm."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for algo, items in sorted(_by_algorithm(rows).items()):
        traces = {}
        for row in items:
            it = int(row["iteration"])
            cost = _to_float(row["cost"])
            if cost is not None:
                traces.setdefault(it, []).append(cost)
        iters = sorted(traces)
        med = [np.median(traces[it]) for it in iters]
        ax.plot(iters, med, label=algo, lw=1.4)
    ax.set_xlabel("iteration")
    ax.set_ylabel("cost (median over runs)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def metrics_figure(rows, path):
    """Final SI-SDR/SI-SIR box plots and success rate per algorithm."""
    finals = [r for r in rows if r.get("success") not in ("", None)]
    algos = sorted(_by_algorithm(finals))
    fig, axes = plt.subplots(1, 3, figsize=(11.0, 3.6))
    for ax, key, title in zip(axes[:2], ("si_sdr", "si_sir"), ("SI-SDR [dB]", "SI-SIR [dB]")):
        data = [
            [_to_float(r[key]) for r in finals if r["algorithm"] == a] for a in algos
        ]
        ax.boxplot(data, tick_labels=algos)
        ax.set_title(title)
        ax.tick_params(axis="x", rotation=60, labelsize=7)
        ax.grid(alpha=0.3)
    rate = [
        np.mean([float(r["success"]) for r in finals if r["algorithm"] == a])
        for a in algos
    ]
    axes[2].bar(range(len(algos)), rate)
    axes[2].set_xticks(range(len(algos)), algos, rotation=60, fontsize=7)
    axes[2].set_ylim(0, 1.05)
    axes[2].set_title("success rate")
    axes[2].grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_all(rows, out_dir):
    """Write all figures; returns the list of created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "convergence.png", out / "metrics.png"]
    convergence_figure(rows, paths[0])
    metrics_figure(rows, paths[1])
    return paths
