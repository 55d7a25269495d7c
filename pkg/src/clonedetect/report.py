"""Figures written next to the delimited/JSON outputs of the CLI."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _figure(width=4.5, height=None):
    height = height or width * 0.62
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_confusion(report, path):
    cells = np.array([[report.tn, report.fp], [report.fn, report.tp]])
    with plt.rc_context(_RC):
        fig, ax = _figure(3.4, 3.0)
        ax.imshow(cells, cmap="Blues")
        for (i, j), v in np.ndenumerate(cells):
            ax.text(j, i, str(v), ha="center", va="center",
                    color="white" if v > cells.max() / 2 else "black")
        ax.set_xticks([0, 1], ["legit", "clone"])
        ax.set_yticks([0, 1], ["legit", "clone"])
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.set_title(f"P {report.precision:.3f}  R {report.recall:.3f}  F1 {report.f1:.3f}")
    return _save(fig, path)


def plot_validation_history(history, path):
    with plt.rc_context(_RC):
        fig, ax = _figure()
        levels = np.arange(1, len(history) + 1)
        ax.plot(levels, history, marker="o")
        ax.set_xticks(levels)
        ax.set_xlabel("cascade level")
        ax.set_ylabel("validation accuracy")
    return _save(fig, path)


def plot_score_histogram(predictions, truth, path, bins=20):
    """Clone-probability histograms split by the true pair label."""
    truth = {tuple(sorted(p)) for p in truth}
    pos = [p.clone_probability for p in predictions if p.pair in truth]
    neg = [p.clone_probability for p in predictions if p.pair not in truth]
    with plt.rc_context(_RC):
        fig, ax = _figure()
        edges = np.linspace(0, 1, bins + 1)
        ax.hist(neg, bins=edges, alpha=0.6, label=f"other pairs ({len(neg)})")
        ax.hist(pos, bins=edges, alpha=0.6, label=f"clone/victim ({len(pos)})")
        ax.axvline(0.5, color="k", lw=0.8, ls="--")
        ax.set_yscale("log")
        ax.set_xlabel("clone probability")
        ax.set_ylabel("pairs")
        ax.legend(frameon=False)
    return _save(fig, path)


def plot_delta_sweep(rows, path):
    """``rows``: iterable of (delta, candidate_pairs, recovered_fraction)."""
    rows = sorted(rows)
    deltas = [r[0] for r in rows]
    with plt.rc_context(_RC):
        fig, ax = _figure()
        ax.plot(deltas, [r[2] for r in rows], marker="o", color="C0")
        ax.set_xlabel("name-similarity threshold")
        ax.set_ylabel("labeled pairs recovered", color="C0")
        ax.set_ylim(0, 1.05)
        ax2 = ax.twinx()
        ax2.plot(deltas, [r[1] for r in rows], marker="s", color="C1")
        ax2.set_yscale("log")
        ax2.set_ylabel("candidate pairs", color="C1")
    return _save(fig, path)
