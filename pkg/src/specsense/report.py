"""Figure rendering for experiment outputs.

Renders ROC and Pd-vs-SNR figures next to the delimited output.  Plots read
the same point lists the CSV writers consume; nothing here feeds back into
the numbers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["plot_roc", "plot_pd_vs_snr"]

_STYLE = {
    "lrt:K=10": dict(color="tab:gray", marker="s", linestyle="--"),
    "lrt:K=20": dict(color="tab:brown", marker="^", linestyle="--"),
    "ave": dict(color="tab:blue", marker="o", linestyle="-"),
    "avn": dict(color="tab:green", marker="v", linestyle="-"),
    "llr": dict(color="tab:red", marker="d", linestyle="-"),
}


def _style_for(label: str) -> dict:
    return _STYLE.get(label, dict(marker="."))


def plot_roc(points, title: str, path) -> None:
    """One ROC figure: empirical Pd against empirical Pfa per detector."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    by_label: dict[str, list] = {}
    for pt in points:
        by_label.setdefault(pt.label, []).append(pt)
    for label, pts in by_label.items():
        pts = sorted(pts, key=lambda p: p.empirical_pfa)
        ax.plot(
            [p.empirical_pfa for p in pts],
            [p.empirical_pd for p in pts],
            label=label,
            markersize=4,
            linewidth=1.2,
            **_style_for(label),
        )
    ax.set_xscale("log")
    ax.set_xlabel("false-alarm probability")
    ax.set_ylabel("detection probability")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="lower right", fontsize=9)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_pd_vs_snr(points, title: str, path) -> None:
    """Detection probability against SNR at a fixed target false alarm."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    by_label: dict[str, list] = {}
    for pt in points:
        by_label.setdefault(pt.label, []).append(pt)
    for label, pts in by_label.items():
        pts = sorted(pts, key=lambda p: p.snr)
        ax.plot(
            [p.snr for p in pts],
            [p.empirical_pd for p in pts],
            label=label,
            markersize=4,
            linewidth=1.2,
            **_style_for(label),
        )
    ax.set_xlabel("SNR (linear)")
    ax.set_ylabel("detection probability")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right", fontsize=9)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
