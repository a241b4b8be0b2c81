"""Static log-scale line charts written as SVG."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_log_plot(path: Path, t, y, title: str, ylabel: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    y = np.asarray(y, dtype=float)
    mask = y > 0
    with matplotlib.rc_context({"svg.hashsalt": "penaltyflow", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(np.asarray(t)[mask], y[mask], lw=1.5)
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
