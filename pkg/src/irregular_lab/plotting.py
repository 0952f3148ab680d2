"""Static line charts for traces and convergence tables.

Figures are written with the Agg backend. SVG output is byte-stable: no
date metadata and a fixed id salt.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5) - 1) / 2
FIG_WIDTH = 6.0

STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "lines.linewidth": 1.2,
    "figure.figsize": (FIG_WIDTH, FIG_WIDTH * GOLDEN),
    "svg.hashsalt": "irregular-lab",
    "svg.fonttype": "path",
}


def _save(fig, path) -> list[Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = []
    for suffix in (".svg", ".png"):
        p = path.with_suffix(suffix)
        meta = {"Date": None} if suffix == ".svg" else {"Software": None}
        fig.savefig(p, metadata=meta, dpi=150, bbox_inches="tight")
        out.append(p)
    plt.close(fig)
    return out


def plot_trace(trace, path, title: str | None = None, bands: dict | None = None) -> list[Path]:
    """Running averages against the checkpoint index (log x-axis).

    ``bands`` maps an observable name to expected cluster values, drawn as
    dotted horizontal guides.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, avgs in trace.averages.items():
            (line,) = ax.plot(trace.checkpoints, avgs, label=name)
            for v in (bands or {}).get(name, ()):
                ax.axhline(v, color=line.get_color(), ls=":", lw=0.8)
        ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel(r"$A_n\varphi$")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        return _save(fig, path)


def plot_block_distances(records, path) -> list[Path]:
    """Prefix weak* distance to each block's target against the certified bound."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ends = [r.end for r in records]
        ax.plot(ends, [r.prefix_distance for r in records], "o-", ms=3, label="prefix distance")
        ax.plot(ends, [r.tol + r.overhead for r in records], "--", label="tol + overhead")
        ax.set_xscale("log")
        ax.set_xlabel("block end")
        ax.set_ylabel("weak* distance")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_convergence(rows, path, x: str = "n", y: str = "error", ylabel: str | None = None) -> list[Path]:
    """Generic error-versus-n chart from a list of dict rows."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot([r[x] for r in rows], [r[y] for r in rows], "o-", ms=4)
        ax.set_xlabel(x)
        ax.set_ylabel(ylabel or y)
        return _save(fig, path)
