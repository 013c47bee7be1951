"""Report figures: error-vs-rank curves, objective traces, consistency scans.

Figures are built on :class:`matplotlib.figure.Figure` directly, so no
pyplot state or interactive backend is involved, and files are written
without timestamps.
"""

from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.4,
    "lines.markersize": 4,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "ccnmdf",
}

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def new_figure(width=4.5, height=None):
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(width, height or width * GOLDEN))
        FigureCanvasAgg(fig)
        ax = fig.add_subplot()
    return fig, ax


def savefig(fig, path):
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "png"
    meta = {"Software": None} if fmt == "png" else {"Date": None} if fmt in ("svg", "pdf") else None
    with mpl.rc_context(STYLE):
        fig.savefig(path, format=fmt, dpi=150, bbox_inches="tight", metadata=meta)
    return path


def plot_error_curves(series, path, ylabel="exact reconstruction error", title=None):
    """One line per entry of ``series``, a mapping ``label -> (ranks, values)``."""
    with mpl.rc_context(STYLE):
        fig, ax = new_figure()
        for label, (ranks, values) in series.items():
            ax.plot(ranks, values, marker="o", label=label)
        ax.set_xlabel("rank K")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
    return savefig(fig, path)


def plot_reports(reports, path, title=None):
    """Exact, curvature corrected and tangent errors from one rank sweep."""
    ok = [r for r in reports if r.failure is None]
    ranks = [r.rank for r in ok]
    series = {
        "exact": (ranks, [r.exact for r in ok]),
        "curvature corrected": (ranks, [r.curvature_corrected for r in ok]),
        "tangent": (ranks, [r.tangent for r in ok]),
    }
    return plot_error_curves(series, path, ylabel="error", title=title)


def plot_objective_trace(fac, path):
    with mpl.rc_context(STYLE):
        fig, ax = new_figure()
        ax.plot(np.arange(1, len(fac.objective_trace) + 1), fac.objective_trace, marker=".")
        ax.set_xlabel("outer iteration")
        ax.set_ylabel("objective")
        ax.set_title(f"{fac.method}, K = {fac.rank}")
        fig.tight_layout()
    return savefig(fig, path)


def plot_scan(scan, path):
    """Log-log plot of the two error gaps against the tangent error."""
    rows = scan.rows
    with mpl.rc_context(STYLE):
        fig, ax = new_figure()
        ax.loglog(rows[:, 3], rows[:, 4], marker="o",
                  label=f"|exact² − cc²|, slope {scan.cc_slope:.2f}")
        ax.loglog(rows[:, 3], rows[:, 5], marker="s",
                  label=f"|exact² − tangent²|, slope {scan.tangent_slope:.2f}")
        ax.set_xlabel("tangent residual ε")
        ax.set_ylabel("gap")
        ax.legend(frameon=False)
        fig.tight_layout()
    return savefig(fig, path)
