"""Matplotlib rendering for the report path.

Figures sit next to the delimited outputs they visualize; the CSVs remain
the machine-readable artifacts. All rendering uses the Agg backend.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def tv_envelope_figure(path, t, tv, lower=None, upper=None, title="TV to stationarity"):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    t = np.asarray(t, dtype=float)
    tv = np.asarray(tv, dtype=float)
    pos = tv > 0
    ax.semilogy(t[pos], tv[pos], "o-", ms=3, lw=1.2, label="exact TV", color="C0")
    if upper is not None:
        up = np.asarray(upper, dtype=float)
        ax.semilogy(t[up > 0], up[up > 0], "--", lw=1.0, color="C3", label="upper envelope")
    if lower is not None:
        lo = np.asarray(lower, dtype=float)
        ax.semilogy(t[lo > 0], lo[lo > 0], ":", lw=1.0, color="C2", label="lower envelope")
    ax.set_xlabel("step")
    ax.set_ylabel("total variation distance")
    ax.set_title(title)
    ax.legend(frameon=False)
    return _finish(fig, path)


def spectrum_figure(path, eigenvalues, title="Kernel spectrum"):
    lams = np.asarray(eigenvalues, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.stem(np.arange(lams.size), lams)
    ax.set_xlabel("index k")
    ax.set_ylabel("eigenvalue")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(title)
    return _finish(fig, path)


def meeting_time_figure(path, times, counts, wstar, title="Coupling meeting times"):
    times = np.asarray(times, dtype=float)
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.bar(times, counts / total, width=0.8, alpha=0.6, label="empirical")
    p = 1.0 / wstar
    ax.plot(times, p * (1 - p) ** (times - 1), "k.-", ms=4, lw=1.0,
            label="geometric(1/w*)")
    ax.set_xlabel("meeting time")
    ax.set_ylabel("frequency")
    ax.set_title(title)
    ax.legend(frameon=False)
    return _finish(fig, path)


def steps_curve_figure(path, x, series, xlabel, title, loglog=False):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    plot = ax.loglog if loglog else ax.semilogy
    for name, ys in series.items():
        plot(np.asarray(x, dtype=float), np.asarray(ys, dtype=float), "o-", ms=3,
             lw=1.2, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("steps to 1% accuracy")
    ax.set_title(title)
    if len(series) > 1:
        ax.legend(frameon=False)
    return _finish(fig, path)
