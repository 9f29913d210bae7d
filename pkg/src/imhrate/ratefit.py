"""Least-squares decay-rate fitting on log-TV tails."""

from __future__ import annotations

import numpy as np

__all__ = ["fit_decay_rate"]


def fit_decay_rate(ts, values, window_start=None, floor=0.0):
    """Fit values ~ C * rate^t over the tail window and return the rate.

    Least squares on log(values) against t, restricted to t >= window_start
    (default: half the horizon) and values > floor. Returns None when fewer
    than two usable points remain.
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(values, dtype=float)
    if window_start is None:
        window_start = ts[-1] / 2.0
    mask = (ts >= window_start) & (vals > floor)
    if mask.sum() < 2:
        return None
    slope = np.polyfit(ts[mask], np.log(vals[mask]), 1)[0]
    return float(np.exp(slope))
