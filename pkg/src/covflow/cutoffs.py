"""Smooth compactly supported cutoffs built from the exp(-1/s) bump."""

from __future__ import annotations

import numpy as np


def smoothstep(s):
    """C-infinity monotone step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        up = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        down = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return up / (up + down)


def radial_plateau(r, inner: float, outer: float):
    """1 for r <= inner, 0 for r >= outer, smooth monotone in between."""
    if not 0.0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - inner) / (outer - inner))


def time_window(t, rate: float):
    """1 on [1/rate, 1-1/rate], 0 outside [1/(2 rate), 1-1/(2 rate)], smooth."""
    if rate <= 2.0:
        raise ValueError("window rate must exceed 2 so the plateau is nonempty")
    lo, hi = 1.0 / (2.0 * rate), 1.0 / rate
    t = np.asarray(t, dtype=float)
    ramp_up = smoothstep((t - lo) / (hi - lo))
    ramp_down = smoothstep(((1.0 - t) - lo) / (hi - lo))
    return ramp_up * ramp_down


__all__ = ["radial_plateau", "smoothstep", "time_window"]
