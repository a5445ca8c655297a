"""Finite-difference residual probes for the barrier evaluators.

N(t, x, y) = d_t u - Lap u - f(u) is formed from Richardson-extrapolated
central differences of an evaluator around a base point.  Evaluators provide
a `local(t0, x0, y0)` factory returning w(dt, dx, dy); all stencil values
come from that one frame, so the differences stay clean even when the base
coordinates are huge (the barriers live at scale 1/alpha).

Samples whose stencil touches a clip set (value pinned at 0 or 1) are
discarded and counted; the barrier is only piecewise smooth across the clip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ProbeResult:
    residuals: np.ndarray      # one per accepted sample
    points: np.ndarray         # (m, 2 + (N-1)) accepted (t, x..., y)
    n_clipped: int
    n_requested: int


def residual_at(evaluator, f, t0: float, x0: np.ndarray, y0: float,
                h: float = 1e-3, clip_margin: float = 1e-6):
    """Residual of the heat operator at one point, or None when clipped.

    The stencil spans +-h in t, each x axis, and y (at steps h and h/2 for
    one Richardson level); values within clip_margin of 0 or 1 anywhere on
    the stencil disqualify the sample.  Each offset is evaluated exactly once.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    w = evaluator.local(t0, x0, y0)
    d = x0.size

    w0 = w()
    vals = {}
    for lev, step in ((0, h), (1, h / 2.0)):
        vals[("t", lev, +1)] = w(dt=+step)
        vals[("t", lev, -1)] = w(dt=-step)
        vals[("y", lev, +1)] = w(dy=+step)
        vals[("y", lev, -1)] = w(dy=-step)
        for k in range(d):
            dx = np.zeros(d)
            dx[k] = step
            vals[(k, lev, +1)] = w(dx=dx)
            vals[(k, lev, -1)] = w(dx=-dx)
    allv = list(vals.values()) + [w0]
    if min(allv) <= clip_margin or max(allv) >= 1.0 - clip_margin:
        return None

    def first(axis):
        d1h = (vals[(axis, 0, +1)] - vals[(axis, 0, -1)]) / (2.0 * h)
        d1h2 = (vals[(axis, 1, +1)] - vals[(axis, 1, -1)]) / h
        return (4.0 * d1h2 - d1h) / 3.0

    def second(axis):
        d2h = (vals[(axis, 0, +1)] - 2.0 * w0 + vals[(axis, 0, -1)]) / (h * h)
        d2h2 = (vals[(axis, 1, +1)] - 2.0 * w0 + vals[(axis, 1, -1)]) / (0.25 * h * h)
        return (4.0 * d2h2 - d2h) / 3.0

    lap = second("y")
    for k in range(d):
        lap += second(k)
    return first("t") - lap - float(f(w0))


def probe_many(evaluator, f, points, h: float = 1e-3, clip_margin: float = 1e-6) -> ProbeResult:
    """Run `residual_at` over an array of (t, x..., y) rows."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out, kept = [], []
    clipped = 0
    for row in points:
        t0, y0 = row[0], row[-1]
        x0 = row[1:-1]
        r = residual_at(evaluator, f, t0, x0, y0, h=h, clip_margin=clip_margin)
        if r is None:
            clipped += 1
        else:
            out.append(r)
            kept.append(row)
    return ProbeResult(
        residuals=np.asarray(out, dtype=float),
        points=np.asarray(kept, dtype=float) if kept else np.empty((0, points.shape[1])),
        n_clipped=clipped,
        n_requested=points.shape[0],
    )
