"""Cubic interpolation of masked grid fields, one spline per valid run."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .solver import valid_runs


class RunInterpolator:
    """Piecewise cubic interpolant of a field defined on valid runs.

    Queries inside a run evaluate its spline; queries outside every run are
    flagged so callers can stop trajectories or clamp paths.
    """

    def __init__(self, x: np.ndarray, values: np.ndarray, mask: np.ndarray):
        self.pieces = []
        n = x.size
        for a, b in valid_runs(mask):
            if b < a:  # run wraps the seam: monotone abscissae per side
                for part in (np.arange(a, n), np.arange(0, b + 1)):
                    if part.size >= 2:
                        self.pieces.append(
                            (x[part[0]], x[part[-1]],
                             CubicSpline(x[part], values[part])))
                continue
            if b - a + 1 >= 2:
                self.pieces.append(
                    (x[a], x[b], CubicSpline(x[a:b + 1], values[a:b + 1])))
        if not self.pieces:
            raise ValueError("field has no valid run long enough to interpolate")

    def __call__(self, q):
        """(values, inside) at query positions; values are clamped-run
        evaluations, inside marks queries lying within a run."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.empty_like(q)
        inside = np.zeros(q.shape, dtype=bool)
        done = np.zeros(q.shape, dtype=bool)
        for lo, hi, spl in self.pieces:
            sel = (q >= lo) & (q <= hi) & ~done
            if sel.any():
                out[sel] = spl(q[sel])
                inside[sel] = True
                done[sel] = True
        if not done.all():
            # clamp strays to the nearest run edge (keeps drift evaluations
            # finite; callers decide whether to terminate)
            rest = ~done
            edges = np.array([e for lo, hi, _ in self.pieces for e in (lo, hi)])
            vals = np.array([s(e) for lo, hi, s in self.pieces for e in (lo, hi)])
            nearest = np.argmin(np.abs(q[rest, None] - edges[None, :]), axis=1)
            out[rest] = vals[nearest]
        return out, inside
