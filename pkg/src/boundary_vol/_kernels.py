"""Vectorised kernels shared by the samplers and Monte Carlo estimators.

All area functionals use the left-endpoint Riemann sum: a row of ``m``
node values ``v_0..v_{m-1}`` stands for a path that is constant on each
cell of width ``1/m``.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError


def brownian_rows(rng: np.random.Generator, rows: int, steps: int, dt: float) -> np.ndarray:
    """Brownian paths started at 0, shape ``(rows, steps + 1)``."""
    out = np.empty((rows, steps + 1))
    out[:, 0] = 0.0
    incr = rng.standard_normal((rows, steps))
    incr *= np.sqrt(dt)
    np.cumsum(incr, axis=1, out=out[:, 1:])
    return out


class SortedRows:
    """Row-wise sorted node values with prefix sums.

    Supports two queries per row in ``O(log m)``: the level ``z`` solving
    ``weight * sum_i (z - v_i)_+ = target`` and the positive-part area
    ``sum_i (v_i + y)_+``.
    """

    def __init__(self, values: np.ndarray):
        self.v = np.sort(np.asarray(values, dtype=float), axis=1)
        self.rows, self.m = self.v.shape
        self.prefix = np.cumsum(self.v, axis=1)
        j = np.arange(1, self.m, dtype=float)
        # gap[:, j-1] = area (unit weight) at z = v_(j+1) with j nodes below
        self.gap = j * self.v[:, 1:] - self.prefix[:, :-1]

    def invert(self, target: np.ndarray, weight: float, scale: float = 1.0) -> np.ndarray:
        """Solve ``weight * sum_i (z - scale*v_i)_+ = target`` row-wise.

        ``target`` has one entry per row. ``scale > 0`` multiplies the
        stored values, which preserves their order.
        """
        t = np.asarray(target, dtype=float) / (weight * scale)
        cnt = 1 + np.sum(self.gap < t[:, None], axis=1)
        rows = np.arange(self.rows)
        z = scale * (t + self.prefix[rows, cnt - 1]) / cnt
        if not np.all(np.isfinite(z)):
            raise NumericError("bin-minimum inversion produced non-finite levels")
        return z

    def invert_many(self, target: np.ndarray, weight: float, scales: np.ndarray) -> np.ndarray:
        """Like :meth:`invert` for several scales at once, shape ``(rows, len(scales))``."""
        scales = np.asarray(scales, dtype=float)
        t = np.asarray(target, dtype=float)[:, None] / (weight * scales[None, :])
        out = np.empty((self.rows, len(scales)))
        for r in range(self.rows):
            cnt = 1 + np.searchsorted(self.gap[r], t[r], side="left")
            out[r] = scales * (t[r] + self.prefix[r, cnt - 1]) / cnt
        if not np.all(np.isfinite(out)):
            raise NumericError("bin-minimum inversion produced non-finite levels")
        return out

    def area_plus(self, y: np.ndarray) -> np.ndarray:
        """``(1/m) sum_i (v_i + y)_+`` for every row and every ``y``.

        ``y`` is either a vector shared by all rows (result ``(rows, len(y))``)
        or a matrix with one row of levels per path.
        """
        y = np.asarray(y, dtype=float)
        shared = y.ndim == 1
        total = self.prefix[:, -1]
        out = np.empty((self.rows, y.shape[-1]))
        for r in range(self.rows):
            yr = y if shared else y[r]
            idx = np.searchsorted(self.v[r], -yr, side="right")
            below = np.where(idx > 0, self.prefix[r, np.maximum(idx - 1, 0)], 0.0)
            out[r] = ((self.m - idx) * yr + (total[r] - below)) / self.m
        return out


def positive_area(rows: np.ndarray, x: float = 0.0) -> np.ndarray:
    """``(1/m) sum_i (v_i + x)_+`` per row."""
    return np.maximum(rows + x, 0.0).mean(axis=1)
