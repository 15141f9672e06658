"""Least-squares power-law fits in log-log coordinates."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, slots=True)
class LogLogFit:
    """``log y ~ slope * log x + intercept`` with the RMS residual of the fit."""

    slope: float
    intercept: float
    residual: float
    points: int

    def predict(self, x: float) -> float:
        return math.exp(self.intercept) * x**self.slope


def fit_loglog(x: Sequence[float], y: Sequence[float], *, min_points: int = 3) -> LogLogFit:
    """Fit over the pairs with ``x > 0`` and ``y > 0`` (both finite).

    Raises ``ValueError`` ("degenerate fit") when fewer than ``min_points``
    usable pairs or fewer than two distinct ``x`` values remain.
    """

    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError("x and y differ in length")
    ok = np.isfinite(xs) & np.isfinite(ys) & (xs > 0) & (ys > 0)
    lx = np.log(xs[ok])
    ly = np.log(ys[ok])
    if lx.size < min_points or np.unique(lx).size < 2:
        raise ValueError(
            f"degenerate fit: {lx.size} usable points, at least {min_points} required"
        )
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return LogLogFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=float(np.sqrt(np.mean(resid * resid))),
        points=int(lx.size),
    )


__all__ = ["LogLogFit", "fit_loglog"]
