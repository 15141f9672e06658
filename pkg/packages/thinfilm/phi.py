"""Exponential-integrator weights and stable exponential divided differences.

``phi1(z) = (e^z - 1)/z`` and ``phi2(z) = (e^z - 1 - z)/z^2`` switch to their
Taylor series near ``z = 0`` where the closed forms cancel catastrophically.
``exp_divided_difference(a, b, t)`` evaluates ``(e^{at} - e^{bt})/(a - b)``
without overflow or cancellation.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

SERIES_TERMS = 8
PHI1_SERIES_RADIUS = 1e-4
PHI2_SERIES_RADIUS = 1e-2
RESONANCE_THRESHOLD = 1e-8


def _phi_series(z: NDArray[np.float64], order: int) -> NDArray[np.float64]:
    # sum_{j>=0} z^j / (j + order)!, Horner form
    out = np.full_like(z, 1.0 / math.factorial(SERIES_TERMS - 1 + order))
    for j in range(SERIES_TERMS - 2, -1, -1):
        out = out * z + 1.0 / math.factorial(j + order)
    return out


def phi1(z: ArrayLike) -> NDArray[np.float64]:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = np.abs(z) < PHI1_SERIES_RADIUS
    out[small] = _phi_series(z[small], 1)
    big = ~small
    out[big] = np.expm1(z[big]) / z[big]
    return out


def phi2(z: ArrayLike) -> NDArray[np.float64]:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = np.abs(z) < PHI2_SERIES_RADIUS
    out[small] = _phi_series(z[small], 2)
    big = ~small
    zb = z[big]
    out[big] = (np.expm1(zb) - zb) / (zb * zb)
    return out


def exp_divided_difference(a: ArrayLike, b: ArrayLike, t: float) -> NDArray[np.float64]:
    """``(e^{a t} - e^{b t}) / (a - b)``, elementwise, with the ``a == b`` limit ``t e^{a t}``.

    Written as ``t * e^{hi t} * phi1((lo - hi) t)`` so the exponential factor
    never exceeds ``e^{hi t}`` and ``expm1`` only sees non-positive arguments.
    Pairs with ``|a - b| < 1e-8 * max(|a|, |b|, 1)`` use the ``phi1`` series.
    """

    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if t == 0.0:
        return np.zeros(np.broadcast(a, b).shape, dtype=np.float64)
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    z = (lo - hi) * t
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    resonant = (hi - lo) < RESONANCE_THRESHOLD * scale
    weight = np.empty(np.broadcast(a, b).shape, dtype=np.float64)
    weight[resonant] = _phi_series(z[resonant], 1)
    off = ~resonant
    weight[off] = np.expm1(z[off]) / z[off]
    return t * np.exp(hi * t) * weight


__all__ = ["exp_divided_difference", "phi1", "phi2"]
