"""Time evolution of the mild solution and the diagnostics built on it.

Two independent solver paths integrate ``u_t + f(D) u = -1/2 d_x1 (u^2)``:

- :func:`etd_step` / :func:`evolve`: a second-order exponential time
  differencing scheme (``phi1`` predictor, ``phi2`` corrector). The linear part
  is exact per mode, so stiffness from ``|xi|^4`` never limits ``dt``.
- :func:`picard_solve`: the Duhamel fixed-point iteration on a fixed mesh,
  with composite Gauss-Legendre quadrature in the convolution variable. It is
  kept as a validation oracle.

Diagnostics: :class:`EnergyLog` and :func:`energy_check` verify the Gronwall
bound driven by ``C_low``; :func:`smoothing_profile` tabulates the parabolic
gain ``t^{(sigma-s)/4} ||u(t)||_{H^sigma}``; :func:`check_nonlinear_estimate`
measures how the Duhamel term of a linear flow scales with the horizon.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .fitting import fit_loglog
from .kernel import (
    ESTIMATE_EXPONENT_SLACK,
    HighFreqBound,
    PhysicalParams,
    apply_semigroup,
    measured_kernel_constant,
    symbol_on_grid,
)
from .logging_setup import get_logger
from .phi import phi1, phi2
from .reports import Cell, ExperimentReport
from .spectral import (
    FourierField,
    SpectralGrid,
    Trajectory,
    et_norm,
    lebesgue2_norm,
    sobolev_norm,
)

_logger = get_logger("thinfilm.evolve")

PICARD_GROWTH_STREAK = 3
PICARD_MIN_INTERVALS = 32
SMOOTHING_SPREAD_LIMIT = 10.0


class BlowUpError(RuntimeError):
    """Raised when a state stops being finite; carries the first bad time."""

    def __init__(self, time: float, context: str = "") -> None:
        self.time = time
        self.context = context
        where = f" ({context})" if context else ""
        super().__init__(f"non-finite state at t={time:.6g}{where}")


class PicardDivergenceError(RuntimeError):
    """Raised when the Duhamel iteration stops contracting on ``[0, T]``."""

    def __init__(self, horizon: float, sweeps: int, reason: str) -> None:
        self.horizon = horizon
        self.sweeps = sweeps
        super().__init__(
            f"Picard iteration failed on T={horizon:.6g} after {sweeps} sweeps: {reason}"
        )


@dataclass(frozen=True, slots=True)
class StepperConfig:
    dt: float = 1.0 / 512
    dealias_fraction: float = 2.0 / 3.0
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    duhamel_nodes: int = 4
    save_every: int = 1
    nonlinear: bool = True

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt > 0 required, got {self.dt}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        if not self.picard_tol > 0:
            raise ValueError(f"picard_tol > 0 required, got {self.picard_tol}")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")
        if self.duhamel_nodes < 1:
            raise ValueError("duhamel_nodes must be >= 1")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")


# ----------------------------------------------------------------------------
# Nonlinearity and one step
# ----------------------------------------------------------------------------


def _nonlinear_coeffs(c: NDArray[np.complex128], grid: SpectralGrid, fraction: float) -> NDArray:
    keep = grid.dealias_mask(fraction)
    u = np.fft.ifft2(np.where(keep, c, 0.0), norm="forward").real
    sq = np.fft.fft2(u * u, norm="forward")
    out = np.where(keep, -0.5j * grid.xi1_derivative * sq, 0.0)
    out[0, 0] = 0.0
    return out


def nonlinear_term(u: FourierField, cfg: StepperConfig) -> FourierField:
    """Coefficients of ``-1/2 d_x1 (u^2)`` with the dealiasing rule of ``cfg``."""

    return u.with_coeffs(_nonlinear_coeffs(u.coeffs, u.grid, cfg.dealias_fraction))


@lru_cache(maxsize=16)
def _etd_weights(
    grid: SpectralGrid, p: PhysicalParams, dt: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    z = -symbol_on_grid(grid, p) * dt
    weights = (np.exp(z), dt * phi1(z), dt * phi2(z))
    for w in weights:
        w.flags.writeable = False
    return weights


def _etd_coeffs(
    c: NDArray[np.complex128],
    grid: SpectralGrid,
    p: PhysicalParams,
    dt: float,
    cfg: StepperConfig,
) -> NDArray[np.complex128]:
    decay, w1, w2 = _etd_weights(grid, p, dt)
    if not cfg.nonlinear:
        return decay * c
    n0 = _nonlinear_coeffs(c, grid, cfg.dealias_fraction)
    a = decay * c + w1 * n0
    na = _nonlinear_coeffs(a, grid, cfg.dealias_fraction)
    return a + w2 * (na - n0)


def etd_step(u: FourierField, dt: float, p: PhysicalParams, cfg: StepperConfig) -> FourierField:
    """Advance ``u`` by ``dt <= 1`` with the second-order exponential integrator."""

    if not 0.0 < dt <= 1.0:
        raise ValueError(f"dt must lie in (0, 1], got {dt}")
    return u.with_coeffs(_etd_coeffs(u.coeffs, u.grid, p, float(dt), cfg))


def evolve(u0: FourierField, T: float, p: PhysicalParams, cfg: StepperConfig) -> Trajectory:
    """Integrate to ``T`` with ``etd_step``, saving every ``cfg.save_every`` steps and at ``T``.

    Growth is allowed; only non-finite states abort with :class:`BlowUpError`.
    """

    if not T > 0:
        raise ValueError(f"T > 0 required, got {T}")
    dt = min(cfg.dt, 1.0)
    steps = max(1, math.ceil(T / dt - 1e-9))
    grid = u0.grid
    c = np.array(u0.coeffs)
    times = [0.0]
    states = [u0]
    t = 0.0
    for k in range(1, steps + 1):
        h = dt if k < steps else T - (steps - 1) * dt
        c = _etd_coeffs(c, grid, p, h, cfg)
        t = T if k == steps else k * dt
        if not np.all(np.isfinite(c)):
            _logger.error("evolve:blowup t=%.6g step=%d", t, k)
            raise BlowUpError(t)
        if k % cfg.save_every == 0 or k == steps:
            times.append(t)
            states.append(u0.with_coeffs(c))
    _logger.debug(
        "evolve:done steps=%d t_final=%.6g l2=%.6e", steps, t, lebesgue2_norm(states[-1])
    )
    return Trajectory(tuple(times), tuple(states), p, {"steps": steps, "dt": dt})


def linear_trajectory(
    u0: FourierField, times: Sequence[float], p: PhysicalParams
) -> Trajectory:
    """Exact linear flow ``K(t) u0`` sampled at ``0`` and the given positive ``times``."""

    ts = sorted({0.0, *(float(t) for t in times)})
    if ts[0] < 0:
        raise ValueError("times must be non-negative")
    return Trajectory(
        tuple(ts), tuple(apply_semigroup(u0, t, p) for t in ts), p, {"linear": True}
    )


# ----------------------------------------------------------------------------
# Picard iteration
# ----------------------------------------------------------------------------


def local_existence_time(u0_norm: float, s: float, s1: float | None, C: float) -> float:
    """``T0 = min(1, (8 C ||u0||)^{-4/(s+2)})``; the exponent uses ``s1`` when ``s > 0``."""

    if s <= -2.0:
        raise ValueError(f"s > -2 required, got s={s}")
    if s > 0.0:
        if s1 is None or not -2.0 < s1 <= 0.0:
            raise ValueError(f"s > 0 requires s1 in (-2, 0], got s1={s1}")
        exponent = 4.0 / (s1 + 2.0)
    else:
        exponent = 4.0 / (s + 2.0)
    base = 8.0 * C * u0_norm
    if base <= 0.0:
        return 1.0
    return min(1.0, base ** (-exponent))


def _duhamel_weights(
    grid: SpectralGrid, p: PhysicalParams, h: float, intervals: int, nodes: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Quadrature weights for ``int_{t_j}^{t_j+h} K(t_i - tau) N(tau) dtau``.

    ``N`` is linear in ``tau`` on each interval, so the integral over a
    lag ``d = i - j`` is ``W0[d] * N_j + W1[d] * N_{j+1}``.
    """

    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * (x + 1.0)
    w = 0.5 * w
    f = symbol_on_grid(grid, p)
    W0 = np.zeros((intervals + 1, *grid.shape))
    W1 = np.zeros_like(W0)
    for d in range(1, intervals + 1):
        for th, wq in zip(theta, w, strict=True):
            ker = np.exp(-f * (d - th) * h)
            W0[d] += h * wq * (1.0 - th) * ker
            W1[d] += h * wq * th * ker
    return W0, W1


def _duhamel_sum(
    N: NDArray[np.complex128], W0: NDArray[np.float64], W1: NDArray[np.float64]
) -> NDArray[np.complex128]:
    """``int_0^{t_i} K(t_i - tau) N(tau) dtau`` at every mesh point ``t_i``."""

    out = np.zeros_like(N)
    for i in range(1, N.shape[0]):
        lags = np.arange(i, 0, -1)
        out[i] = np.sum(W0[lags] * N[:i] + W1[lags] * N[1 : i + 1], axis=0)
    return out


def picard_solve(
    u0: FourierField,
    T: float,
    p: PhysicalParams,
    cfg: StepperConfig,
    *,
    s: float = 0.0,
    s1: float | None = None,
    C: float | None = None,
    override_existence_time: bool = False,
) -> Trajectory:
    """Fixed point of the Duhamel map on the uniform mesh of ``[0, T]``.

    The mesh spacing is ``cfg.dt`` (at least 32 intervals). Iterates start at
    ``K(t) u0`` and stop once successive iterates differ by less than
    ``picard_tol`` relative to the discrete ``E_T`` norm of the iterate.
    ``T`` must not exceed :func:`local_existence_time` unless overridden; ``C``
    defaults to the measured ``lambda = 1`` kernel constant.
    """

    if not T > 0:
        raise ValueError(f"T > 0 required, got {T}")
    grid = u0.grid
    if C is None:
        C = measured_kernel_constant(p, grid)
    T0 = local_existence_time(sobolev_norm(u0, s), s, s1, C)
    if T > T0:
        if not override_existence_time:
            raise ValueError(
                f"T={T:.6g} exceeds the local existence time T0={T0:.6g} (C={C:.6g})"
            )
        _logger.warning("picard_solve:override T=%.6g T0=%.6g", T, T0)

    intervals = max(PICARD_MIN_INTERVALS, math.ceil(T / cfg.dt - 1e-9))
    h = T / intervals
    times = tuple(j * h for j in range(intervals)) + (T,)
    f = symbol_on_grid(grid, p)
    linear = np.stack([np.exp(-f * t) * u0.coeffs for t in times])
    W0, W1 = _duhamel_weights(grid, p, h, intervals, cfg.duhamel_nodes)

    current = linear
    last_gap = math.inf
    streak = 0
    for sweep in range(1, cfg.picard_max_iter + 1):
        N = np.stack([_nonlinear_coeffs(c, grid, cfg.dealias_fraction) for c in current])
        nxt = linear + _duhamel_sum(N, W0, W1)
        if not np.all(np.isfinite(nxt)):
            raise PicardDivergenceError(T, sweep, "non-finite iterate")
        gap = et_norm(_sampled(u0, times, nxt - current), s, s1)
        size = et_norm(_sampled(u0, times, nxt), s, s1)
        current = nxt
        _logger.debug("picard_solve:sweep n=%d gap=%.3e size=%.3e", sweep, gap, size)
        if gap <= cfg.picard_tol * size:
            _logger.info("picard_solve:converged sweeps=%d T=%.6g T0=%.6g", sweep, T, T0)
            return Trajectory(
                times,
                tuple(u for _, u in _sampled(u0, times, current)),
                p,
                {"sweeps": sweep, "gap": gap, "T0": T0, "C": C, "intervals": intervals},
            )
        streak = streak + 1 if gap > last_gap else 0
        if streak >= PICARD_GROWTH_STREAK:
            raise PicardDivergenceError(T, sweep, "iterate differences grew 3 sweeps in a row")
        last_gap = gap
    raise PicardDivergenceError(T, cfg.picard_max_iter, "tolerance not reached")


def linear_regime_time(grid: SpectralGrid, p: PhysicalParams, cfg: StepperConfig) -> float:
    """``1 / max f`` over the dealiased modes.

    Below it no resolved mode has saturated, so Duhamel terms still show their
    small-``T`` power law; above it the stiff modes flatten the log-log slope.
    """

    f = symbol_on_grid(grid, p)[grid.dealias_mask(cfg.dealias_fraction)]
    return 1.0 / float(np.max(f))


def _sampled(
    like: FourierField, times: Sequence[float], stack: NDArray[np.complex128]
) -> list[tuple[float, FourierField]]:
    return [(t, like.with_coeffs(c)) for t, c in zip(times, stack, strict=True)]


def check_nonlinear_estimate(
    p: PhysicalParams,
    fields: Sequence[FourierField],
    horizons: Sequence[float],
    cfg: StepperConfig,
    *,
    s: float = 0.0,
    s1: float | None = None,
    intervals: int = PICARD_MIN_INTERVALS,
) -> ExperimentReport:
    """Duhamel term of ``u = K(t) phi`` against ``||u||_{E_T}^2`` per horizon ``T``.

    The ratio ``||int_0^t K(t - tau) N(u(tau)) dtau||_{E_T} / ||u||_{E_T}^2``
    must shrink like ``T^{(s+2)/4}`` (``s1`` replaces ``s`` when ``s > 0``):
    PASS iff, per field, its log-log slope against ``T`` reaches that exponent
    less 0.1. ``C`` is the largest ``ratio / T^{(s+2)/4}``. Keep ``horizons``
    below :func:`linear_regime_time`.
    """

    if not fields:
        raise ValueError("at least one field required")
    horizons = sorted(float(T) for T in horizons)
    if len(horizons) < 3 or horizons[0] <= 0:
        raise ValueError("need at least three strictly positive horizons")
    if intervals < 2:
        raise ValueError("intervals must be >= 2")
    if s > 0.0 and s1 is None:
        raise ValueError("s > 0 requires an auxiliary index s1")
    exponent = ((s1 if s1 is not None else s) + 2.0) / 4.0
    grid = fields[0].grid
    f = symbol_on_grid(grid, p)
    rows: list[tuple[Cell, ...]] = []
    slopes: list[float] = []
    C = 0.0
    for idx, phi in enumerate(fields):
        ratios: list[float] = []
        for T in horizons:
            h = T / intervals
            times = [j * h for j in range(intervals)] + [T]
            linear = np.stack([np.exp(-f * t) * phi.coeffs for t in times])
            N = np.stack([_nonlinear_coeffs(c, grid, cfg.dealias_fraction) for c in linear])
            W0, W1 = _duhamel_weights(grid, p, h, intervals, cfg.duhamel_nodes)
            duhamel = _duhamel_sum(N, W0, W1)
            u_norm = et_norm(_sampled(phi, times, linear), s, s1)
            d_norm = et_norm(_sampled(phi, times, duhamel), s, s1)
            if u_norm == 0:
                raise ValueError(f"field {idx} is zero")
            ratio = d_norm / u_norm**2
            C = max(C, ratio / T**exponent)
            ratios.append(ratio)
            rows.append((idx, T, d_norm, u_norm, ratio))
        slopes.append(fit_loglog(horizons, ratios).slope)
    passed = math.isfinite(C) and min(slopes) >= exponent - ESTIMATE_EXPONENT_SLACK
    if not passed:
        _logger.warning("nonlinear_estimate:fail C=%g min_slope=%.3f", C, min(slopes))
    return ExperimentReport(
        name="nonlinear_estimate",
        columns=("field", "T", "duhamel_norm", "et_norm", "ratio"),
        rows=tuple(rows),
        passed=passed,
        summary={"C": C, "exponent": exponent, "slopes": slopes, "s": s, "s1": s1},
    )


def solver_agreement(
    reference: Trajectory, other: Trajectory, s: float, *, tol: float
) -> ExperimentReport:
    """``H^s`` gap between two solver paths at the sample times they share.

    Times match when they agree to ``1e-12``; PASS iff every gap is within ``tol``.
    """

    if reference.grid != other.grid:
        raise ValueError("trajectories live on different grids")
    lookup = dict(other)
    rows: list[tuple[Cell, ...]] = []
    for t, u in reference:
        match = next((v for tv, v in lookup.items() if abs(tv - t) <= 1e-12), None)
        if match is None:
            continue
        gap = sobolev_norm(u - match, s)
        rows.append((t, gap, sobolev_norm(u, s), gap <= tol))
    if not rows:
        raise ValueError("trajectories share no sample times")
    worst = max(float(r[1]) for r in rows)
    return ExperimentReport(
        name="solver_agreement",
        columns=("t", "gap", "norm", "pass"),
        rows=tuple(rows),
        passed=all(bool(r[-1]) for r in rows),
        summary={"s": s, "tolerance": tol, "max_gap": worst, "shared_times": len(rows)},
    )


# ----------------------------------------------------------------------------
# Energy and smoothing diagnostics
# ----------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EnergyLog:
    """``||u(t)||_{L^2}^2`` per sample with its discrete time derivative."""

    times: tuple[float, ...]
    l2sq: tuple[float, ...]
    dl2sq_dt: tuple[float, ...]
    C_low: float

    def __post_init__(self) -> None:
        if not (len(self.times) == len(self.l2sq) == len(self.dl2sq_dt)):
            raise ValueError("energy log columns differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:], strict=False)):
            raise ValueError("energy log times must be increasing")

    @classmethod
    def from_trajectory(cls, traj: Trajectory, bound: HighFreqBound) -> EnergyLog:
        times = np.asarray(traj.times)
        l2sq = np.array([lebesgue2_norm(u) ** 2 for u in traj.states])
        deriv = np.gradient(l2sq, times) if len(times) > 1 else np.zeros(1)
        return cls(tuple(times.tolist()), tuple(l2sq.tolist()), tuple(deriv.tolist()), bound.C_low)

    def report(self) -> ExperimentReport:
        rows = tuple(
            (t, e, d, 2.0 * self.C_low * e - d)
            for t, e, d in zip(self.times, self.l2sq, self.dl2sq_dt, strict=True)
        )
        return ExperimentReport(
            name="energy_log",
            columns=("t", "l2sq", "dl2sq_dt", "bound_margin"),
            rows=rows,
            passed=True,
            summary={"C_low": self.C_low},
        )


def energy_check(log: EnergyLog, bound: HighFreqBound, *, rtol: float = 1e-8) -> ExperimentReport:
    """Check ``l2sq(t) <= exp(2 C_low (t - t0)) l2sq(t0)`` for every sampled ``t0 < t``."""

    if not log.times:
        raise ValueError("energy log is empty")
    rate = 2.0 * bound.C_low
    rows: list[tuple[Cell, ...]] = []
    worst = math.inf
    for i, (t0, e0) in enumerate(zip(log.times, log.l2sq, strict=True)):
        for j in range(i + 1, len(log.times)):
            t, e = log.times[j], log.l2sq[j]
            rhs = math.exp(rate * (t - t0)) * e0
            margin = (rhs - e) / rhs if rhs > 0 else (0.0 if e == 0 else -math.inf)
            ok = e <= rhs * (1.0 + rtol)
            worst = min(worst, margin)
            rows.append((t0, t, e, rhs, margin, ok))
    passed = all(bool(r[-1]) for r in rows)
    if not passed:
        _logger.error("energy_check:violation worst_margin=%.3e C_low=%g", worst, bound.C_low)
    return ExperimentReport(
        name="energy_check",
        columns=("t0", "t", "lhs", "rhs", "margin", "pass"),
        rows=tuple(rows),
        passed=passed,
        summary={"worst_margin": worst if rows else 0.0, "C_low": bound.C_low, "pairs": len(rows)},
    )


def smoothing_profile(traj: Trajectory, s: float, sigma: float) -> ExperimentReport:
    """``t^{(sigma-s)/4} ||u(t)||_{H^sigma}`` for ``t > 0``; PASS iff max/min stays below 10."""

    if not sigma > s:
        raise ValueError(f"sigma > s required, got sigma={sigma}, s={s}")
    power = (sigma - s) / 4.0
    rows: list[tuple[Cell, ...]] = []
    for t, u in traj:
        if t <= 0:
            continue
        norm = sobolev_norm(u, sigma)
        rows.append((t, norm, t**power * norm))
    weighted = [float(r[2]) for r in rows]
    if not weighted:
        raise ValueError("trajectory has no positive sample times")
    lo, hi = min(weighted), max(weighted)
    spread = hi / lo if lo > 0 else (1.0 if hi == 0 else math.inf)
    return ExperimentReport(
        name="smoothing_profile",
        columns=("t", "norm_sigma", "weighted"),
        rows=tuple(rows),
        passed=math.isfinite(hi) and spread < SMOOTHING_SPREAD_LIMIT,
        summary={"s": s, "sigma": sigma, "max": hi, "min": lo, "spread": spread},
    )


__all__ = [
    "BlowUpError",
    "EnergyLog",
    "PicardDivergenceError",
    "StepperConfig",
    "check_nonlinear_estimate",
    "energy_check",
    "etd_step",
    "evolve",
    "linear_trajectory",
    "linear_regime_time",
    "local_existence_time",
    "nonlinear_term",
    "picard_solve",
    "smoothing_profile",
    "solver_agreement",
]
