"""Parameter asymptotics: how fast ``u^a`` approaches ``u^o`` as ``a -> o``.

A sweep co-evolves the base solution ``u^o`` (parameters ``o``, data ``u0``)
and, for every ``delta``, the shifted solution ``u^a`` with parameters
``o + delta * direction`` and data ``u0 + delta^gamma * g``. The largest
``H^s`` gap over the shared time mesh is compared with
``max(delta^gamma, delta)``.

Independent ``delta`` points run through :func:`pmap.p_map`; rows are always
assembled in the order of ``cfg.deltas``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from pmap import p_map

from .evolve import BlowUpError, StepperConfig, evolve
from .fitting import fit_loglog
from .kernel import VERTICAL_FILM, PhysicalParams, check_kernel_difference
from .logging_setup import get_logger
from .reports import Cell, ExperimentReport
from .spectral import (
    FourierField,
    SpectralGrid,
    Trajectory,
    make_grid,
    random_band_limited,
    resample,
    sobolev_norm,
)

_logger = get_logger("thinfilm.asymptotics")

DEFAULT_DIRECTION: tuple[float, float, float] = (
    1.0 / math.sqrt(3.0),
    1.0 / math.sqrt(3.0),
    1.0 / math.sqrt(3.0),
)
DEFAULT_DELTAS: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)

MONOTONE_NOISE = 0.10
STABILITY_DRIFT_LIMIT = 0.25
RATE_MARGIN = 0.1
SATURATION_TOLERANCE = 0.2
MIN_FIT_POINTS = 4
MIN_FIT_DECADES = 1.5
KERNEL_CHECK_TIMES = 8

_UNIT_TOL = 1e-9


@dataclass(frozen=True, slots=True, eq=False)
class SweepConfig:
    """One parameter-asymptotics experiment.

    ``perturbation`` is either zero (identical data, kernel-driven gap only)
    or has unit ``H^s`` norm, so the data gap is exactly ``delta^gamma``.
    """

    s: float
    T: float
    gamma: float
    deltas: tuple[float, ...]
    direction: tuple[float, float, float]
    base_data: FourierField
    perturbation: FourierField
    stepper: StepperConfig
    kappa_star: float = 1.0
    base_params: PhysicalParams = VERTICAL_FILM
    concurrency: int = 1

    def __post_init__(self) -> None:
        if not self.s > 1.0:
            raise ValueError(f"s > 1 required, got s={self.s}")
        if not self.T > 0:
            raise ValueError(f"T > 0 required, got T={self.T}")
        if not self.gamma > 0:
            raise ValueError(f"gamma > 0 required, got gamma={self.gamma}")
        if not self.deltas:
            raise ValueError("deltas must be non-empty")
        if any(d < 0 or not math.isfinite(d) for d in self.deltas):
            raise ValueError("deltas must be finite and >= 0")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:], strict=False)):
            raise ValueError("deltas must be strictly decreasing")
        if len(self.direction) != 3:
            raise ValueError("direction must have three components (R, kappa, alpha)")
        if abs(math.hypot(*self.direction) - 1.0) > _UNIT_TOL:
            raise ValueError("direction must be a unit vector")
        if self.direction[1] < 0 or self.direction[2] < 0:
            raise ValueError("direction must have kappa and alpha components >= 0")
        if self.perturbation.grid != self.base_data.grid:
            raise ValueError("base_data and perturbation live on different grids")
        if not self.perturbation.is_zero():
            g = sobolev_norm(self.perturbation, self.s)
            if abs(g - 1.0) > 1e-8:
                raise ValueError(f"perturbation must have unit H^s norm, got {g:.6g}")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        for delta in self.deltas:
            problems = self.params_at(delta).region_violations(self.kappa_star)
            if problems:
                raise ValueError(f"delta={delta:g} leaves Q*: " + "; ".join(problems))

    @property
    def grid(self) -> SpectralGrid:
        return self.base_data.grid

    def params_at(self, delta: float) -> PhysicalParams:
        return self.base_params.shifted(delta, self.direction)


def make_sweep_config(
    grid: SpectralGrid,
    seed: int,
    *,
    gamma: float,
    s: float = 2.0,
    T: float = 0.5,
    deltas: tuple[float, ...] = DEFAULT_DELTAS,
    direction: tuple[float, float, float] = DEFAULT_DIRECTION,
    stepper: StepperConfig | None = None,
    kappa_star: float = 1.0,
    base_params: PhysicalParams = VERTICAL_FILM,
    identical_data: bool = False,
    concurrency: int = 1,
) -> SweepConfig:
    """Seeded base data and perturbation, both band-limited to ``n // 6`` with unit ``H^s`` norm."""

    rng = np.random.default_rng(seed)
    base = random_band_limited(grid, rng, s=s, norm=1.0)
    g = random_band_limited(grid, rng, s=s, norm=1.0)
    if identical_data:
        g = FourierField.zeros(grid)
    return SweepConfig(
        s=s,
        T=T,
        gamma=gamma,
        deltas=tuple(float(d) for d in deltas),
        direction=direction,
        base_data=base,
        perturbation=g,
        stepper=stepper or StepperConfig(),
        kappa_star=kappa_star,
        base_params=base_params,
        concurrency=concurrency,
    )


def make_perturbed_data(cfg: SweepConfig, delta: float) -> FourierField:
    """``u0^a = u0^o + delta^gamma g``; the data gap in ``H^s`` is ``delta^gamma``."""

    if delta < 0:
        raise ValueError(f"delta >= 0 required, got {delta}")
    if delta == 0:
        return cfg.base_data
    return cfg.base_data + cfg.perturbation.scaled(delta**cfg.gamma)


# ----------------------------------------------------------------------------
# Sweep
# ----------------------------------------------------------------------------


def _run(cfg: SweepConfig, u0: FourierField, p: PhysicalParams, delta: float) -> Trajectory:
    try:
        return evolve(u0, cfg.T, p, cfg.stepper)
    except BlowUpError as exc:
        raise BlowUpError(exc.time, context=f"delta={delta:g}") from exc


def _max_gap(a: Trajectory, o: Trajectory, s: float) -> float:
    if a.times != o.times:
        raise ValueError("trajectories were sampled on different time meshes")
    return max(sobolev_norm(ua - uo, s) for (_, ua), (_, uo) in zip(a, o, strict=True))


def _model(delta: float, gamma: float) -> float:
    return max(delta**gamma, delta)


def _is_monotone(errors: list[float]) -> bool:
    return all(b <= a * (1.0 + MONOTONE_NOISE) for a, b in zip(errors, errors[1:], strict=False))


def sweep(cfg: SweepConfig) -> ExperimentReport:
    """Tabulate ``E(delta) = max_t ||u^a(t) - u^o(t)||_{H^s}`` against ``max(delta^gamma, delta)``.

    PASS requires finite gaps, ``E(0) = 0`` when ``0`` is swept, a shrinking
    ``E`` along ``deltas`` and first-order kernel convergence over the same
    ``delta`` and ``t <= T``.
    """

    reference = _run(cfg, cfg.base_data, cfg.base_params, 0.0)

    def _point(delta: float) -> float:
        if delta == 0:
            return 0.0
        traj = _run(cfg, make_perturbed_data(cfg, delta), cfg.params_at(delta), delta)
        gap = _max_gap(traj, reference, cfg.s)
        _logger.debug("sweep:point delta=%g E=%.6e", delta, gap)
        return gap

    errors = p_map(cfg.deltas, _point, concurrency=cfg.concurrency)

    rows: list[tuple[Cell, ...]] = []
    ratios: list[float] = []
    for delta, gap in zip(cfg.deltas, errors, strict=True):
        model = _model(delta, cfg.gamma)
        ratio = gap / model if model > 0 else 0.0
        if model > 0:
            ratios.append(ratio)
        rows.append((delta, cfg.gamma, gap, model, ratio))

    positive = [d for d in cfg.deltas if d > 0]
    times = np.linspace(0.0, cfg.T, KERNEL_CHECK_TIMES + 1)[1:].tolist()
    kernel = (
        check_kernel_difference(cfg.direction, positive, times, cfg.grid, base=cfg.base_params)
        if positive
        else None
    )

    finite = all(math.isfinite(e) for e in errors)
    zero_ok = all(e == 0.0 for d, e in zip(cfg.deltas, errors, strict=True) if d == 0)
    monotone = _is_monotone([e for d, e in zip(cfg.deltas, errors, strict=True) if d > 0])
    kernel_ok = kernel is None or kernel.passed
    C = max(ratios) if ratios else 0.0
    spread = max(ratios) / min(ratios) if ratios and min(ratios) > 0 else math.inf
    passed = finite and zero_ok and monotone and kernel_ok
    _logger.info(
        "sweep:done gamma=%g points=%d C=%.4g monotone=%s kernel_ok=%s",
        cfg.gamma,
        len(rows),
        C,
        monotone,
        kernel_ok,
    )
    return ExperimentReport(
        name="sweep",
        columns=("delta", "gamma", "E", "model", "ratio"),
        rows=tuple(rows),
        passed=passed,
        summary={
            "gamma": cfg.gamma,
            "s": cfg.s,
            "T": cfg.T,
            "direction": list(cfg.direction),
            "C_measured": C,
            "ratio_spread": spread,
            "monotone": monotone,
            "kernel_difference_pass": kernel_ok,
            "kernel_difference_C": kernel.summary["C_measured"] if kernel else 0.0,
            "dt": cfg.stepper.dt,
            "n": cfg.grid.n,
        },
    )


def fit_rate(report: ExperimentReport) -> ExperimentReport:
    """Least-squares slope of ``log E`` against ``log delta`` for a sweep report.

    PASS iff ``slope >= min(gamma, 1) - 0.1`` and, for ``gamma >= 2``, the slope
    sits within ``1 +/- 0.2``.
    """

    gamma = float(report.summary["gamma"])
    pairs = [
        (float(d), float(e))
        for d, e in zip(report.column("delta"), report.column("E"), strict=True)
        if float(d) > 0 and float(e) > 0
    ]
    if len(pairs) < MIN_FIT_POINTS:
        raise ValueError(
            f"degenerate fit: {len(pairs)} usable deltas, at least {MIN_FIT_POINTS} required"
        )
    deltas = [d for d, _ in pairs]
    decades = math.log10(max(deltas) / min(deltas))
    if decades < MIN_FIT_DECADES:
        raise ValueError(
            f"degenerate fit: deltas span {decades:.2f} decades, "
            f"at least {MIN_FIT_DECADES} required"
        )
    fit = fit_loglog(deltas, [e for _, e in pairs], min_points=MIN_FIT_POINTS)
    floor = min(gamma, 1.0) - RATE_MARGIN
    passed = fit.slope >= floor
    if gamma >= 2.0:
        passed = passed and abs(fit.slope - 1.0) <= SATURATION_TOLERANCE
    _logger.info("fit_rate:done gamma=%g slope=%.4f pass=%s", gamma, fit.slope, passed)
    return ExperimentReport(
        name="sweep_fit",
        columns=("delta", "E", "fitted"),
        rows=tuple((d, e, fit.predict(d)) for d, e in pairs),
        passed=passed,
        summary={
            "gamma": gamma,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "residual": fit.residual,
            "pass": passed,
            "C_measured": report.summary["C_measured"],
        },
    )


def refined(cfg: SweepConfig) -> SweepConfig:
    """The same sweep with ``dt`` halved and the grid refined ``n -> 2n``."""

    grid = make_grid(cfg.grid.L, 2 * cfg.grid.n)
    return replace(
        cfg,
        base_data=resample(cfg.base_data, grid),
        perturbation=resample(cfg.perturbation, grid),
        stepper=replace(cfg.stepper, dt=cfg.stepper.dt / 2.0),
    )


def upper_bound_stability(
    cfg: SweepConfig, *, base: ExperimentReport | None = None
) -> ExperimentReport:
    """Compare ``C_measured`` of ``cfg`` with its refined rerun; PASS iff drift <= 25%."""

    first = base if base is not None else sweep(cfg)
    fine_cfg = refined(cfg)
    second = sweep(fine_cfg)
    c1 = float(first.summary["C_measured"])
    c2 = float(second.summary["C_measured"])
    drift = abs(c2 - c1) / c1 if c1 > 0 else (0.0 if c2 == 0 else math.inf)
    passed = drift <= STABILITY_DRIFT_LIMIT
    if not passed:
        _logger.error("upper_bound_stability:drift value=%.3f C=%.4g C_refined=%.4g", drift, c1, c2)
    return ExperimentReport(
        name="sweep_stability",
        columns=("variant", "n", "dt", "C_measured"),
        rows=(
            ("base", cfg.grid.n, cfg.stepper.dt, c1),
            ("refined", fine_cfg.grid.n, fine_cfg.stepper.dt, c2),
        ),
        passed=passed,
        summary={"drift": drift, "limit": STABILITY_DRIFT_LIMIT, "gamma": cfg.gamma},
    )


__all__ = [
    "DEFAULT_DELTAS",
    "DEFAULT_DIRECTION",
    "SweepConfig",
    "fit_rate",
    "make_perturbed_data",
    "make_sweep_config",
    "refined",
    "sweep",
    "upper_bound_stability",
]
