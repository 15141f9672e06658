"""Experiment orchestration: one validated :class:`RunConfig` in, artifacts out.

:func:`run` dispatches on ``config.experiment``, writes CSV/JSON artifacts
through :class:`~thinfilm.reports.ArtifactWriter` and returns a
:class:`RunOutcome`. Exit codes: ``0`` PASS, ``2`` experiment FAIL, ``1``
operational error (bad input, I/O, solver blow-up or Picard divergence).
A blow-up additionally leaves ``blowup.json`` in the run directory.

Output directory resolution: explicit ``out_dir`` argument, then
``config.out_dir``, then ``$THINFILM_OUT_DIR/<experiment>-<hash12>``, then
``./runs/<experiment>-<hash12>``.
"""

from __future__ import annotations

import contextlib
import os
from collections.abc import Callable
from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
from pmap import default_concurrency, p_map

from .asymptotics import (
    DEFAULT_DIRECTION,
    fit_rate,
    make_sweep_config,
    sweep,
    upper_bound_stability,
)
from .checkpoint import encode_snapshots
from .config import RunConfig, config_hash, resolved_payload
from .evolve import (
    BlowUpError,
    EnergyLog,
    PicardDivergenceError,
    check_nonlinear_estimate,
    energy_check,
    evolve,
    linear_trajectory,
    linear_regime_time,
    picard_solve,
    smoothing_profile,
    solver_agreement,
)
from .illposed import (
    IllposedConfig,
    check_support,
    inflation_slope,
    quadrature_agreement,
    sized_grid,
)
from .kernel import (
    HighFreqBound,
    check_kernel_difference,
    check_kernel_sup_bound,
    check_linear_estimate,
    check_semigroup_lipschitz,
    check_semigroup_smoothing,
    high_freq_bound,
)
from .logging_setup import get_logger
from .models import ArtifactMeta
from .reports import ArtifactWriter, merge_reports
from .spectral import Trajectory, random_band_limited, rough_field

_logger = get_logger("thinfilm.api")

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

OUT_DIR_ENV = "THINFILM_OUT_DIR"
CONCURRENCY_ENV = "THINFILM_CONCURRENCY"

ESTIMATE_HORIZON_FRACTIONS = (0.125, 0.25, 0.5, 1.0)


@dataclass(frozen=True, slots=True)
class RunOutcome:
    """What a run left behind; ``passed`` is ``None`` when the run errored out."""

    exit_code: int
    out_dir: Path
    artifacts: tuple[str, ...]
    passed: bool | None
    error: str | None = None


def code_version() -> str:
    """Installed ``thinfilm`` version, stamped into every artifact header."""

    try:
        return version("thinfilm")
    except PackageNotFoundError:
        return "0+unknown"


def resolve_out_dir(config: RunConfig, out_dir: Path | None, digest: str) -> Path:
    """Run directory by precedence: ``out_dir``, ``config.out_dir``, then the env root."""

    if out_dir is not None:
        return Path(out_dir)
    if config.out_dir:
        return Path(config.out_dir)
    root = os.getenv(OUT_DIR_ENV, "").strip()
    name = f"{config.experiment}-{digest[:12]}"
    return Path(root) / name if root else Path("runs") / name


def _bound_payload(bound: HighFreqBound) -> dict[str, object]:
    return {
        "M": bound.M,
        "eta": bound.eta,
        "C_low": bound.C_low,
        "violations": bound.violations,
        "checked_modes": bound.checked_modes,
        "certified": bound.certified,
    }


def _emit_fields(config: RunConfig, writer: ArtifactWriter, traj: Trajectory) -> None:
    if config.emit_fields:
        writer.write_binary("fields.tfbin", encode_snapshots(traj, meta=writer.meta))


# ----------------------------------------------------------------------------
# Experiments; each returns its PASS verdict
# ----------------------------------------------------------------------------


def _simulate(config: RunConfig, writer: ArtifactWriter) -> bool:
    block = config.simulate
    grid = config.grid.to_grid()
    p = config.params.to_params()
    if block.data == "rough":
        u0 = rough_field(grid, block.data_s, norm=block.data_norm)
    else:
        rng = np.random.default_rng(config.seed)
        u0 = random_band_limited(grid, rng, band=block.band, s=block.data_s, norm=block.data_norm)
    if block.linear:
        times = np.geomspace(block.t_min, block.T, block.samples).tolist()
        traj = linear_trajectory(u0, times, p)
    else:
        traj = evolve(u0, block.T, p, config.stepper.to_stepper())

    bound = high_freq_bound(p, block.margin, grid)
    log = EnergyLog.from_trajectory(traj, bound)
    energy = energy_check(log, bound, rtol=block.energy_rtol)
    smoothing = smoothing_profile(traj, block.data_s, block.sigma)
    means = np.array([u.coeffs[0, 0] for u in traj.states])
    drift = float(np.max(np.abs(means - means[0])))
    mean_ok = drift <= block.mean_tol
    smoothing_ok = smoothing.passed or block.data != "rough"
    passed = bound.certified and energy.passed and mean_ok and smoothing_ok

    writer.write_csv("energy_log.csv", log.report())
    writer.write_csv("energy_check.csv", energy)
    writer.write_csv("smoothing.csv", smoothing)
    writer.write_json(
        "simulate.json",
        {
            "pass": passed,
            "samples": len(traj),
            "T": block.T,
            "linear": block.linear,
            "data": block.data,
            "mean_drift": drift,
            "mean_ok": mean_ok,
            "energy": energy.to_json_payload(),
            "smoothing": smoothing.to_json_payload(),
            "bound": _bound_payload(bound),
        },
    )
    _emit_fields(config, writer, traj)
    return passed


def _kernel_check(config: RunConfig, writer: ArtifactWriter) -> bool:
    """Symbol split, sup bounds per lambda, difference, smoothing and linear estimate."""

    block = config.kernel_check
    grid = config.experiment_grid()
    p = config.params.to_params()
    times = np.geomspace(block.t_min, block.t_max, block.samples).tolist()

    bound = high_freq_bound(p, block.margin, grid)
    sups = p_map(
        block.lambdas,
        lambda lam: check_kernel_sup_bound(
            p, lam, times, grid, declared_C=block.declared_C, refine=block.refine
        ),
        concurrency=default_concurrency(CONCURRENCY_ENV),
    )
    sup = merge_reports("kernel_sup", sups, key="lambdas")

    direction = tuple(block.direction) if block.direction else DEFAULT_DIRECTION
    diff_times = np.linspace(0.0, block.difference_t_max, 9)[1:].tolist()
    difference = check_kernel_difference(direction, block.deltas, diff_times, grid, base=p)

    rng = np.random.default_rng(config.seed)
    fields = [
        random_band_limited(grid, rng, band=grid.n // 4, s=block.smoothing_s)
        for _ in range(block.smoothing_fields)
    ]
    smoothing = check_semigroup_smoothing(p, block.smoothing_s, fields, times)
    lipschitz_times = np.geomspace(
        max(0.1 * block.t_max, block.t_min), block.t_max, 6
    ).tolist()
    lipschitz = check_semigroup_lipschitz(p, block.smoothing_s, 1.0, fields[0], lipschitz_times)
    linear = check_linear_estimate(
        p,
        block.smoothing_s,
        fields,
        block.estimate_horizons,
        s1=block.estimate_s1 if block.smoothing_s > 0 else None,
    )

    reports = (sup, difference, smoothing, lipschitz, linear)
    passed = bound.certified and all(r.passed for r in reports)
    for rep in reports:
        writer.write_csv(f"{rep.name}.csv", rep)
    writer.write_json(
        "kernel_check.json",
        {
            "pass": passed,
            "high_freq_bound": _bound_payload(bound),
            **{rep.name: rep.to_json_payload() for rep in reports},
        },
    )
    return passed


def _illposed(config: RunConfig, writer: ArtifactWriter) -> bool:
    block = config.illposed
    p = config.params.to_params()
    template = block.template()
    slope = inflation_slope(block.Ns, template, p, tolerance=block.tolerance)
    support = check_support(block.Ns, template, p)

    summary: dict[str, object] = {}
    quad_ok = True
    if block.check_quadrature:
        N = min(block.Ns)
        qcfg = IllposedConfig(
            grid=sized_grid(N, block.r, template.grid.spacing),
            N=N,
            r=block.r,
            s=block.s,
            t=block.t,
            quad_nodes=block.quad_nodes,
        )
        gap = quadrature_agreement(qcfg, p)
        quad_ok = gap <= block.quadrature_tol
        summary["quadrature"] = {
            "N": N,
            "n": qcfg.grid.n,
            "relative_gap": gap,
            "tolerance": block.quadrature_tol,
            "pass": quad_ok,
        }

    passed = slope.passed and support.passed and quad_ok
    writer.write_csv("illposed_slope.csv", slope)
    writer.write_csv("illposed_support.csv", support)
    writer.write_json(
        "illposed.json",
        {
            "pass": passed,
            "slope": slope.to_json_payload(),
            "support_pass": support.passed,
            **summary,
        },
    )
    return passed


def _sweep(config: RunConfig, writer: ArtifactWriter) -> bool:
    block = config.sweep
    base = config.params.to_params()
    direction = DEFAULT_DIRECTION
    if block.direction:
        dR, dk, da = block.direction
        direction = (dR, dk, da)
    cfg = make_sweep_config(
        block.grid.to_grid(),
        config.seed,
        gamma=block.gamma,
        s=block.s,
        T=block.T,
        deltas=tuple(block.deltas),
        direction=direction,
        stepper=config.stepper.to_stepper(),
        kappa_star=config.params.kappa_star,
        base_params=base,
        identical_data=block.identical_data,
        concurrency=default_concurrency(CONCURRENCY_ENV),
    )
    report = sweep(cfg)
    fit = fit_rate(report)
    writer.write_csv("sweep.csv", report)
    writer.write_summary("sweep.json", report)
    writer.write_summary("sweep_fit.json", fit)
    passed = report.passed and fit.passed
    if block.stability:
        stability = upper_bound_stability(cfg, base=report)
        writer.write_csv("sweep_stability.csv", stability)
        passed = passed and stability.passed
    return passed


def _picard_validate(config: RunConfig, writer: ArtifactWriter) -> bool:
    """Picard against the stepper on ``[0, T]``, plus the Duhamel scaling in ``T``."""

    block = config.picard
    grid = block.grid.to_grid()
    p = config.params.to_params()
    stepper = config.stepper.to_stepper()
    rng = np.random.default_rng(config.seed)
    u0 = random_band_limited(grid, rng, s=block.s, norm=block.data_norm)
    s1 = block.s1 if block.s > 0 else None
    picard = picard_solve(
        u0,
        block.T,
        p,
        stepper,
        s=block.s,
        s1=s1,
        override_existence_time=block.override_existence_time,
    )
    stepped = evolve(u0, block.T, p, stepper)
    agreement = solver_agreement(picard, stepped, block.s, tol=block.tolerance)
    t_lin = linear_regime_time(grid, p, stepper)
    horizons = [t_lin * frac for frac in ESTIMATE_HORIZON_FRACTIONS]
    estimate = check_nonlinear_estimate(p, [u0], horizons, stepper, s=block.s, s1=s1)
    passed = agreement.passed and estimate.passed
    writer.write_csv("solver_agreement.csv", agreement)
    writer.write_csv("nonlinear_estimate.csv", estimate)
    writer.write_json(
        "picard.json",
        {
            "pass": passed,
            "picard": dict(picard.info),
            "agreement": agreement.to_json_payload(),
            "nonlinear_estimate": estimate.to_json_payload(),
        },
    )
    _emit_fields(config, writer, picard)
    return passed


_RUNNERS: dict[str, Callable[[RunConfig, ArtifactWriter], bool]] = {
    "simulate": _simulate,
    "kernel-check": _kernel_check,
    "illposed": _illposed,
    "sweep": _sweep,
    "picard-validate": _picard_validate,
}


# ----------------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------------


def _finish(
    writer: ArtifactWriter, code: int, passed: bool | None, error: str | None = None
) -> RunOutcome:
    try:
        writer.write_manifest(exit_code=code, passed=passed)
    except OSError as exc:
        _logger.error("run:manifest_failed error=%s", exc)
        code = EXIT_ERROR
        error = error or str(exc)
    return RunOutcome(
        exit_code=code,
        out_dir=writer.out_dir,
        artifacts=tuple(writer.artifacts),
        passed=passed,
        error=error,
    )


def run(config: RunConfig, *, out_dir: Path | None = None) -> RunOutcome:
    """Run ``config.experiment`` and write its artifacts; never raises for experiment failures."""

    digest = config_hash(config)
    grid = config.experiment_grid()
    meta = ArtifactMeta(
        experiment=config.experiment,
        config_hash=digest,
        seed=config.seed,
        grid_L=float(grid.L),
        grid_n=grid.n,
        code_version=code_version(),
    )
    writer = ArtifactWriter(resolve_out_dir(config, out_dir, digest), meta)
    _logger.info(
        "run:start experiment=%s hash=%s seed=%d out=%s",
        config.experiment,
        digest[:12],
        config.seed,
        writer.out_dir,
    )
    try:
        writer.write_json("config.resolved.json", resolved_payload(config))
        passed = _RUNNERS[config.experiment](config, writer)
    except BlowUpError as exc:
        _logger.error("run:blowup time=%.6g context=%s", exc.time, exc.context or "-")
        with contextlib.suppress(OSError):
            writer.write_json(
                "blowup.json", {"time": exc.time, "context": exc.context, "message": str(exc)}
            )
        return _finish(writer, EXIT_ERROR, None, str(exc))
    except (ValueError, OSError, PicardDivergenceError) as exc:
        _logger.error("run:error experiment=%s error=%s", config.experiment, exc)
        return _finish(writer, EXIT_ERROR, None, str(exc))

    code = EXIT_PASS if passed else EXIT_FAIL
    _logger.info("run:done experiment=%s pass=%s exit=%d", config.experiment, passed, code)
    return _finish(writer, code, passed)


__all__ = [
    "EXIT_ERROR",
    "EXIT_FAIL",
    "EXIT_PASS",
    "RunOutcome",
    "code_version",
    "resolve_out_dir",
    "run",
]
