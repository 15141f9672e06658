"""Run configuration: JSON schema, dotted overrides and the config hash.

A run is described by one JSON document validated into :class:`RunConfig`.
Every block has defaults, so ``{"experiment": "kernel-check"}`` is a complete
config. The resolved model (all defaults materialized) is what gets hashed and
echoed next to the artifacts.

Overrides use ``path.to.key=value``; values are parsed as JSON when possible
(``3``, ``0.5``, ``[8, 16]``, ``true``) and kept as strings otherwise.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Sequence
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .evolve import StepperConfig
from .illposed import IllposedConfig
from .kernel import PhysicalParams
from .models import ExperimentKind
from .spectral import SpectralGrid


class _Block(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")


class GridSpec(_Block):
    L: float = 2.0 * math.pi
    n: int = 64

    @model_validator(mode="after")
    def _valid(self) -> GridSpec:
        self.to_grid()
        return self

    def to_grid(self) -> SpectralGrid:
        return SpectralGrid(L=float(self.L), n=self.n)


class ParamsSpec(_Block):
    """``(R, kappa, alpha)``; checked against Q* unless ``validate_region`` is off."""

    R: float = 1.0
    kappa: float = 0.0
    alpha: float = 0.0
    kappa_star: float = 1.0
    validate_region: bool = True

    @model_validator(mode="after")
    def _valid(self) -> ParamsSpec:
        self.to_params()
        return self

    def to_params(self) -> PhysicalParams:
        return PhysicalParams(
            R=self.R,
            kappa=self.kappa,
            alpha=self.alpha,
            kappa_star=self.kappa_star if self.validate_region else None,
        )


class StepperSpec(_Block):
    dt: float = 1.0 / 512
    dealias_fraction: float = 2.0 / 3.0
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    duhamel_nodes: int = 4
    save_every: int = 1

    @model_validator(mode="after")
    def _valid(self) -> StepperSpec:
        self.to_stepper()
        return self

    def to_stepper(self, *, nonlinear: bool = True) -> StepperConfig:
        return StepperConfig(
            dt=self.dt,
            dealias_fraction=self.dealias_fraction,
            picard_tol=self.picard_tol,
            picard_max_iter=self.picard_max_iter,
            duhamel_nodes=self.duhamel_nodes,
            save_every=self.save_every,
            nonlinear=nonlinear,
        )


class SimulateBlock(_Block):
    """Forward run with energy, mean and smoothing diagnostics.

    ``data="band"`` draws a seeded band-limited field of ``H^{data_s}`` norm
    ``data_norm``; ``data="rough"`` uses the power-law field that sits in
    ``H^{data_s}`` only. ``linear`` samples the exact linear flow on a
    log-spaced mesh instead of stepping.
    """

    T: float = Field(default=0.5, gt=0)
    data: Literal["band", "rough"] = "band"
    data_s: float = 0.0
    data_norm: float = Field(default=0.1, gt=0)
    band: int | None = None
    linear: bool = False
    sigma: float = 2.0
    t_min: float = Field(default=1e-3, gt=0)
    samples: int = Field(default=25, ge=2)
    margin: float = Field(default=1.0, gt=0)
    energy_rtol: float = Field(default=1e-8, ge=0)
    mean_tol: float = Field(default=1e-12, ge=0)

    @model_validator(mode="after")
    def _sigma_above_s(self) -> SimulateBlock:
        if not self.sigma > self.data_s:
            raise ValueError(f"sigma > data_s required, got sigma={self.sigma}")
        if self.t_min >= self.T:
            raise ValueError("t_min < T required")
        return self


class KernelCheckBlock(_Block):
    """Kernel bounds on the experiment grid.

    ``declared_C`` caps every sup-bound constant; the linear ``E_T`` estimate
    runs on the smoothing fields over ``estimate_horizons`` and uses
    ``estimate_s1`` when ``smoothing_s > 0``.
    """

    lambdas: list[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0, 3.0, 4.0])
    t_min: float = Field(default=1e-3, gt=0)
    t_max: float = Field(default=1.0, gt=0)
    samples: int = Field(default=16, ge=2)
    margin: float = Field(default=1.0, gt=0)
    refine: bool = True
    deltas: list[float] = Field(default_factory=lambda: [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    difference_t_max: float = Field(default=0.5, gt=0)
    direction: list[float] | None = None
    smoothing_s: float = 0.0
    smoothing_fields: int = Field(default=4, ge=1)
    declared_C: float | None = Field(default=None, gt=0)
    estimate_horizons: list[float] = Field(default_factory=lambda: [1.0 / 64, 1.0 / 16, 0.25, 1.0])
    estimate_s1: float = 0.0
    grid: GridSpec | None = None

    @field_validator("lambdas")
    @classmethod
    def _nonnegative(cls, v: list[float]) -> list[float]:
        if not v or any(lam < 0 for lam in v):
            raise ValueError("lambdas must be non-empty and >= 0")
        return v

    @model_validator(mode="after")
    def _ordered(self) -> KernelCheckBlock:
        if self.t_min >= self.t_max:
            raise ValueError("t_min < t_max required")
        if not self.deltas or any(d <= 0 for d in self.deltas):
            raise ValueError("deltas must be non-empty and > 0")
        if len(self.estimate_horizons) < 3 or any(T <= 0 for T in self.estimate_horizons):
            raise ValueError("estimate_horizons needs at least three positive values")
        return self


def _default_illposed_grid() -> GridSpec:
    return GridSpec(L=8.0 * math.pi, n=288)


class IllposedBlock(_Block):
    """Norm-inflation experiment; ``N`` and ``r`` are physical, multiples of ``2 pi / L``."""

    Ns: list[float] = Field(default_factory=lambda: [8.0, 16.0, 32.0])
    r: float = Field(default=1.0, gt=0)
    s: float = -3.0
    t: float = Field(default=0.1, gt=0)
    quad_nodes: int = Field(default=12, ge=1)
    check_quadrature: bool = True
    quadrature_tol: float = Field(default=1e-6, gt=0)
    tolerance: float = Field(default=0.3, gt=0)
    grid: GridSpec = Field(default_factory=_default_illposed_grid)

    @field_validator("s")
    @classmethod
    def _supercritical(cls, v: float) -> float:
        if not v < -2.0:
            raise ValueError(f"s < -2 required, got s={v}")
        return v

    @field_validator("Ns")
    @classmethod
    def _positive(cls, v: list[float]) -> list[float]:
        if len(v) < 3 or any(N <= 0 for N in v):
            raise ValueError("Ns needs at least three positive values")
        return v

    @model_validator(mode="after")
    def _fits_grid(self) -> IllposedBlock:
        self.template()
        return self

    def template(self) -> IllposedConfig:
        return IllposedConfig(
            grid=self.grid.to_grid(),
            N=min(self.Ns),
            r=self.r,
            s=self.s,
            t=self.t,
            quad_nodes=self.quad_nodes,
        )


class SweepBlock(_Block):
    """Parameter-asymptotics sweep; ``direction`` defaults to ``(1, 1, 1) / sqrt(3)``."""

    gamma: float = Field(default=0.5, gt=0)
    s: float = 2.0
    T: float = Field(default=0.5, gt=0)
    deltas: list[float] = Field(default_factory=lambda: [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    direction: list[float] | None = None
    identical_data: bool = False
    stability: bool = False
    grid: GridSpec = Field(default_factory=lambda: GridSpec(n=32))

    @field_validator("s")
    @classmethod
    def _above_one(cls, v: float) -> float:
        if not v > 1.0:
            raise ValueError(f"s > 1 required, got s={v}")
        return v


class PicardBlock(_Block):
    """Duhamel iteration checked against the stepper on a short window."""

    T: float = Field(default=1.0 / 64, gt=0)
    s: float = 2.0
    s1: float | None = 0.0
    data_norm: float = Field(default=0.1, gt=0)
    tolerance: float = Field(default=1e-5, gt=0)
    override_existence_time: bool = False
    grid: GridSpec = Field(default_factory=lambda: GridSpec(n=32))


class RunConfig(_Block):
    experiment: ExperimentKind
    seed: int = Field(default=0, ge=0, lt=2**64)
    out_dir: str | None = None
    emit_fields: bool = False
    grid: GridSpec = Field(default_factory=GridSpec)
    params: ParamsSpec = Field(default_factory=ParamsSpec)
    stepper: StepperSpec = Field(default_factory=StepperSpec)
    simulate: SimulateBlock = Field(default_factory=SimulateBlock)
    kernel_check: KernelCheckBlock = Field(default_factory=KernelCheckBlock)
    illposed: IllposedBlock = Field(default_factory=IllposedBlock)
    sweep: SweepBlock = Field(default_factory=SweepBlock)
    picard: PicardBlock = Field(default_factory=PicardBlock)

    def experiment_grid(self) -> SpectralGrid:
        """The grid the selected experiment actually runs on."""

        if self.experiment == "illposed":
            return self.illposed.grid.to_grid()
        if self.experiment == "sweep":
            return self.sweep.grid.to_grid()
        if self.experiment == "picard-validate":
            return self.picard.grid.to_grid()
        if self.experiment == "kernel-check" and self.kernel_check.grid is not None:
            return self.kernel_check.grid.to_grid()
        return self.grid.to_grid()


# ----------------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------------


def parse_override_value(raw: str) -> Any:
    text = raw.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(payload: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Set ``a.b.c=value`` entries in ``payload`` in place, creating blocks as needed."""

    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"invalid override {item!r}; expected path=value")
        parts = [seg for seg in key.strip().split(".") if seg]
        if not parts:
            raise ValueError(f"invalid override {item!r}; empty path")
        target: Any = payload
        for seg in parts[:-1]:
            if not isinstance(target, dict):
                raise ValueError(f"override {item!r} traverses a non-mapping at {seg!r}")
            if target.get(seg) is None:
                target[seg] = {}
            target = target[seg]
        if not isinstance(target, dict):
            raise ValueError(f"override {item!r} traverses a non-mapping")
        target[parts[-1]] = parse_override_value(value)
    return payload


def parse_config(text: str, overrides: Sequence[str] = ()) -> RunConfig:
    """Validate a JSON config document after applying ``overrides``.

    Raises ``ValueError`` for malformed JSON or overrides, and pydantic's
    ``ValidationError`` (also a ``ValueError``) for schema or invariant breaks.
    """

    try:
        payload = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValueError("config must be a JSON object")
    apply_overrides(payload, overrides)
    return RunConfig.model_validate_json(json.dumps(payload))


def resolved_payload(cfg: RunConfig) -> dict[str, Any]:
    return cfg.model_dump(mode="json")


def config_hash(cfg: RunConfig) -> str:
    """sha256 over the canonical JSON of the resolved config, ``out_dir`` excluded."""

    body = cfg.model_dump(mode="json", exclude={"out_dir"})
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


__all__ = [
    "GridSpec",
    "IllposedBlock",
    "KernelCheckBlock",
    "ParamsSpec",
    "PicardBlock",
    "RunConfig",
    "SimulateBlock",
    "StepperSpec",
    "SweepBlock",
    "apply_overrides",
    "config_hash",
    "parse_config",
    "parse_override_value",
]
