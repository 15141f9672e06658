"""On-disk schemas for artifacts written by the harness.

Pydantic models here describe JSON that leaves the process: the metadata block
embedded in every artifact, the run manifest, and the header of the trajectory
container. In-memory numerical types live next to the code that uses them.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, field_validator

ExperimentKind = Literal["simulate", "kernel-check", "illposed", "sweep", "picard-validate"]


class ArtifactMeta(BaseModel):
    """Provenance block carried by every CSV and JSON artifact.

    Contains no timestamps so payloads stay byte-identical across reruns.
    """

    model_config = ConfigDict(strict=True, extra="forbid", frozen=True)

    experiment: ExperimentKind
    config_hash: str
    seed: int
    grid_L: float
    grid_n: int
    code_version: str

    @field_validator("config_hash")
    @classmethod
    def _hex_digest(cls, v: str) -> str:
        if len(v) != 64 or any(c not in "0123456789abcdef" for c in v):
            raise ValueError("config_hash must be a sha256 hex digest")
        return v


class ManifestEntry(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")

    name: str
    kind: Literal["csv", "json", "tfbin"]


class RunManifest(BaseModel):
    """Header block of a run: the only artifact that carries wall-clock time."""

    model_config = ConfigDict(strict=True, extra="forbid")

    meta: ArtifactMeta
    created_at: str
    exit_code: int
    passed: bool | None
    artifacts: list[ManifestEntry]


class ParamsHeader(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")

    R: float
    kappa: float
    alpha: float


class TrajectoryHeader(BaseModel):
    """JSON header of the ``.tfbin`` trajectory container.

    ``kind == "fourier"`` stores complex coefficients (``<c16``) in FFT order;
    ``kind == "physical"`` stores real samples (``<f8``). Arrays follow the
    header in time order, each ``n x n`` row-major. ``real`` records whether the
    coefficients describe a real-valued field.
    """

    model_config = ConfigDict(strict=True, extra="forbid")

    schema_version: int = 1
    kind: Literal["fourier", "physical"]
    dtype: Literal["<c16", "<f8"]
    order: Literal["C"] = "C"
    L: float
    n: int
    real: bool = True
    params: ParamsHeader
    times: list[float]
    meta: ArtifactMeta | None = None

    @field_validator("times")
    @classmethod
    def _increasing(cls, v: list[float]) -> list[float]:
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("times must be strictly increasing")
        return v
