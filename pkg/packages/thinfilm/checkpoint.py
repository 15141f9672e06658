"""Binary trajectory container (``*.tfbin``).

Layout, all little-endian::

    b"TFTRAJ01"                 8-byte magic
    uint32                      byte length of the JSON header
    header                      UTF-8 JSON, :class:`~thinfilm.models.TrajectoryHeader`
    array[0] ... array[m-1]     one n x n row-major array per sample time

``kind="fourier"`` stores the complex coefficients (``<c16``) in FFT order and
reads back into a :class:`~thinfilm.spectral.Trajectory`. ``kind="physical"``
stores real samples on the grid (``<f8``) for external viewers.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .kernel import PhysicalParams
from .logging_setup import get_logger
from .models import ArtifactMeta, ParamsHeader, TrajectoryHeader
from .reports import atomic_write_bytes
from .spectral import FourierField, SpectralGrid, Trajectory, to_physical

_logger = get_logger("thinfilm.checkpoint")

MAGIC = b"TFTRAJ01"
_LEN = struct.Struct("<I")


def _header(traj: Trajectory, kind: str, meta: ArtifactMeta | None) -> TrajectoryHeader:
    p = traj.params
    return TrajectoryHeader(
        kind=kind,  # type: ignore[arg-type]
        dtype="<c16" if kind == "fourier" else "<f8",
        L=float(traj.grid.L),
        n=traj.grid.n,
        real=all(u.real for u in traj.states),
        params=ParamsHeader(R=float(p.R), kappa=float(p.kappa), alpha=float(p.alpha)),
        times=list(traj.times),
        meta=meta,
    )


def _pack(header: TrajectoryHeader, arrays: list[NDArray]) -> bytes:
    head = header.model_dump_json().encode("utf-8")
    body = b"".join(np.ascontiguousarray(a, dtype=header.dtype).tobytes() for a in arrays)
    return MAGIC + _LEN.pack(len(head)) + head + body


def encode_trajectory(traj: Trajectory, *, meta: ArtifactMeta | None = None) -> bytes:
    """Fourier coefficients of every stored state."""

    return _pack(_header(traj, "fourier", meta), [u.coeffs for u in traj.states])


def encode_snapshots(traj: Trajectory, *, meta: ArtifactMeta | None = None) -> bytes:
    """Physical-space samples of every stored state; the states must be real."""

    if not all(u.real for u in traj.states):
        raise ValueError("physical snapshots require real-valued fields")
    return _pack(_header(traj, "physical", meta), [to_physical(u) for u in traj.states])


def decode(data: bytes) -> tuple[TrajectoryHeader, NDArray]:
    """Split a container into its header and an ``(m, n, n)`` array stack."""

    if data[: len(MAGIC)] != MAGIC:
        raise ValueError("not a trajectory container (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + _LEN.size:
        raise ValueError("truncated trajectory container")
    (size,) = _LEN.unpack_from(data, offset)
    offset += _LEN.size
    header = TrajectoryHeader.model_validate_json(data[offset : offset + size])
    offset += size
    count = len(header.times) * header.n * header.n
    dtype = np.dtype(header.dtype)
    if len(data) - offset != count * dtype.itemsize:
        raise ValueError(
            f"payload holds {len(data) - offset} bytes, header implies {count * dtype.itemsize}"
        )
    stack = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    return header, stack.reshape(len(header.times), header.n, header.n)


def trajectory_from_bytes(data: bytes) -> Trajectory:
    header, stack = decode(data)
    if header.kind != "fourier":
        raise ValueError(f"cannot rebuild a trajectory from {header.kind} samples")
    grid = SpectralGrid(L=header.L, n=header.n)
    hp = header.params
    params = PhysicalParams(R=hp.R, kappa=hp.kappa, alpha=hp.alpha)
    states = tuple(FourierField(grid, c, header.real) for c in stack)
    info = {"schema_version": header.schema_version}
    return Trajectory(tuple(header.times), states, params, info)


def write_trajectory(
    path: Path, traj: Trajectory, *, physical: bool = False, meta: ArtifactMeta | None = None
) -> Path:
    data = encode_snapshots(traj, meta=meta) if physical else encode_trajectory(traj, meta=meta)
    atomic_write_bytes(path, data)
    _logger.debug("checkpoint:write path=%s samples=%d bytes=%d", path, len(traj), len(data))
    return path


def read_trajectory(path: Path) -> Trajectory:
    return trajectory_from_bytes(Path(path).read_bytes())


__all__ = [
    "MAGIC",
    "decode",
    "encode_snapshots",
    "encode_trajectory",
    "read_trajectory",
    "trajectory_from_bytes",
    "write_trajectory",
]
