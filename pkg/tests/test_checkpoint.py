from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from thinfilm.checkpoint import (
    MAGIC,
    decode,
    encode_snapshots,
    encode_trajectory,
    read_trajectory,
    trajectory_from_bytes,
    write_trajectory,
)
from thinfilm.evolve import StepperConfig, evolve
from thinfilm.kernel import PhysicalParams
from thinfilm.models import ArtifactMeta
from thinfilm.spectral import Trajectory, make_grid, random_band_limited, to_physical

PARAMS = PhysicalParams(R=1.5, kappa=0.5, alpha=1.0)


def _trajectory(rng: np.random.Generator) -> Trajectory:
    u0 = random_band_limited(make_grid(2 * math.pi, 16), rng, norm=0.1)
    return evolve(u0, 0.05, PARAMS, StepperConfig(save_every=8))


def test_trajectory_survives_a_file_round_trip(tmp_path: Path, rng: np.random.Generator):
    traj = _trajectory(rng)
    path = write_trajectory(tmp_path / "nested" / "traj.tfbin", traj)
    back = read_trajectory(path)

    assert back.times == traj.times
    assert back.grid == traj.grid
    assert (back.params.R, back.params.kappa, back.params.alpha) == (1.5, 0.5, 1.0)
    for a, b in zip(back.states, traj.states, strict=True):
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert a.real == b.real
    assert not (tmp_path / "nested" / "traj.tfbin.tmp").exists()


def test_header_carries_artifact_metadata(rng: np.random.Generator):
    traj = _trajectory(rng)
    meta = ArtifactMeta(
        experiment="simulate",
        config_hash="0" * 64,
        seed=3,
        grid_L=2 * math.pi,
        grid_n=16,
        code_version="0+unknown",
    )
    header, stack = decode(encode_trajectory(traj, meta=meta))
    assert header.kind == "fourier"
    assert header.meta == meta
    assert stack.shape == (len(traj), 16, 16)


def test_physical_snapshots_match_inverse_transform(rng: np.random.Generator):
    traj = _trajectory(rng)
    header, stack = decode(encode_snapshots(traj))
    assert header.kind == "physical"
    assert header.dtype == "<f8"
    for samples, u in zip(stack, traj.states, strict=True):
        np.testing.assert_array_equal(samples, to_physical(u))


def test_physical_snapshots_require_real_fields(rng: np.random.Generator):
    traj = _trajectory(rng)
    complex_traj = Trajectory(traj.times, tuple(u.scaled(1j) for u in traj.states), PARAMS)
    with pytest.raises(ValueError, match="real-valued"):
        encode_snapshots(complex_traj)


def test_physical_snapshots_cannot_rebuild_a_trajectory(rng: np.random.Generator):
    with pytest.raises(ValueError, match="cannot rebuild"):
        trajectory_from_bytes(encode_snapshots(_trajectory(rng)))


# ---- Corrupt containers ----------------------------------------------------------------


def test_corrupt_containers_are_rejected(rng: np.random.Generator):
    data = encode_trajectory(_trajectory(rng))
    assert data.startswith(MAGIC)
    with pytest.raises(ValueError, match="bad magic"):
        decode(b"XXXXXXXX" + data[len(MAGIC) :])
    with pytest.raises(ValueError, match="truncated"):
        decode(MAGIC + b"\x01")
    with pytest.raises(ValueError, match="payload holds"):
        decode(data[:-8])
