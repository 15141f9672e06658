from __future__ import annotations

import math

import numpy as np
import pytest

from thinfilm.kernel import VERTICAL_FILM
from thinfilm.spectral import (
    FourierField,
    SpectralGrid,
    Trajectory,
    convolve,
    et_norm,
    hermitian_defect,
    lebesgue2_norm,
    make_grid,
    physical_l2_norm,
    random_band_limited,
    resample,
    rough_field,
    sobolev_norm,
    to_fourier,
    to_physical,
)


def _single_mode(grid: SpectralGrid, k1: int, k2: int, amp: complex = 1.0) -> FourierField:
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[grid.index_of(k1, k2)] = amp
    return FourierField(grid, coeffs, real=False)


# ---- Grid ---------------------------------------------------------------------


@pytest.mark.parametrize("n", [7, 6, 0])
def test_grid_rejects_odd_or_tiny_n(n: int):
    with pytest.raises(ValueError, match="even and >= 8"):
        make_grid(2 * math.pi, n)


def test_grid_rejects_non_positive_length():
    with pytest.raises(ValueError, match="L must be finite"):
        SpectralGrid(L=0.0, n=16)


def test_index_of_maps_negative_wavenumbers_to_fft_order():
    grid = make_grid(2 * math.pi, 16)
    assert grid.index_of(1, 0) == (1, 0)
    assert grid.index_of(-1, -8) == (15, 8)
    with pytest.raises(ValueError, match="outside lattice"):
        grid.index_of(8, 0)


def test_dealias_mask_keeps_two_thirds_band():
    grid = make_grid(2 * math.pi, 32)
    mask = grid.dealias_mask(2.0 / 3.0)
    assert mask[grid.index_of(10, -10)]
    assert not mask[grid.index_of(11, 0)]
    assert not mask[grid.index_of(0, -16)]


def test_lattice_arrays_are_read_only():
    grid = make_grid(2 * math.pi, 16)
    with pytest.raises(ValueError):
        grid.xi_sq[0, 0] = 1.0


# ---- Transforms and norms -------------------------------------------------------


def test_transform_pair_recovers_samples(rng: np.random.Generator):
    grid = make_grid(3.0, 24)
    values = rng.standard_normal(grid.shape)
    field_ = to_fourier(values, grid)
    assert field_.real
    np.testing.assert_allclose(to_physical(field_), values, atol=1e-13)


def test_cosine_norms_match_closed_form():
    grid = make_grid(2 * math.pi, 16)
    x1, _ = grid.coordinates()
    field_ = to_fourier(np.cos(x1), grid)
    assert field_.coeffs[grid.index_of(1, 0)] == pytest.approx(0.5)
    assert sobolev_norm(field_, 0.0) == pytest.approx(math.pi * math.sqrt(2.0), rel=1e-13)
    assert sobolev_norm(field_, 1.0) == pytest.approx(2.0 * math.pi, rel=1e-13)


def test_parseval_matches_physical_riemann_sum(rng: np.random.Generator):
    grid = make_grid(5.0, 32)
    values = rng.standard_normal(grid.shape)
    field_ = to_fourier(values, grid)
    assert lebesgue2_norm(field_) == pytest.approx(physical_l2_norm(values, grid), rel=1e-12)


def test_sobolev_norm_is_monotone_in_index(rng: np.random.Generator):
    grid = make_grid(2 * math.pi, 32)
    field_ = random_band_limited(grid, rng)
    norms = [sobolev_norm(field_, s) for s in (-1.0, 0.0, 1.0, 2.0)]
    assert norms == sorted(norms)


# ---- Random and rough data ------------------------------------------------------


def test_random_band_limited_is_real_supported_and_normalized(rng: np.random.Generator):
    grid = make_grid(2 * math.pi, 32)
    field_ = random_band_limited(grid, rng, band=5, s=2.0, norm=0.7)
    assert sobolev_norm(field_, 2.0) == pytest.approx(0.7, rel=1e-12)
    assert hermitian_defect(field_) < 1e-15
    assert field_.coeffs[0, 0] == 0
    k = np.abs(grid.k)
    outside = np.maximum.outer(k, k) > 5
    assert not np.any(field_.coeffs[outside])
    assert np.isrealobj(to_physical(field_))


def test_random_band_limited_is_seed_deterministic():
    grid = make_grid(2 * math.pi, 16)
    a = random_band_limited(grid, np.random.default_rng(7))
    b = random_band_limited(grid, np.random.default_rng(7))
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_rough_field_has_unit_norm_and_power_law_decay():
    grid = make_grid(2 * math.pi, 64)
    field_ = rough_field(grid, 0.0)
    assert sobolev_norm(field_, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert hermitian_defect(field_) == 0.0
    near = abs(field_.coeffs[grid.index_of(1, 0)])
    far = abs(field_.coeffs[grid.index_of(9, 0)])
    assert near / far == pytest.approx(math.sqrt(82.0 / 2.0), rel=1e-12)


# ---- Convolution and resampling -------------------------------------------------


def test_convolve_adds_wavenumbers():
    grid = make_grid(2 * math.pi, 16)
    a = _single_mode(grid, 1, 0, 2.0)
    b = _single_mode(grid, 2, -1, 3.0)
    out = convolve(a.coeffs, b.coeffs, grid)
    assert out[grid.index_of(3, -1)] == pytest.approx(6.0)
    out[grid.index_of(3, -1)] = 0
    assert np.max(np.abs(out)) < 1e-14


def test_convolve_drops_sums_outside_lattice_without_wrapping():
    grid = make_grid(2 * math.pi, 16)
    a = _single_mode(grid, 7, 0)
    out = convolve(a.coeffs, a.coeffs, grid)
    assert np.max(np.abs(out)) < 1e-14


def test_resample_up_and_down_preserves_band_limited_field(rng: np.random.Generator):
    coarse = make_grid(2 * math.pi, 32)
    fine = make_grid(2 * math.pi, 64)
    field_ = random_band_limited(coarse, rng, s=2.0)
    up = resample(field_, fine)
    assert sobolev_norm(up, 2.0) == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_array_equal(resample(up, coarse).coeffs, field_.coeffs)


def test_resample_rejects_other_box():
    grid = make_grid(2 * math.pi, 16)
    with pytest.raises(ValueError, match="same box length"):
        resample(FourierField.zeros(grid), make_grid(3.0, 16))


# ---- Fields -----------------------------------------------------------------------


def test_field_coefficients_are_copied_and_frozen():
    grid = make_grid(2 * math.pi, 8)
    raw = np.zeros(grid.shape, dtype=np.complex128)
    field_ = FourierField(grid, raw)
    raw[0, 0] = 1.0
    assert field_.is_zero()
    with pytest.raises(ValueError):
        field_.coeffs[0, 0] = 1.0


def test_field_arithmetic_requires_shared_grid():
    a = FourierField.zeros(make_grid(2 * math.pi, 8))
    b = FourierField.zeros(make_grid(2 * math.pi, 16))
    with pytest.raises(ValueError, match="different grids"):
        _ = a + b


def test_imaginary_scaling_drops_real_flag():
    field_ = FourierField.zeros(make_grid(2 * math.pi, 8))
    assert field_.scaled(2.0).real
    assert not field_.scaled(1j).real


# ---- Trajectories and E_T norms -------------------------------------------------


def test_trajectory_validates_times():
    grid = make_grid(2 * math.pi, 8)
    u = FourierField.zeros(grid)
    with pytest.raises(ValueError, match="start at t = 0"):
        Trajectory((0.5,), (u,), VERTICAL_FILM)
    with pytest.raises(ValueError, match="strictly increasing"):
        Trajectory((0.0, 0.2, 0.2), (u, u, u), VERTICAL_FILM)


def test_trajectory_truncation_keeps_prefix():
    grid = make_grid(2 * math.pi, 8)
    u = FourierField.zeros(grid)
    traj = Trajectory((0.0, 0.1, 0.2, 0.3), (u, u, u, u), VERTICAL_FILM, {"steps": 3})
    short = traj.truncated(0.2)
    assert short.times == (0.0, 0.1, 0.2)
    assert short.info["steps"] == 3


def test_et_norm_of_constant_sample_combines_sup_terms(rng: np.random.Generator):
    grid = make_grid(2 * math.pi, 16)
    u = random_band_limited(grid, rng)
    traj = Trajectory((0.0, 1.0), (u, u), VERTICAL_FILM)
    expected = sobolev_norm(u, -1.0) + lebesgue2_norm(u)
    assert et_norm(traj, -1.0) == pytest.approx(expected, rel=1e-14)


def test_et_norm_requires_auxiliary_index_for_positive_s():
    grid = make_grid(2 * math.pi, 8)
    traj = Trajectory((0.0,), (FourierField.zeros(grid),), VERTICAL_FILM)
    with pytest.raises(ValueError, match="auxiliary index"):
        et_norm(traj, 1.0)
    with pytest.raises(ValueError, match="s > -2"):
        et_norm(traj, -2.0)
    assert et_norm(traj, 1.0, -0.5) == 0.0
