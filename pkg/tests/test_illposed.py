from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from thinfilm.illposed import (
    IllposedConfig,
    band_indices,
    bilinear_B,
    check_support,
    d2_exact,
    graded_nodes,
    indicator_data,
    inflation_norm,
    inflation_slope,
    quadrature_agreement,
    sized_grid,
    support_window,
)
from thinfilm.kernel import VERTICAL_FILM
from thinfilm.spectral import FourierField, SpectralGrid, sobolev_norm

DEFAULT_GRID = SpectralGrid(L=8 * math.pi, n=288)
NS = [8.0, 16.0, 32.0]


def _template(s: float = -3.0, **kwargs) -> IllposedConfig:
    return IllposedConfig(grid=DEFAULT_GRID, N=8.0, r=1.0, s=s, **kwargs)


# ---- Configuration ----------------------------------------------------------------


def test_requires_subcritical_index():
    with pytest.raises(ValueError, match="s < -2 required, got s=-2"):
        _template(s=-2.0)
    assert _template(s=-2.0, allow_boundary=True).s == -2.0
    with pytest.raises(ValueError, match="s <= -2 required"):
        _template(s=-1.0, allow_boundary=True)


def test_band_geometry_is_validated_against_grid():
    with pytest.raises(ValueError, match="not a positive multiple"):
        replace(_template(), N=8.1)
    with pytest.raises(ValueError, match="beyond the lattice half-width"):
        replace(_template(), N=40.0)
    with pytest.raises(ValueError, match="lattice cells"):
        replace(_template(), r=0.5)


def test_sized_grid_holds_the_bands():
    grid = sized_grid(8.0, 1.0, 0.25)
    assert grid.n == 88
    assert grid.L == pytest.approx(8 * math.pi)
    IllposedConfig(grid=grid, N=8.0, r=1.0)


# ---- Band data ----------------------------------------------------------------------


def test_band_indices_are_half_open_squares():
    cfg = _template()
    assert band_indices(cfg, "A1") == range(-32, -28)
    assert band_indices(cfg, "A2") == range(36, 40)


def test_indicator_data_has_order_one_norm():
    for N in NS:
        cfg = replace(_template(), N=N)
        v0 = indicator_data(cfg, "A1")
        assert not v0.real
        assert np.count_nonzero(v0.coeffs) == 16
        target = 2.0 ** (cfg.s / 2.0)
        assert 0.5 * target <= sobolev_norm(v0, cfg.s) <= 2.0 * target


# ---- Quadrature versus closed form --------------------------------------------------


def test_graded_nodes_integrate_polynomials():
    taus, weights = graded_nodes(0.1, 1e4, 12)
    assert weights.sum() == pytest.approx(0.1, rel=1e-14)
    assert np.sum(weights * taus**2) == pytest.approx(0.1**3 / 3.0, rel=1e-12)
    assert taus.min() > 0.0
    assert taus.max() < 0.1


@pytest.mark.parametrize("N", [8.0, 12.0, 16.0])
def test_quadrature_matches_closed_form_on_band_data(N: float):
    cfg = IllposedConfig(grid=sized_grid(N, 1.0, 0.25), N=N, r=1.0)
    assert quadrature_agreement(cfg, VERTICAL_FILM) <= 1e-6


def test_second_variation_is_linear_in_each_argument():
    cfg = IllposedConfig(grid=sized_grid(8.0, 1.0, 0.25), N=8.0, r=1.0)
    v = indicator_data(cfg, "A1")
    w = indicator_data(cfg, "A2")
    lam = 2.5 - 1.0j
    base = bilinear_B(v, w, 0.1, VERTICAL_FILM)
    scale = float(np.max(np.abs(base.coeffs)))
    for got in (
        bilinear_B(v.scaled(lam), w, 0.1, VERTICAL_FILM),
        bilinear_B(v, w.scaled(lam), 0.1, VERTICAL_FILM),
    ):
        assert np.max(np.abs(got.coeffs - lam * base.coeffs)) <= 1e-12 * abs(lam) * scale
    exact = d2_exact(v.scaled(lam), w, 0.1, VERTICAL_FILM).coeffs
    reference = lam * d2_exact(v, w, 0.1, VERTICAL_FILM).coeffs
    np.testing.assert_allclose(exact, reference, rtol=1e-12, atol=1e-12 * abs(lam) * scale)


def test_bilinear_term_of_zero_data_vanishes():
    cfg = IllposedConfig(grid=sized_grid(8.0, 1.0, 0.25), N=8.0, r=1.0)
    zero = FourierField.zeros(cfg.grid, real=False)
    assert bilinear_B(zero, indicator_data(cfg, "A2"), 0.1, VERTICAL_FILM).is_zero()
    assert d2_exact(zero, indicator_data(cfg, "A2"), 0.1, VERTICAL_FILM).is_zero()


def test_output_stays_in_the_low_frequency_window():
    report = check_support(NS, _template(), VERTICAL_FILM)
    assert report.passed
    assert len(report.rows) == 3
    assert support_window(_template()) == (3, 11)
    assert all(int(n) > 0 for n in report.column("nonzero"))


# ---- Inflation slope ----------------------------------------------------------------


def test_inflation_grows_with_frequency_below_critical_index():
    norms = [inflation_norm(replace(_template(), N=N), VERTICAL_FILM) for N in NS]
    assert norms == sorted(norms)


@pytest.mark.parametrize(("s", "expected"), [(-3.0, 2.0), (-2.5, 1.0), (-3.5, 3.0)])
def test_inflation_slope_matches_scaling(s: float, expected: float):
    report = inflation_slope(NS, _template(s=s), VERTICAL_FILM)
    assert report.passed, report.summary
    assert report.summary["expected_slope"] == expected
    assert abs(report.summary["slope"] - expected) <= 0.3


def test_no_inflation_at_critical_index():
    report = inflation_slope(NS, _template(s=-2.0, allow_boundary=True), VERTICAL_FILM)
    assert abs(report.summary["slope"]) <= 0.3


def test_frequencies_that_do_not_fit_are_skipped():
    report = inflation_slope([*NS, 40.0], _template(), VERTICAL_FILM)
    assert [row[0] for row in report.rows] == NS


def test_inflation_decays_like_exp_minus_t_when_f_is_near_one():
    # r = 1/2 puts the output window where f is of order one for the vertical film
    cfg = IllposedConfig(grid=sized_grid(8.0, 0.5, 0.125), N=8.0, r=0.5)
    times = [0.05, 0.1, 0.2, 0.4]
    norms = [inflation_norm(replace(cfg, t=t), VERTICAL_FILM) for t in times]
    assert all(b < a for a, b in zip(norms, norms[1:], strict=False))
    prefactors = [norm * math.exp(t) for norm, t in zip(norms, times, strict=True)]
    assert max(prefactors) <= 2.0 * min(prefactors)
