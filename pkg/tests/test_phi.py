from __future__ import annotations

import math

import numpy as np
import pytest

from thinfilm.phi import PHI1_SERIES_RADIUS, PHI2_SERIES_RADIUS, exp_divided_difference, phi1, phi2


def test_phi_functions_match_closed_forms_away_from_zero():
    z = np.array([-50.0, -3.0, -0.5, 0.5, 2.0])
    np.testing.assert_allclose(phi1(z), np.expm1(z) / z, rtol=1e-15)
    np.testing.assert_allclose(phi2(z), (np.expm1(z) - z) / z**2, rtol=1e-13)


def test_phi_functions_at_zero():
    np.testing.assert_array_equal(phi1(np.zeros(3)), np.ones(3))
    np.testing.assert_array_equal(phi2(np.zeros(3)), np.full(3, 0.5))


@pytest.mark.parametrize(("fn", "radius"), [(phi1, PHI1_SERIES_RADIUS), (phi2, PHI2_SERIES_RADIUS)])
def test_series_branch_is_continuous_at_switch(fn, radius: float):
    inside = fn(np.array([radius * (1 - 1e-9), -radius * (1 - 1e-9)]))
    outside = fn(np.array([radius * (1 + 1e-9), -radius * (1 + 1e-9)]))
    np.testing.assert_allclose(inside, outside, rtol=1e-10)


def test_phi2_avoids_cancellation_near_zero():
    z = np.array([1e-6, -1e-6])
    np.testing.assert_allclose(phi2(z), 0.5 + z / 6.0, rtol=1e-12)


def test_divided_difference_matches_direct_formula():
    a = np.array([-1.0, 2.0, -30.0])
    b = np.array([-3.0, 0.5, 4.0])
    t = 0.7
    direct = (np.exp(a * t) - np.exp(b * t)) / (a - b)
    np.testing.assert_allclose(exp_divided_difference(a, b, t), direct, rtol=1e-13)


def test_divided_difference_is_symmetric_and_has_confluent_limit():
    a = np.array([-2.0, 1.5])
    forward = exp_divided_difference(a, a[::-1], 0.3)
    assert np.array_equal(forward, exp_divided_difference(a[::-1], a, 0.3))
    np.testing.assert_allclose(exp_divided_difference(a, a, 0.3), 0.3 * np.exp(a * 0.3), rtol=1e-15)


def test_divided_difference_stays_finite_for_stiff_pairs():
    out = exp_divided_difference(np.array([-1e6]), np.array([-2e6]), 1.0)
    assert np.isfinite(out).all()
    assert out[0] >= 0.0
    assert exp_divided_difference(1.0, 2.0, 0.0).item() == 0.0


def test_divided_difference_resolves_nearly_equal_arguments():
    a = -4.0
    b = a + 1e-10
    expected = 0.5 * math.exp(a * 0.5) * (1 + (b - a) * 0.25)
    assert exp_divided_difference(a, b, 0.5).item() == pytest.approx(expected, rel=1e-12)
