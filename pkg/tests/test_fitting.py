from __future__ import annotations

import math

import pytest

from thinfilm.fitting import fit_loglog


def test_recovers_exact_power_law():
    x = [1e-3, 1e-2, 1e-1, 1.0]
    fit = fit_loglog(x, [3.0 * v**1.5 for v in x])
    assert fit.slope == pytest.approx(1.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.predict(0.5) == pytest.approx(3.0 * 0.5**1.5)


def test_skips_non_positive_and_non_finite_pairs():
    fit = fit_loglog([0.0, 1.0, 2.0, 4.0, 8.0], [1.0, 1.0, math.inf, 4.0, 8.0])
    assert fit.points == 3
    assert fit.slope == pytest.approx(1.0)


def test_degenerate_inputs_raise():
    with pytest.raises(ValueError, match="degenerate fit"):
        fit_loglog([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="degenerate fit"):
        fit_loglog([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="differ in length"):
        fit_loglog([1.0, 2.0, 3.0], [1.0, 2.0])
