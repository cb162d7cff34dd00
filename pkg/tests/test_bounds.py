import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochreach import (DeviationBound, expectation_bound, ornstein_uhlenbeck,
                        radius)
from stochreach.dynamics import InputSignal, em_batch, time_grid


def test_zero_at_t0():
    assert expectation_bound(-0.5, 0.0127, 0.0) == 0.0
    assert radius(-0.5, 0.0127, 0.0, 0.5) == 0.0


def test_asymptote_for_contracting_rate():
    # t -> inf limit is d/(2|c|)
    val = expectation_bound(-0.5, 0.0127, 80.0)
    assert val == pytest.approx(0.0127, rel=1e-12)
    for t in np.linspace(0.0, 20.0, 50):
        assert expectation_bound(-0.5, 0.0127, t) <= 0.0127 + 1e-15


def test_zero_rate_limit():
    assert expectation_bound(0.0, 1.0, 2.0) == pytest.approx(2.0, rel=1e-12)


def test_radius_direct_evaluation():
    expected = math.sqrt(0.0127 * (1.0 - math.exp(-1.0)))
    assert radius(-0.5, 0.0127, 1.0, 1.0) == pytest.approx(expected, rel=1e-12)


def test_radius_delta_scaling():
    r1 = radius(-0.5, 0.0127, 1.0, 1.0)
    r2 = radius(-0.5, 0.0127, 1.0, 0.25)
    assert r2 == pytest.approx(2.0 * r1, rel=1e-12)


def test_nondecreasing_in_t():
    ts = np.linspace(0.0, 10.0, 200)
    for c in (-0.5, 0.0, 0.3):
        vals = [expectation_bound(c, 0.2, t) for t in ts]
        assert np.all(np.diff(vals) >= -1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.0, 5.0), st.floats(0.0, 8.0),
       st.floats(1e-6, 1.0))
def test_markov_consistency(c, d, t, delta):
    r = radius(c, d, t, delta)
    e = expectation_bound(c, d, t)
    assert r**2 * delta == pytest.approx(e, rel=1e-12, abs=1e-300)


def test_continuity_near_zero_rate():
    d = 0.7
    for t in np.linspace(0.01, 10.0, 97):
        for c in (1e-6, -1e-6):
            assert abs(expectation_bound(c, d, t) - d * t) <= 1e-4 * d * t


def test_taylor_seam_is_smooth():
    # values just below and above the series threshold agree closely
    d, t = 1.0, 1.0
    for c in (0.99e-4, 1.01e-4, -0.99e-4, -1.01e-4):
        exact = d * math.expm1(2 * c * t) / (2 * c)
        assert expectation_bound(c, d, t) == pytest.approx(exact, rel=1e-10)


def test_argument_errors():
    with pytest.raises(ValueError):
        expectation_bound(-0.5, 0.1, -1.0)
    with pytest.raises(ValueError):
        expectation_bound(-0.5, -0.1, 1.0)
    with pytest.raises(ValueError):
        radius(-0.5, 0.1, 1.0, 0.0)
    with pytest.raises(ValueError):
        radius(-0.5, 0.1, 1.0, 1.5)
    with pytest.raises(ValueError):
        DeviationBound(c_P=-0.5, d_P=0.1, delta=0.0)


def test_deviation_bound_wrapper():
    b = DeviationBound(c_P=-0.5, d_P=0.0127, delta=0.01)
    assert b.radius(1.0) == pytest.approx(radius(-0.5, 0.0127, 1.0, 0.01))
    assert b.expectation(2.0) == pytest.approx(expectation_bound(-0.5, 0.0127, 2.0))


def test_bound_is_tight_for_scalar_linear_sde():
    """For dX = aX dt + s dW the mean-square deviation from the
    deterministic twin is exactly s^2/(2a)(e^{2at} - 1), so the bound with
    c = a, d = s^2 must match Monte Carlo within sampling error."""
    a, s, n = -1.0, 0.5, 4000
    ts = ornstein_uhlenbeck(a=a, sigma=s)
    times = time_grid(2.0, 1e-3)
    cps = np.array([500, 1000, 2000])
    out, _ = em_batch(ts.model, np.full((n, 1), 1.0), InputSignal.zero(),
                      times, seed=21, checkpoints=cps)
    for j, t in enumerate((0.5, 1.0, 2.0)):
        twin = math.exp(a * t)  # deterministic trajectory from x0 = 1
        dev2 = (out[:, j, 0] - twin) ** 2
        se = dev2.std(ddof=1) / math.sqrt(n)
        assert abs(dev2.mean() - expectation_bound(a, s**2, t)) <= 3.0 * se
