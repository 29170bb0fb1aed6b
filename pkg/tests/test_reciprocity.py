import dataclasses

import numpy as np
import pytest

from helpers import small_scenario
from mptherm.dynamics import run_simulation
from mptherm.errors import RangeError, ScenarioMismatch, SizeMismatch
from mptherm.reciprocity import (convolve, laplace_transform,
                                 reciprocity_defect, reciprocity_functional,
                                 transform_identity_defect, truncation_bound)


def test_convolution_of_ones_is_a_ramp():
    dt = 0.01
    m = 201
    one = np.ones(m)
    t = dt * np.arange(m)
    out = convolve(one, one, dt)
    assert out[0] == 0.0
    assert np.abs(out - t).max() <= 1e-12


def test_convolution_of_exponentials():
    # (e^-t * e^-t)(t) = t e^-t, trapezoid accurate to O(dt^2)
    dt = 1e-3
    t = dt * np.arange(1001)
    a = np.exp(-t)
    out = convolve(a, a, dt)
    assert np.abs(out - t * np.exp(-t)).max() <= 1e-6


def test_convolution_commutes_and_checks_shapes():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(40), rng.standard_normal(40)
    dt = 0.05
    assert np.abs(convolve(a, b, dt) - convolve(b, a, dt)).max() <= 1e-14
    with pytest.raises(SizeMismatch):
        convolve(a, b[:-1], dt)


def test_convolution_broadcasts_trailing_axes():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((30, 4))
    b = rng.standard_normal((30, 4))
    out = convolve(a, b, 0.1)
    for j in range(4):
        col = convolve(a[:, j], b[:, j], 0.1)
        assert np.abs(out[:, j] - col).max() <= 1e-14


def test_laplace_transform_of_exponential():
    dt = 1e-3
    t = dt * np.arange(20001)  # t_end = 20 >> 1/(s+a)
    for s, rate in ((1.0, 0.5), (2.0, 1.0)):
        val = laplace_transform(np.exp(-rate * t), s, dt)
        assert val == pytest.approx(1.0 / (s + rate), rel=1e-5)


def test_truncation_bound_dominates_tail():
    dt = 1e-3
    t = dt * np.arange(2001)  # cut at t_end = 2, tail is sizable
    series = np.exp(-0.1 * t)
    s = 1.5
    full_t = dt * np.arange(40001)
    full = laplace_transform(np.exp(-0.1 * full_t), s, dt)
    cut = laplace_transform(series, s, dt)
    bound = truncation_bound(series, s, dt)
    assert abs(full - cut) <= bound
    assert bound < 0.1 * abs(cut)  # and it is not uselessly loose


def test_reciprocity_functional_needs_a_time():
    hist = run_simulation(small_scenario(t_end=0.1))
    with pytest.raises(RangeError):
        reciprocity_functional(hist, hist)


def test_identical_histories_have_zero_defect():
    hist = run_simulation(small_scenario(t_end=0.2))
    rep = reciprocity_defect(hist, hist)
    assert rep.max_defect <= 1e-14
    assert np.array_equal(rep.I_12, rep.I_21)


def test_compatibility_guard():
    scn = small_scenario(t_end=0.1)
    hist = run_simulation(scn)
    other = run_simulation(small_scenario(n=21, t_end=0.1))
    with pytest.raises(ScenarioMismatch):
        reciprocity_defect(hist, other)
    shorter = run_simulation(small_scenario(t_end=0.05))
    with pytest.raises(ScenarioMismatch):
        reciprocity_defect(hist, shorter)


def test_transform_rejects_nonpositive_abscissae():
    hist = run_simulation(small_scenario(t_end=0.1))
    with pytest.raises(RangeError):
        transform_identity_defect(hist, hist, s_values=(1.0, -2.0))


def test_transform_identity_on_identical_histories():
    hist = run_simulation(small_scenario(t_end=0.2))
    rep = transform_identity_defect(hist, hist, s_values=(1.0, 3.0))
    assert rep.transform_defects.shape == (2,)
    # orientation sums cancel pairwise when both arguments coincide
    assert np.abs(rep.I_12 - rep.I_21).max() <= 1e-12 * max(
        1.0, np.abs(rep.I_12).max())
    assert np.all(rep.transform_defects <= 1e-12)
    assert np.all(rep.truncation_bounds >= 0.0)


def test_reciprocity_on_distinct_scenarios(pair_l1):
    hist_a, hist_b = pair_l1
    rep = reciprocity_defect(hist_a, hist_b)
    assert rep.check_times == pytest.approx([0.5, 1.0])
    assert rep.max_defect <= 5e-3
    # the functionals themselves are far from zero, so the match is real
    assert np.abs(rep.I_12).min() > 1e-6
