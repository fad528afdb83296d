import numpy as np
import pytest
from numpy.testing import assert_allclose

from bapcs.asymptotic import (
    IntervalEstimate,
    NotPositiveDefiniteError,
    aci_parameter,
    delta_method_gradient,
    delta_method_variance,
    invert_spd,
    mle_intervals,
    observed_information,
    target_value,
    z_quantile,
)
from bapcs.mle import solve_mle

from conftest import setup_sample

TARGETS = ["alpha_weighted", "reliability", "hazard", "mtf"]


def fixed_weight_target(theta, w, target, t):
    alpha = w @ theta[1:] / w.sum()
    return target_value(target, alpha, theta[0], t)


def test_z_quantile():
    assert_allclose(z_quantile(0.975), 1.959963984540054, rtol=1e-15)
    with pytest.raises(ValueError):
        z_quantile(1.0)


def test_aci():
    iv = aci_parameter(2.0, 0.04, 0.05)
    assert_allclose([iv.lower, iv.upper], [2 - 0.392, 2 + 0.392], atol=1e-4)
    assert iv.level == pytest.approx(0.95)
    assert aci_parameter(1.0, 0.0, 0.1).length == 0
    with pytest.raises(ValueError):
        aci_parameter(1.0, -1e-3, 0.05)


def test_invert_spd():
    a = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]])
    assert_allclose(invert_spd(a) @ a, np.eye(3), atol=1e-14)
    with pytest.raises(NotPositiveDefiniteError):
        invert_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotPositiveDefiniteError):
        invert_spd(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        invert_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_observed_information_alpha_block(sample1):
    fit = solve_mle(sample1)
    info = observed_information(sample1, fit)
    m = np.array([f.m for f in sample1.facilities])
    assert_allclose(np.diag(info.matrix)[1:], m / fit.alpha_hats**2, rtol=1e-12)
    assert_allclose(info.inverse, fit.vcov, rtol=1e-12)
    off = info.matrix[1:, 1:] - np.diag(np.diag(info.matrix)[1:])
    assert np.all(off == 0)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("target", TARGETS)
def test_delta_gradient_matches_finite_differences(seed, target):
    s = setup_sample(seed)
    fit = solve_mle(s)
    w = fit.weights
    theta = np.concatenate([[fit.beta_hat], fit.alpha_hats])
    fd = np.empty_like(theta)
    for i in range(len(theta)):
        h = 1e-5 * theta[i]
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (fixed_weight_target(theta + e, w, target, 0.75)
                 - fixed_weight_target(theta - e, w, target, 0.75)) / (2 * h)
    assert_allclose(delta_method_gradient(fit, fit.vcov, target, 0.75), fd, rtol=1e-6, atol=1e-12)


def test_weighted_alpha_variance(sample1):
    fit = solve_mle(sample1)
    w = fit.weights
    g = np.concatenate([[0.0], w / w.sum()])
    assert_allclose(delta_method_variance(fit, fit.vcov, "alpha_weighted"), g @ fit.vcov @ g)


def test_mle_intervals(sample1):
    fit = solve_mle(sample1)
    res = mle_intervals(fit, 0.05, 0.75)
    assert list(res) == ["beta", "alpha_1", "alpha_2", "alpha_3", "alpha_4", "alpha", "R", "H", "MTF"]
    for est, iv in res.values():
        assert isinstance(iv, IntervalEstimate)
        assert iv.lower < est < iv.upper
        assert_allclose(0.5 * (iv.lower + iv.upper), est, rtol=1e-12)
    assert_allclose(res["beta"][1].length, 2 * 1.959963984540054 * np.sqrt(fit.vcov[0, 0]))
    d = res["R"][1].to_dict("R")
    assert d["target"] == "R" and d["length"] == pytest.approx(res["R"][1].length)
