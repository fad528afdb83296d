import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, optimize

from bapcs.distributions import (
    EP,
    GP,
    IER,
    IL,
    DomainError,
    IepParams,
    OutOfSupportError,
    competitor_cdf,
    competitor_loglik,
    competitor_pdf,
    hazard,
    hazard_values,
    iep_cdf,
    iep_isf_log,
    iep_pdf,
    iep_quantile,
    log1mexp,
    mtf,
    mtf_values,
    order_stat_cdf,
    order_stat_pdf,
    reliability,
    reliability_values,
)

P = IepParams(3.5, 2.25)

# 40-digit mpmath evaluations of the closed forms at t = 0.75, (3.5, 2.25)
CDF_075 = 0.43056082454908231877
PDF_075 = 0.59637992125677807879
REL_075 = 0.56943917545091768123
HAZ_075 = 1.0473110157630567374
MTF_P = 0.87365392000917787046

shapes = st.floats(0.05, 60.0)
times = st.floats(1e-3, 1e3)


def test_params_validation():
    for bad in [(0, 1), (1, -2), (math.inf, 1), (math.nan, 1)]:
        with pytest.raises(DomainError):
            IepParams(*bad)


def test_frozen_values():
    assert_allclose(iep_cdf(0.75, P), CDF_075, rtol=1e-14)
    assert_allclose(iep_pdf(0.75, P), PDF_075, rtol=1e-14)
    assert_allclose(reliability(0.75, P), REL_075, rtol=1e-14)
    assert_allclose(hazard(0.75, P), HAZ_075, rtol=1e-14)
    assert_allclose(mtf(P), MTF_P, rtol=1e-14)


def test_cdf_limits():
    assert iep_cdf(0.0, P) == 0.0
    assert_allclose(iep_cdf(1e12, P), 1.0)
    with pytest.raises(DomainError):
        iep_cdf(math.nan, P)
    with pytest.raises(DomainError):
        iep_pdf(0.0, P)


def test_pdf_vanishes_at_origin():
    assert iep_pdf(1e-12, P) < 1e-10


def test_pdf_integrates_to_one():
    total, _ = integrate.quad(lambda t: iep_pdf(t, P), 0, np.inf, epsabs=1e-12, limit=200)
    assert_allclose(total, 1.0, atol=1e-6)


def test_quantile_inverts_cdf():
    u = np.linspace(0.01, 0.99, 99)
    assert_allclose(iep_cdf(iep_quantile(u, P), P), u, atol=1e-10)
    with pytest.raises(DomainError):
        iep_quantile(1.0, P)


def test_median_is_mtf():
    assert_allclose(iep_quantile(0.5, P), mtf(P), rtol=1e-13)
    # independent oracle: bisection on the cdf
    root = optimize.bisect(lambda t: iep_cdf(t, P) - 0.5, 0.01, 10, xtol=1e-15)
    assert_allclose(mtf(P), root, rtol=1e-12)


def test_quantile_of_cdf_example():
    assert_allclose(iep_quantile(0.43054, P), 0.75, atol=1e-4)


def test_isf_log_matches_quantile():
    u = np.array([1e-8, 0.3, 0.9, 1 - 1e-9])
    assert_allclose(iep_isf_log(np.log1p(-u), P), iep_quantile(u, P), rtol=1e-9)


def test_large_alpha_no_underflow():
    p = IepParams(43.8478, 7.6876)
    assert 0 < iep_pdf(0.4, p) < np.inf
    assert np.isfinite(math.log(reliability(2.5, p)))


def test_log1mexp():
    a = np.array([1e-20, 1e-5, 0.5, 0.7, 5.0, 800.0])
    assert_allclose(log1mexp(a), [math.log(-math.expm1(-v)) for v in a], rtol=1e-14)


@given(shapes, shapes, times)
def test_hazard_times_reliability_is_pdf(a, b, t):
    p = IepParams(a, b)
    pdf = iep_pdf(t, p)
    if pdf > 1e-250:
        assert_allclose(hazard(t, p) * reliability(t, p), pdf, rtol=1e-12)


@given(shapes, shapes, st.floats(1e-2, 1e2))
def test_pdf_is_cdf_derivative(a, b, t):
    p = IepParams(a, b)
    h = 1e-5 * t
    # difference the smaller tail to avoid cancellation near 0 or 1
    if iep_cdf(t, p) < 0.5:
        fd = (iep_cdf(t + h, p) - iep_cdf(t - h, p)) / (2 * h)
    else:
        fd = (reliability(t - h, p) - reliability(t + h, p)) / (2 * h)
    pdf = iep_pdf(t, p)
    if pdf > 1e-6:
        assert_allclose(fd, pdf, rtol=1e-6)


@given(shapes, shapes)
def test_cdf_monotone(a, b):
    p = IepParams(a, b)
    c = iep_cdf(np.geomspace(1e-3, 1e3, 200), p)
    assert np.all((c >= 0) & (c <= 1))
    assert np.all(np.diff(c) >= 0)


@given(st.floats(0.2, 20), st.floats(0.2, 20), st.floats(0.01, 0.99))
def test_quantile_cdf_identity(a, b, u):
    p = IepParams(a, b)
    assert_allclose(iep_cdf(iep_quantile(u, p), p), u, atol=1e-10)


@given(shapes, shapes)
def test_cdf_at_mtf_is_half(a, b):
    p = IepParams(a, b)
    assert_allclose(iep_cdf(mtf(p), p), 0.5, atol=1e-10)


def test_vectorized_rc_helpers_match_scalar():
    alpha = np.array([0.5, 3.5, 40.0])
    beta = np.array([0.7, 2.25, 8.0])
    for a, b, r, h, m in zip(alpha, beta, reliability_values(0.75, alpha, beta),
                             hazard_values(0.75, alpha, beta), mtf_values(alpha, beta)):
        p = IepParams(a, b)
        assert_allclose(r, reliability(0.75, p), rtol=1e-13)
        assert_allclose(h, hazard(0.75, p), rtol=1e-12)
        assert_allclose(m, mtf(p), rtol=1e-12)


# --- order statistics ------------------------------------------------------

@pytest.mark.parametrize("t", [0.2, 0.75, 3.0])
def test_order_stat_extremes(t):
    n = 7
    x = t / (1 + t)
    s = (1 - x**P.beta) ** P.alpha
    assert_allclose(order_stat_cdf(1, n, t, P), 1 - s**n, rtol=1e-12)
    assert_allclose(order_stat_cdf(n, n, t, P), (1 - s) ** n, rtol=1e-12)
    f, F = iep_pdf(t, P), iep_cdf(t, P)
    assert_allclose(order_stat_pdf(1, n, t, P), n * f * (1 - F) ** (n - 1), rtol=1e-12)
    assert_allclose(order_stat_pdf(n, n, t, P), n * f * F ** (n - 1), rtol=1e-12)


def test_order_stat_single_sample():
    assert_allclose(order_stat_pdf(1, 1, 0.6, P), iep_pdf(0.6, P), rtol=1e-13)


def test_order_stat_frozen():
    # mpmath binomial sum
    assert_allclose(order_stat_cdf(3, 5, 0.75, P), 0.37146596813425828185, rtol=1e-13)


def test_order_stat_pdf_integrates():
    total, _ = integrate.quad(lambda t: order_stat_pdf(3, 5, t, P), 0, np.inf, limit=200)
    assert_allclose(total, 1.0, atol=1e-6)


def test_order_stat_rank_checks():
    with pytest.raises(DomainError):
        order_stat_cdf(0, 5, 1.0, P)
    with pytest.raises(DomainError):
        order_stat_cdf(6, 5, 1.0, P)


@given(st.integers(2, 30), st.floats(0.05, 20))
def test_order_stat_monotone_in_rank(n, t):
    c = [order_stat_cdf(r, n, t, P) for r in range(1, n + 1)]
    assert np.all(np.diff(c) <= 1e-15)


# --- competitors -----------------------------------------------------------

def test_gp_exponential_branch():
    assert_allclose(competitor_pdf(1.0, GP(0.0, 1.0)), math.exp(-1))
    assert_allclose(competitor_pdf(1.0, GP(1e-13, 1.0)), math.exp(-1))


def test_gp_support():
    m = GP(0.5, 1.0)  # support (0, 2)
    assert m.logpdf(3.0) == -np.inf
    with pytest.raises(OutOfSupportError):
        competitor_pdf(3.0, m)
    assert competitor_loglik([0.5, 3.0], m) == -np.inf
    assert competitor_cdf(3.0, m) == 1.0


def test_ep_theta_one():
    x = np.array([0.1, 1.0, 4.0])
    assert_allclose(competitor_cdf(x, EP(2.5, 1.0)), 1 - (1 + x) ** -2.5, rtol=1e-14)


def test_competitor_validation():
    with pytest.raises(DomainError):
        EP(-1.0, 1.0)
    with pytest.raises(DomainError):
        GP(0.0, 0.0)
    with pytest.raises(DomainError):
        IL(1.0, math.inf)


def test_ier_loglik_on_carbon(carbon):
    # (AIC - 4) / -2 from the published comparison table
    assert_allclose(competitor_loglik(carbon.values, IER(1.2358, 1.2322)), -78.08, atol=0.05)


@pytest.mark.parametrize("model", [GP(-0.3, 1.2), GP(0.4, 2.0), GP(0.0, 0.7), EP(3.0, 5.0),
                                   IER(1.5, 0.8), IL(2.0, 1.5)])
def test_competitor_densities_are_cdf_derivatives(model):
    u = np.array([0.1, 0.4, 0.8])
    x = model.ppf(u)
    assert_allclose(model.cdf(x), u, rtol=1e-10)
    h = 1e-6 * x
    fd = (model.cdf(x + h) - model.cdf(x - h)) / (2 * h)
    assert_allclose(np.exp(model.logpdf(x)), fd, rtol=1e-6)
    upper = x.max() * 200 if not (isinstance(model, GP) and model.k > 0) else model.sigma / model.k
    total, _ = integrate.quad(lambda v: math.exp(model.logpdf(v)), 0, upper, limit=400)
    assert total == pytest.approx(1.0, abs=5e-3)
