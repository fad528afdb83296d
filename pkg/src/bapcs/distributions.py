"""Inverted exponentiated Pareto (IEP) lifetime law, its order statistics,
and the four competitor models used for real-data comparison.

All functions accept scalars or numpy arrays. Powers of ``t / (1 + t)`` are
evaluated in log space so that large shape parameters do not underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "DomainError",
    "OutOfSupportError",
    "IepParams",
    "GP",
    "EP",
    "IER",
    "IL",
    "log1mexp",
    "iep_cdf",
    "iep_pdf",
    "iep_logpdf",
    "iep_quantile",
    "iep_isf_log",
    "reliability",
    "hazard",
    "mtf",
    "order_stat_cdf",
    "order_stat_pdf",
    "competitor_pdf",
    "competitor_cdf",
    "competitor_loglik",
]


class DomainError(ValueError):
    """Argument outside the domain of a distribution function."""


class OutOfSupportError(DomainError):
    """Point density query outside the support of a competitor model."""


def _positive_finite(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer))
            and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class IepParams:
    """Shape pair of the IEP law."""

    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive_finite("alpha", self.alpha))
        object.__setattr__(self, "beta", _positive_finite("beta", self.beta))

    family = "IEP"
    n_params = 2

    @property
    def params(self):
        return (self.alpha, self.beta)

    def cdf(self, t):
        return iep_cdf(t, self)

    def pdf(self, t):
        return iep_pdf(t, self)

    def logpdf(self, t):
        return iep_logpdf(t, self)

    def ppf(self, u):
        return iep_quantile(u, self)


def log1mexp(a):
    """``log(1 - exp(-a))`` for ``a > 0`` without cancellation."""
    a = np.asarray(a, dtype=float)
    small = a < math.log(2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, np.log(-np.expm1(-a)), np.log1p(-np.exp(-np.where(small, 1.0, a))))
    return out[()] if out.ndim == 0 else out


def _as_time(t, strict):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        if np.any(np.isnan(t)) or np.any(t == -np.inf):
            raise DomainError("time must be finite")
    if strict and np.any(t <= 0):
        raise DomainError("time must be > 0")
    if not strict and np.any(t < 0):
        raise DomainError("time must be >= 0")
    return t


def _neg_log_x(t):
    # -log(t / (1 + t)), written to stay accurate for large and small t
    with np.errstate(divide="ignore"):
        return np.log1p(1.0 / t)


def _log_surv_base(t, beta):
    """``log(1 - (t/(1+t))**beta)``; 0 at t=0 and -inf at t=inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        a = beta * _neg_log_x(t)
        out = np.where(t == 0, 0.0, log1mexp(np.where(t == 0, 1.0, a)))
    return out


def _unwrap(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def iep_cdf(t, p: IepParams):
    """Distribution function ``1 - (1 - (t/(1+t))**beta)**alpha`` for t >= 0."""
    t = _as_time(t, strict=False)
    return _unwrap(-np.expm1(p.alpha * _log_surv_base(t, p.beta)))


def reliability(t, p: IepParams):
    """Survival function ``(1 - (t/(1+t))**beta)**alpha``."""
    t = _as_time(t, strict=True)
    return _unwrap(np.exp(p.alpha * _log_surv_base(t, p.beta)))


def iep_logpdf(t, p: IepParams):
    t = _as_time(t, strict=True)
    a = p.beta * _neg_log_x(t)
    val = (math.log(p.alpha * p.beta) - a - np.log(t) - np.log1p(t)
           + (p.alpha - 1.0) * log1mexp(a))
    return _unwrap(val)


def iep_pdf(t, p: IepParams):
    """Density ``alpha beta t**(beta-1) (1+t)**-(beta+1) (1-(t/(1+t))**beta)**(alpha-1)``."""
    return _unwrap(np.exp(iep_logpdf(t, p)))


def hazard(t, p: IepParams):
    """Hazard rate, the density divided by the survival function."""
    t = _as_time(t, strict=True)
    a = p.beta * _neg_log_x(t)
    val = math.log(p.alpha * p.beta) - a - np.log(t) - np.log1p(t) - log1mexp(a)
    return _unwrap(np.exp(val))


def iep_isf_log(log_s, p: IepParams):
    """Inverse survival function from ``log S`` (``log S < 0``).

    Solves ``alpha * log(1 - x**beta) = log S`` for ``x = t/(1+t)`` and returns t.
    """
    log_s = np.asarray(log_s, dtype=float)
    if np.any(log_s >= 0) or np.any(np.isnan(log_s)):
        raise DomainError("log survival must be < 0")
    # y = 1 - S**(1/alpha) = x**beta
    log_y = np.log(-np.expm1(log_s / p.alpha))
    log_x = log_y / p.beta
    with np.errstate(over="ignore", divide="ignore"):
        t = np.exp(log_x) / -np.expm1(log_x)
    return _unwrap(t)


def iep_quantile(u, p: IepParams):
    """Closed-form inverse of :func:`iep_cdf` on ``0 < u < 1``."""
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("probability must lie strictly inside (0, 1)")
    return iep_isf_log(np.log1p(-u), p)


def mtf(p: IepParams):
    """Median time to failure ``{(1 - 2**(-1/alpha))**(-1/beta) - 1}**-1``."""
    return float(iep_isf_log(-math.log(2.0), p))


def _check_rank(r, n):
    if not (isinstance(r, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise DomainError("order statistic rank and size must be integers")
    if n < 1 or not 1 <= r <= n:
        raise DomainError(f"rank r={r} must satisfy 1 <= r <= n={n}")


def order_stat_cdf(r, n, t, p: IepParams):
    """CDF of the r-th order statistic in a sample of size n, by the binomial sum."""
    _check_rank(r, n)
    t = _as_time(t, strict=True)
    log_s = p.alpha * _log_surv_base(t, p.beta)
    log_f = np.log(-np.expm1(log_s))
    total = np.zeros_like(t)
    for j in range(r, n + 1):
        log_c = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)
        total = total + np.exp(log_c + j * log_f + (n - j) * log_s)
    return _unwrap(np.minimum(total, 1.0))


def order_stat_pdf(r, n, t, p: IepParams):
    """Density of the r-th order statistic in a sample of size n."""
    _check_rank(r, n)
    t = _as_time(t, strict=True)
    log_s = p.alpha * _log_surv_base(t, p.beta)
    log_c = gammaln(n + 1) - gammaln(r) - gammaln(n - r + 1)
    with np.errstate(divide="ignore"):
        log_f = np.log(-np.expm1(log_s))
        term_f = np.where(r == 1, 0.0, (r - 1) * log_f)
    return _unwrap(np.exp(log_c + iep_logpdf(t, p) + term_f + (n - r) * log_s))


# --- competitor models ---------------------------------------------------

GP_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class GP:
    """Generalized Pareto with shape ``k`` and scale ``sigma``.

    Support is ``{x > 0 : 1 - k x / sigma > 0}``; ``|k| < 1e-12`` is the
    exponential branch.
    """

    k: float
    sigma: float
    family = "GP"
    n_params = 2

    def __post_init__(self):
        if not math.isfinite(self.k):
            raise DomainError(f"k must be finite, got {self.k!r}")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "sigma", _positive_finite("sigma", self.sigma))

    @property
    def params(self):
        return (self.k, self.sigma)

    def _exponential(self):
        return abs(self.k) < GP_ZERO_TOL

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        if self._exponential():
            return x > 0
        return (x > 0) & (1.0 - self.k * x / self.sigma > 0)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        ok = self.in_support(x)
        xs = np.where(ok, x, 1e-300 if self.k > 0 else 1.0)
        if self._exponential():
            val = -math.log(self.sigma) - xs / self.sigma
        else:
            z = np.where(ok, 1.0 - self.k * xs / self.sigma, 1.0)
            val = -math.log(self.sigma) + (1.0 / self.k - 1.0) * np.log(z)
        return _unwrap(np.where(ok, val, -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self._exponential():
            out = -np.expm1(-np.maximum(x, 0.0) / self.sigma)
        else:
            z = np.clip(1.0 - self.k * np.maximum(x, 0.0) / self.sigma, 0.0, None)
            with np.errstate(divide="ignore"):
                out = 1.0 - np.power(z, 1.0 / self.k)
            out = np.clip(out, 0.0, 1.0)
        return _unwrap(np.where(x <= 0, 0.0, out))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if self._exponential():
            return _unwrap(-self.sigma * np.log1p(-u))
        return _unwrap(self.sigma * -np.expm1(self.k * np.log1p(-u)) / self.k)


@dataclass(frozen=True)
class EP:
    """Exponentiated Pareto, cdf ``(1 - (1 + x)**-lambda)**theta``."""

    lam: float
    theta: float
    family = "EP"
    n_params = 2

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive_finite("lam", self.lam))
        object.__setattr__(self, "theta", _positive_finite("theta", self.theta))

    @property
    def params(self):
        return (self.lam, self.theta)

    def in_support(self, x):
        return np.asarray(x, dtype=float) > 0

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        ok = x > 0
        xs = np.where(ok, x, 1.0)
        a = self.lam * np.log1p(xs)
        val = (math.log(self.lam * self.theta) + (self.theta - 1.0) * log1mexp(a)
               - (self.lam + 1.0) * np.log1p(xs))
        return _unwrap(np.where(ok, val, -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        out = np.exp(self.theta * log1mexp(self.lam * np.log1p(xs)))
        return _unwrap(np.where(x > 0, out, 0.0))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        inner = -np.expm1(np.log(u) / self.theta)  # 1 - u**(1/theta)
        return _unwrap(np.expm1(-np.log(inner) / self.lam))


@dataclass(frozen=True)
class IER:
    """Inverted exponentiated Rayleigh, cdf ``1 - (1 - exp(-beta/x**2))**alpha``."""

    alpha: float
    beta: float
    family = "IER"
    n_params = 2

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive_finite("alpha", self.alpha))
        object.__setattr__(self, "beta", _positive_finite("beta", self.beta))

    @property
    def params(self):
        return (self.alpha, self.beta)

    def in_support(self, x):
        return np.asarray(x, dtype=float) > 0

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        ok = x > 0
        xs = np.where(ok, x, 1.0)
        a = self.beta / xs**2
        val = (math.log(2.0 * self.alpha * self.beta) - 3.0 * np.log(xs) - a
               + (self.alpha - 1.0) * log1mexp(a))
        return _unwrap(np.where(ok, val, -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        out = -np.expm1(self.alpha * log1mexp(self.beta / xs**2))
        return _unwrap(np.where(x > 0, out, 0.0))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        # exp(-beta/x^2) = 1 - (1-u)**(1/alpha)
        e = -np.expm1(np.log1p(-u) / self.alpha)
        return _unwrap(np.sqrt(self.beta / -np.log(e)))


@dataclass(frozen=True)
class IL:
    """Inverse Lomax, cdf ``(1 + 1/(theta x))**-alpha``."""

    alpha: float
    theta: float
    family = "IL"
    n_params = 2

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive_finite("alpha", self.alpha))
        object.__setattr__(self, "theta", _positive_finite("theta", self.theta))

    @property
    def params(self):
        return (self.alpha, self.theta)

    def in_support(self, x):
        return np.asarray(x, dtype=float) > 0

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        ok = x > 0
        xs = np.where(ok, x, 1.0)
        val = (math.log(self.alpha / self.theta) - 2.0 * np.log(xs)
               - (self.alpha + 1.0) * np.log1p(1.0 / (self.theta * xs)))
        return _unwrap(np.where(ok, val, -np.inf))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        out = np.exp(-self.alpha * np.log1p(1.0 / (self.theta * xs)))
        return _unwrap(np.where(x > 0, out, 0.0))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return _unwrap(1.0 / (self.theta * np.expm1(-np.log(u) / self.alpha)))


CompetitorModel = GP | EP | IER | IL


def competitor_pdf(x, m):
    """Point density query; raises :class:`OutOfSupportError` outside the support."""
    if not np.all(m.in_support(x)):
        raise OutOfSupportError(f"{m.family} density queried outside its support")
    return _unwrap(np.exp(m.logpdf(x)))


def competitor_cdf(x, m):
    return m.cdf(x)


def competitor_loglik(data, m):
    """Sum of log densities; points outside the support contribute ``-inf``."""
    return float(np.sum(m.logpdf(np.asarray(data, dtype=float))))


# --- broadcasting forms for Monte Carlo draws -----------------------------

def reliability_values(t, alpha, beta):
    """Survival at a fixed time for arrays of (alpha, beta)."""
    return np.exp(np.asarray(alpha) * _log_surv_base(float(t), np.asarray(beta, dtype=float)))


def hazard_values(t, alpha, beta):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a = beta * math.log1p(1.0 / t)
    return np.exp(np.log(alpha * beta) - a - math.log(t) - math.log1p(t) - log1mexp(a))


def mtf_values(alpha, beta):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    log_x = np.log(-np.expm1(-math.log(2.0) / alpha)) / beta
    return np.exp(log_x) / -np.expm1(log_x)
