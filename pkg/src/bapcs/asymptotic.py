"""Observed information, delta-method variances and normal-theory intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .distributions import IepParams, hazard, mtf, reliability

__all__ = [
    "NotPositiveDefiniteError",
    "ObservedInfo",
    "IntervalEstimate",
    "observed_information",
    "invert_spd",
    "z_quantile",
    "aci_parameter",
    "delta_method_gradient",
    "delta_method_variance",
    "mle_intervals",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Information matrix is singular or its inverse has a non-positive diagonal."""


@dataclass
class ObservedInfo:
    matrix: np.ndarray
    inverse: np.ndarray


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float
    level: float

    @property
    def length(self):
        return self.upper - self.lower

    def to_dict(self, target=None):
        out = {} if target is None else {"target": target}
        out.update(lower=self.lower, upper=self.upper, length=self.length, level=self.level)
        return out


def invert_spd(matrix) -> np.ndarray:
    """Inverse of a symmetric matrix by LU with partial pivoting, residual-checked."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.max(np.abs(matrix))
    if not np.allclose(matrix, matrix.T, rtol=1e-9, atol=1e-9 * scale):
        raise ValueError("matrix must be symmetric")
    try:
        inv = np.linalg.inv(matrix)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"singular matrix: {exc}") from exc
    inv = 0.5 * (inv + inv.T)
    if not np.all(np.diag(inv) > 0):
        raise NotPositiveDefiniteError("inverse has a non-positive diagonal entry")
    resid = np.max(np.sum(np.abs(matrix @ inv - np.eye(len(matrix))), axis=1))
    if not resid < 1e-8:
        raise NotPositiveDefiniteError(f"inversion residual {resid:.3g} too large")
    return inv


def observed_information(sample, fit) -> ObservedInfo:
    """Negative Hessian at the MLE, ordered (beta, alpha_1, ..., alpha_k)."""
    from .mle import log_likelihood_hessian

    info = -log_likelihood_hessian(sample, fit.alpha_hats, fit.beta_hat)
    return ObservedInfo(info, invert_spd(info))


def z_quantile(p: float) -> float:
    """Standard normal quantile."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return float(ndtri(p))


def aci_parameter(estimate: float, variance: float, gamma: float) -> IntervalEstimate:
    """``estimate -/+ z_{gamma/2} sqrt(variance)``; zero variance gives a point."""
    if not variance >= 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    half = z_quantile(1 - gamma / 2) * math.sqrt(variance)
    return IntervalEstimate(estimate - half, estimate + half, 1 - gamma)


TARGETS = ("alpha_weighted", "reliability", "hazard", "mtf")


def _rc_partials(target, alpha, beta, t):
    """(d phi / d alpha, d phi / d beta) for an RC of the IEP law."""
    if target == "alpha_weighted":
        return 1.0, 0.0
    log_x = -math.log1p(1.0 / t)
    xb = math.exp(beta * log_x)
    if target == "reliability":
        r = float(reliability(t, IepParams(alpha, beta)))
        return r * math.log1p(-xb), -r * alpha * xb * log_x / (1.0 - xb)
    if target == "hazard":
        h = float(hazard(t, IepParams(alpha, beta)))
        return h / alpha, h * (1.0 / beta + log_x / (1.0 - xb))
    if target == "mtf":
        c = -math.expm1(-math.log(2.0) / alpha)  # 1 - 2**(-1/alpha)
        y = c ** (-1.0 / beta)
        dmu_dy = -1.0 / (y - 1.0) ** 2
        dy_dbeta = y * math.log(c) / beta**2
        dy_dalpha = y * (1.0 - c) * math.log(2.0) / (beta * alpha**2 * c)
        return dmu_dy * dy_dalpha, dmu_dy * dy_dbeta
    raise ValueError(f"unknown target {target!r}")


def target_value(target, alpha, beta, t):
    p = IepParams(alpha, beta)
    return {
        "alpha_weighted": lambda: alpha,
        "reliability": lambda: float(reliability(t, p)),
        "hazard": lambda: float(hazard(t, p)),
        "mtf": lambda: mtf(p),
    }[target]()


def delta_method_gradient(fit, vcov, target: str, t: float | None = None) -> np.ndarray:
    """Gradient in (beta, alpha_1..alpha_k) with the alpha weights held fixed."""
    w = 1.0 / np.diag(vcov)[1:]
    d_alpha, d_beta = _rc_partials(target, fit.alpha_weighted, fit.beta_hat, t)
    grad = np.empty(len(w) + 1)
    grad[0] = d_beta
    grad[1:] = d_alpha * w / w.sum()
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError(f"non-finite delta-method gradient for {target}")
    return grad


def delta_method_variance(fit, vcov, target: str, t: float | None = None) -> float:
    """``grad' V grad`` for the weighted alpha or an RC evaluated at time t."""
    g = delta_method_gradient(fit, vcov, target, t)
    return float(g @ vcov @ g)


def mle_intervals(fit, gamma: float, t: float) -> dict[str, tuple[float, IntervalEstimate]]:
    """Point estimate and ACI for beta, every alpha_i, the weighted alpha and the RCs."""
    v = fit.vcov
    out = {"beta": (fit.beta_hat, aci_parameter(fit.beta_hat, v[0, 0], gamma))}
    for i, a in enumerate(fit.alpha_hats, start=1):
        out[f"alpha_{i}"] = (float(a), aci_parameter(float(a), v[i, i], gamma))
    names = {"alpha_weighted": "alpha", "reliability": "R", "hazard": "H", "mtf": "MTF"}
    for target, name in names.items():
        est = target_value(target, fit.alpha_weighted, fit.beta_hat, t)
        out[name] = (est, aci_parameter(est, delta_method_variance(fit, v, target, t), gamma))
    return out
