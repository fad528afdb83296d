"""Maximum likelihood for block adaptive progressive Type-II censored IEP data.

Facility i has its own alpha_i and all facilities share beta. For fixed beta
every alpha_i has a closed-form maximizer, so beta is found as the root of
the profile score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .censoring import BapcsSample, FacilitySample
from .distributions import IepParams, hazard, log1mexp, mtf, reliability

__all__ = [
    "EstimationError",
    "ConvergenceError",
    "NumericError",
    "MleFit",
    "RcEstimates",
    "FacilityTerms",
    "log_likelihood",
    "log_likelihood_gradient",
    "log_likelihood_hessian",
    "alpha_closed_form",
    "profile_score",
    "solve_mle",
    "weighted_alpha",
    "rc_estimates",
    "solve_complete",
]

SCORE_TOL = 1e-10
BETA_GUESS = 1.0
BRACKET_FACTOR = 4.0
BETA_LIMITS = (1e-6, 1e6)


class EstimationError(RuntimeError):
    """Estimation cannot proceed on this sample."""


class ConvergenceError(EstimationError):
    pass


class NumericError(EstimationError):
    pass


class FacilityTerms:
    """Per-facility constants reused by every likelihood evaluation.

    ``weights`` are ``1 + r_j`` with ``r_j`` the effective withdrawals, so the
    removal sums of the likelihood collapse to ``sum_j weights_j * log(1 - t_j**beta)``.
    """

    __slots__ = ("m", "log_x", "log_t", "log1p_t", "weights", "sum_log_x")

    def __init__(self, facility: FacilitySample):
        self._fill(facility.times, 1.0 + facility.effective_removals)

    @classmethod
    def complete(cls, times):
        """Terms for an uncensored sample; ties are allowed."""
        t = np.asarray(times, dtype=float)
        obj = cls.__new__(cls)
        obj._fill(t, np.ones_like(t))
        return obj

    def _fill(self, t, weights):
        self.m = len(t)
        self.log_t = np.log(t)
        self.log1p_t = np.log1p(t)
        self.log_x = -np.log1p(1.0 / t)
        self.weights = weights
        self.sum_log_x = float(self.log_x.sum())

    def log_surv(self, beta):
        """``log(1 - x_j**beta)`` for every failure."""
        return log1mexp(-beta * self.log_x)

    def h(self, beta):
        """``x**beta log x / (1 - x**beta)``, minus the beta-derivative of log_surv."""
        with np.errstate(over="ignore"):  # ratio tends to 0, which is the limit
            return self.log_x / np.expm1(-beta * self.log_x)

    def h_prime(self, beta):
        a = -beta * self.log_x
        with np.errstate(over="ignore"):
            return self.log_x**2 / (np.expm1(a) * -np.expm1(-a))

    def d(self, beta):
        """Weighted log-survival sum; ``alpha_hat = -m / d``."""
        return float(self.weights @ self.log_surv(beta))


def _terms(sample):
    return [FacilityTerms(f) for f in sample.facilities]


@dataclass
class MleFit:
    beta_hat: float
    alpha_hats: np.ndarray
    alpha_weighted: float
    loglik_at_max: float
    score_residual: float
    vcov: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self):
        return len(self.alpha_hats)

    @property
    def weights(self):
        """Inverse observed variances of the alpha_i, the weights of the combined alpha."""
        if self.vcov is None:
            raise EstimationError("fit has no variance matrix")
        return 1.0 / np.diag(self.vcov)[1:]

    def params(self):
        return IepParams(self.alpha_weighted, self.beta_hat)

    def to_dict(self):
        return {
            "beta_hat": self.beta_hat,
            "alpha_hats": [float(a) for a in self.alpha_hats],
            "alpha_weighted": self.alpha_weighted,
            "loglik": self.loglik_at_max,
            "score_residual": self.score_residual,
        }


@dataclass(frozen=True)
class RcEstimates:
    t: float
    r_hat: float
    h_hat: float
    mtf_hat: float


def _check_params(alphas, beta, k):
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (k,):
        raise ValueError(f"need {k} alpha values, got {alphas.shape}")
    if not (np.all(alphas > 0) and np.all(np.isfinite(alphas)) and beta > 0 and math.isfinite(beta)):
        from .distributions import DomainError
        raise DomainError("all parameters must be positive and finite")
    return alphas


def log_likelihood(sample: BapcsSample, alphas, beta: float) -> float:
    """Log-likelihood without the combinatorial constants."""
    alphas = _check_params(alphas, beta, sample.k)
    total = 0.0
    for a, f in zip(alphas, sample.facilities):
        ft = FacilityTerms(f)
        ls = ft.log_surv(beta)
        r = f.effective_removals
        total += (ft.m * (math.log(a) + math.log(beta))
                  + float(np.sum((beta - 1.0) * ft.log_t - (beta + 1.0) * ft.log1p_t))
                  + (a - 1.0) * float(ls.sum()) + a * float(r @ ls))
    return total


def log_likelihood_gradient(sample: BapcsSample, alphas, beta: float) -> np.ndarray:
    """Analytic gradient ordered (beta, alpha_1, ..., alpha_k)."""
    alphas = _check_params(alphas, beta, sample.k)
    grad = np.zeros(sample.k + 1)
    for i, (a, ft) in enumerate(zip(alphas, _terms(sample))):
        h = ft.h(beta)
        grad[0] += ft.m / beta + ft.sum_log_x + h.sum() - a * float(ft.weights @ h)
        grad[i + 1] = ft.m / a + ft.d(beta)
    return grad


def log_likelihood_hessian(sample: BapcsSample, alphas, beta: float) -> np.ndarray:
    """Analytic Hessian ordered (beta, alpha_1, ..., alpha_k)."""
    alphas = _check_params(alphas, beta, sample.k)
    k = sample.k
    hess = np.zeros((k + 1, k + 1))
    for i, (a, ft) in enumerate(zip(alphas, _terms(sample))):
        hp = ft.h_prime(beta)
        hess[0, 0] += -ft.m / beta**2 + hp.sum() - a * float(ft.weights @ hp)
        cross = -float(ft.weights @ ft.h(beta))
        hess[0, i + 1] = hess[i + 1, 0] = cross
        hess[i + 1, i + 1] = -ft.m / a**2
    if not np.all(np.isfinite(hess)):
        raise NumericError("non-finite Hessian entry")
    return hess


def alpha_closed_form(facility: FacilitySample, beta: float) -> float:
    """Maximizer of the log-likelihood in alpha_i for fixed beta."""
    d = FacilityTerms(facility).d(beta)
    if not d < 0:
        raise EstimationError(f"degenerate facility: log-survival sum is {d}")
    return -facility.m / d


def _score(beta, terms):
    total = 0.0
    for i, ft in enumerate(terms):
        h = ft.h(beta)
        d = float(ft.weights @ ft.log_surv(beta))
        num = float(ft.weights @ h)
        part = ft.m / beta + ft.sum_log_x + float(h.sum()) + ft.m * num / d
        if not math.isfinite(part):
            raise NumericError(f"non-finite profile score term in facility {i} at beta={beta}")
        total += part
    return total


def profile_score(beta: float, sample: BapcsSample) -> float:
    """Derivative of the profile log-likelihood in beta (alpha_i at their closed forms)."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return _score(beta, _terms(sample))


def _bracket(f, guess):
    lo_lim, hi_lim = BETA_LIMITS
    a = guess
    fa = f(a)
    b, fb = a, fa
    if fa > 0:
        while fb > 0:
            a, fa = b, fb
            b = b * BRACKET_FACTOR
            if b > hi_lim:
                raise ConvergenceError(f"no sign change of the profile score up to beta={hi_lim}")
            fb = f(b)
        return a, b
    while fa <= 0:
        b, fb = a, fa
        a = a / BRACKET_FACTOR
        if a < lo_lim:
            raise ConvergenceError(f"no sign change of the profile score down to beta={lo_lim}")
        fa = f(a)
    return a, b


def solve_beta(sample: BapcsSample, guess: float = BETA_GUESS) -> float:
    terms = _terms(sample)
    if all(ft.m < 2 for ft in terms):
        raise EstimationError("need at least one facility with two or more failures")
    f = lambda b: _score(b, terms)  # noqa: E731
    a, b = _bracket(f, guess)
    root = brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(root)


def solve_complete(times, guess: float = BETA_GUESS) -> tuple[IepParams, float]:
    """MLE of (alpha, beta) from an uncensored sample, with its log-likelihood.

    Same profile method as the censored case with a single block and no
    withdrawals; repeated values are allowed.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) < 2 or not np.all((t > 0) & np.isfinite(t)):
        raise EstimationError("need at least two positive finite observations")
    if np.all(t == t[0]):
        raise EstimationError("all observations equal; the likelihood is unbounded")
    terms = [FacilityTerms.complete(t)]
    f = lambda b: _score(b, terms)  # noqa: E731
    beta = float(brentq(f, *_bracket(f, guess), xtol=1e-300, rtol=4 * np.finfo(float).eps,
                        maxiter=200))
    ft = terms[0]
    ls = ft.log_surv(beta)
    alpha = -ft.m / float(ls.sum())
    loglik = (ft.m * math.log(alpha * beta)
              + float(np.sum((beta - 1.0) * ft.log_t - (beta + 1.0) * ft.log1p_t))
              + (alpha - 1.0) * float(ls.sum()))
    return IepParams(alpha, beta), loglik


def weighted_alpha(alpha_hats, variances) -> float:
    """Inverse-variance weighted mean of the facility alphas."""
    alpha_hats = np.asarray(alpha_hats, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if np.any(~(variances > 0)):
        raise ValueError("variances must be positive")
    w = 1.0 / variances
    return float(w @ alpha_hats / w.sum())


def solve_mle(sample: BapcsSample, guess: float = BETA_GUESS) -> MleFit:
    """Joint MLE of (beta, alpha_1..alpha_k) and the weighted alpha.

    The weights are the inverse diagonal of the inverted observed information,
    which is stored on the fit as ``vcov``.
    """
    from .asymptotic import invert_spd

    beta = solve_beta(sample, guess)
    alphas = np.array([alpha_closed_form(f, beta) for f in sample.facilities])
    info = -log_likelihood_hessian(sample, alphas, beta)
    vcov = invert_spd(info)
    return MleFit(
        beta_hat=beta,
        alpha_hats=alphas,
        alpha_weighted=weighted_alpha(alphas, np.diag(vcov)[1:]),
        loglik_at_max=log_likelihood(sample, alphas, beta),
        score_residual=profile_score(beta, sample),
        vcov=vcov,
    )


def rc_estimates(fit: MleFit, t: float) -> RcEstimates:
    """Plug-in reliability, hazard and median lifetime at the MLE."""
    p = fit.params()
    return RcEstimates(t=t, r_hat=reliability(t, p), h_hat=hazard(t, p), mtf_hat=mtf(p))
