"""Pivotal inference: chi-square pivots for beta and alpha_i, the pivot
inversion, and the Monte Carlo generalized confidence intervals.

With ``L_j(beta) = log(1 - (T_j/(1+T_j))**beta)`` and withdrawal weights
``c_j = 1 + r_j`` the partial sums

    W_j(beta) / alpha = -sum_{l<j} c_l L_l - Gamma_j L_j

are cumulative sums of unit exponential spacings at the true parameters, so
``-2 sum_j log(W_j / W_m)`` is chi-square with ``2(m-1)`` degrees of freedom
whatever alpha is, and ``2 W_m`` is chi-square with ``2m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C

from .asymptotic import IntervalEstimate
from .censoring import BapcsSample, FacilitySample
from .distributions import hazard_values, log1mexp, mtf_values, reliability_values

__all__ = [
    "PivotError",
    "PivotalDraws",
    "PivotalSummary",
    "w_partial",
    "phi",
    "pivot_p",
    "pivot_df",
    "solve_pivot",
    "solve_pivot_many",
    "chi_square_draw",
    "algorithm1",
    "gci",
]

BETA_RANGE = (1e-8, 1e8)
SOLVE_RTOL = 1e-10
MAX_RETRIES = 10
DEFAULT_DRAWS = 10_000


class PivotError(RuntimeError):
    """Pivot undefined for this sample, or the pivot equation has no solution."""


class _Facility:
    __slots__ = ("m", "n", "log_x", "c", "risk", "prefix_c")

    def __init__(self, f: FacilitySample):
        self.m, self.n = f.m, f.n
        self.log_x = -np.log1p(1.0 / f.times)
        self.c = 1.0 + f.effective_removals
        self.prefix_c = np.concatenate([[0.0], np.cumsum(self.c)[:-1]])
        # n - sum_{l<j}(r_l + 1); equals the risk set size at failure j
        self.risk = f.n - self.prefix_c

    def w(self, beta):
        """W_j / alpha for all j; rows follow the leading shape of ``beta``."""
        b = np.asarray(beta, dtype=float)[..., None]
        L = log1mexp(-b * self.log_x)
        cl = self.c * L
        return -(np.cumsum(cl, axis=-1) - cl) - self.risk * L

    def w_and_slope(self, beta):
        b = np.asarray(beta, dtype=float)[..., None]
        a = -b * self.log_x
        L = log1mexp(a)
        with np.errstate(over="ignore"):
            h = self.log_x / np.expm1(a)  # minus the beta-derivative of L
        cl, ch = self.c * L, self.c * h
        w = -(np.cumsum(cl, axis=-1) - cl) - self.risk * L
        dw = (np.cumsum(ch, axis=-1) - ch) + self.risk * h
        return w, dw

    def phi(self, beta):
        """W_m / alpha, i.e. ``-sum_j c_j L_j``."""
        b = np.asarray(beta, dtype=float)[..., None]
        return -(log1mexp(-b * self.log_x) @ self.c)


def _facilities(sample):
    return [_Facility(f) for f in sample.facilities]


def w_partial(facility: FacilitySample, beta: float, j: int) -> float:
    """``W_j / alpha_i`` for 1-based failure index j."""
    if not 1 <= j <= facility.m:
        raise IndexError(f"j={j} outside [1, {facility.m}]")
    return float(_Facility(facility).w(beta)[j - 1])


def phi(facility: FacilitySample, beta):
    """``W_m / alpha_i``; ``2 alpha_i phi(beta_true)`` is chi-square(2m)."""
    out = _Facility(facility).phi(beta)
    return float(out) if np.ndim(out) == 0 else out


def _require_pivot(facs):
    small = [i for i, f in enumerate(facs) if f.m < 2]
    if small:
        raise PivotError(f"facilities {small} have fewer than two failures; pivot undefined")


def _pivot(beta, facs):
    total = 0.0
    for f in facs:
        lw = np.log(f.w(beta))
        total = total - 2.0 * (lw[..., :-1].sum(axis=-1) - (f.m - 1) * lw[..., -1])
    return total


def _pivot_and_slope(beta, facs):
    p = 0.0
    dp = 0.0
    for f in facs:
        w, dw = f.w_and_slope(beta)
        lw = np.log(w)
        r = dw / w
        p = p - 2.0 * (lw[..., :-1].sum(axis=-1) - (f.m - 1) * lw[..., -1])
        dp = dp - 2.0 * (r[..., :-1].sum(axis=-1) - (f.m - 1) * r[..., -1])
    return p, dp


def pivot_p(beta, sample: BapcsSample):
    """Sum over facilities of ``-2 sum_{j<m} log(W_j / W_m)``.

    Chi-square with ``2 sum(m_i - 1)`` degrees of freedom at the true beta.
    The function increases strictly in beta, from 0 towards infinity.
    """
    facs = _facilities(sample)
    _require_pivot(facs)
    out = _pivot(beta, facs)
    return float(out) if np.ndim(out) == 0 else out


def pivot_df(sample: BapcsSample) -> int:
    return 2 * sum(f.m - 1 for f in sample.facilities)


def _bracket(target, facs):
    lo, hi = 1.0, 1.0
    while _pivot(lo, facs) > target:
        lo /= 4.0
        if lo < BETA_RANGE[0]:
            raise PivotError(f"pivot target {target} below the pivot range")
    while _pivot(hi, facs) < target:
        hi *= 4.0
        if hi > BETA_RANGE[1]:
            raise PivotError(f"pivot target {target} above the pivot range")
    return lo, hi


def solve_pivot(target: float, sample: BapcsSample) -> float:
    """Unique beta with ``pivot_p(beta) = target``, by bracketing and bisection."""
    if not target > 0:
        raise PivotError("pivot target must be positive")
    facs = _facilities(sample)
    _require_pivot(facs)
    lo, hi = _bracket(target, facs)
    while hi - lo > SOLVE_RTOL * 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _pivot(mid, facs) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _newton_many(targets, lo, hi, facs, rtol=1e-14, max_iter=100):
    """Vectorized safeguarded Newton; ``lo``/``hi`` bracket every root."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        p, dp = _pivot_and_slope(x, facs)
        f = p - targets
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / dp
        nxt = x - step
        bad = ~np.isfinite(nxt) | (nxt <= lo) | (nxt >= hi)
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        done = np.abs(nxt - x) <= rtol * np.abs(x)
        x = nxt
        if np.all(done | (f == 0)):
            return x
    return x


def solve_pivot_many(targets, sample: BapcsSample, degree: int = 32) -> np.ndarray:
    """Invert the pivot at many targets at once.

    The exact inverse is solved at Chebyshev nodes spanning the targets and
    interpolated in ``log beta``. The interpolant is checked against exact
    solves at probe points; if the check fails the degree is doubled, and
    ultimately every target is solved by safeguarded Newton.
    """
    targets = np.asarray(targets, dtype=float)
    facs = _facilities(sample)
    _require_pivot(facs)
    if np.any(~(targets > 0)):
        raise PivotError("pivot targets must be positive")
    t_lo, t_hi = float(targets.min()), float(targets.max())
    b_lo, _ = _bracket(t_lo, facs)
    _, b_hi = _bracket(t_hi, facs)

    def exact(q):
        q = np.atleast_1d(q)
        return _newton_many(q, np.full(q.shape, b_lo), np.full(q.shape, b_hi), facs)

    if targets.size <= 4 * degree or t_hi - t_lo <= 1e-12 * t_hi:
        return exact(targets).reshape(targets.shape)
    half, mid = 0.5 * (t_hi - t_lo), 0.5 * (t_hi + t_lo)
    probe_x = np.cos(np.pi * (np.arange(16) + 0.25) / 16)
    probe_beta = exact(mid + half * probe_x)
    while degree <= 128:
        coef = C.chebinterpolate(lambda x: np.log(exact(mid + half * x)), degree)
        approx = np.exp(C.chebval(probe_x, coef))
        if np.max(np.abs(approx / probe_beta - 1.0)) < 0.1 * SOLVE_RTOL:
            return np.exp(C.chebval((targets - mid) / half, coef))
        degree *= 2
    return exact(targets).reshape(targets.shape)


def chi_square_draw(df, rng: np.random.Generator, size=None):
    """Chi-square variates as twice Gamma(df/2) variates.

    Gamma variates come from the Marsaglia-Tsang squeeze/rejection method;
    shapes below one are boosted by ``U**(1/a)``.
    """
    if not df > 0:
        raise ValueError("degrees of freedom must be positive")
    shape = float(df) / 2.0
    count = 1 if size is None else int(np.prod(size))
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        batch = need + 16 + need // 20
        x = rng.standard_normal(batch)
        u = rng.random(batch)
        v = (1.0 + c * x) ** 3
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = (v > 0) & (
                (u < 1.0 - 0.0331 * x**4)
                | (np.log(u) < 0.5 * x**2 + d * (1.0 - v + np.log(v)))
            )
        got = (d * v)[ok][:need]
        out[filled:filled + got.size] = got
        filled += got.size
    if boost:
        out *= rng.random(count) ** (1.0 / shape)
    out *= 2.0
    return float(out[0]) if size is None else out.reshape(size)


@dataclass
class PivotalDraws:
    beta: np.ndarray
    alpha_i: np.ndarray  # shape (N, k)
    alpha: np.ndarray
    r: np.ndarray
    h: np.ndarray
    mtf: np.ndarray
    weights: np.ndarray

    @property
    def n_draws(self):
        return len(self.beta)

    def series(self):
        """Named draw series in reporting order."""
        out = {"beta": self.beta}
        for i in range(self.alpha_i.shape[1]):
            out[f"alpha_{i + 1}"] = self.alpha_i[:, i]
        out.update(alpha=self.alpha, R=self.r, H=self.h, MTF=self.mtf)
        return out


@dataclass
class PivotalSummary:
    estimates: dict[str, float]
    variances: dict[str, float]
    intervals: dict[str, IntervalEstimate]
    n_draws: int
    retries: int = 0

    def to_dict(self):
        return {
            "method": "pivotal",
            "n_draws": self.n_draws,
            "estimates": self.estimates,
            "variances": self.variances,
            "intervals": [iv.to_dict(name) for name, iv in self.intervals.items()],
        }


def _floor_index(x):
    # guards products such as 10000 * 0.975 landing a hair under an integer
    return math.floor(x + 1e-9)


def gci(draws, gamma: float) -> IntervalEstimate:
    """Percentile interval ``(theta_[N gamma/2], theta_[N(1 - gamma/2)])``, 1-based floor ranks."""
    s = np.sort(np.asarray(draws, dtype=float))
    n = len(s)
    lo = min(max(_floor_index(n * gamma / 2), 1), n)
    hi = min(max(_floor_index(n * (1 - gamma / 2)), 1), n)
    return IntervalEstimate(float(s[lo - 1]), float(s[hi - 1]), 1 - gamma)


def algorithm1(sample: BapcsSample, n_draws: int, gamma: float, t: float,
               rng: np.random.Generator) -> tuple[PivotalDraws, PivotalSummary]:
    """Monte Carlo pivotal estimation of beta, the alphas and the RCs at time t.

    The alpha weights are inverse variances of the alpha_i draws, computed
    once over all draws and then applied to every draw.
    """
    facs = _facilities(sample)
    _require_pivot(facs)
    df = 2 * sum(f.m - 1 for f in facs)
    targets = chi_square_draw(df, rng, n_draws)
    beta = np.full(n_draws, np.nan)
    retries = 0
    todo = np.arange(n_draws)
    for attempt in range(MAX_RETRIES + 1):
        try:
            beta[todo] = solve_pivot_many(targets[todo], sample)
        except PivotError:
            pass
        todo = np.flatnonzero(~(np.isfinite(beta) & (beta > 0)))
        if todo.size == 0:
            break
        if attempt == MAX_RETRIES:
            raise PivotError(f"{todo.size} pivot solves still failing after {MAX_RETRIES} redraws; "
                             f"targets {targets[todo][:5]}")
        retries += todo.size
        targets[todo] = chi_square_draw(df, rng, todo.size)
    rho = np.column_stack([chi_square_draw(2 * f.m, rng, n_draws) for f in facs])
    phis = np.column_stack([f.phi(beta) for f in facs])
    alpha_i = rho / (2.0 * phis)
    var_i = alpha_i.var(axis=0)
    weights = 1.0 / var_i
    alpha = alpha_i @ weights / weights.sum()
    draws = PivotalDraws(
        beta=beta,
        alpha_i=alpha_i,
        alpha=alpha,
        r=reliability_values(t, alpha, beta),
        h=hazard_values(t, alpha, beta),
        mtf=mtf_values(alpha, beta),
        weights=weights,
    )
    series = draws.series()
    summary = PivotalSummary(
        estimates={k: float(v.mean()) for k, v in series.items()},
        variances={k: float(v.var()) for k, v in series.items()},
        intervals={k: gci(v, gamma) for k, v in series.items()},
        n_draws=n_draws,
        retries=retries,
    )
    return draws, summary
