"""Real-data comparison of the IEP law with four competitors: maximum
likelihood fits, Kolmogorov-Smirnov tests, information criteria and the
series behind the usual diagnostic plots.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .distributions import EP, GP, IER, IL, IepParams, competitor_loglik
from .mle import solve_complete

__all__ = [
    "FitError",
    "ParseError",
    "DataSet",
    "GofReport",
    "FAMILIES",
    "parse_values",
    "load_carbon_fibres",
    "fit_model",
    "ks_statistic",
    "ks_pvalue",
    "info_criteria",
    "gof_report",
    "gof_table",
    "report_csv",
    "plot_data",
    "write_plot_data",
]

FAMILIES = ("IEP", "GP", "EP", "IER", "IL")
PARAM_NAMES = {
    "IEP": ("alpha", "beta"),
    "GP": ("k", "sigma"),
    "EP": ("lambda", "theta"),
    "IER": ("alpha", "beta"),
    "IL": ("alpha", "theta"),
}
N_STARTS = 5
SIMPLEX_TOL = 1e-8


class FitError(RuntimeError):
    """No start of the likelihood search converged."""


class ParseError(ValueError):
    """Malformed data file; the message names the line and column."""


@dataclass(frozen=True, eq=False)
class DataSet:
    """Positive observations; ``values`` is a sorted copy."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size < 2:
            raise ValueError("a data set needs at least two values")
        if not np.all(np.isfinite(v) & (v > 0)):
            raise ValueError("data values must be positive and finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return len(self.values)


_TOKEN = re.compile(r"[^\s,]+")


def parse_values(text: str) -> DataSet:
    """Comma and/or whitespace separated positive decimals; ``#`` starts a comment."""
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for match in _TOKEN.finditer(body):
            tok, col = match.group(), match.start() + 1
            try:
                v = float(tok)
            except ValueError:
                raise ParseError(f"line {lineno}, column {col}: not a number: {tok!r}") from None
            if not (math.isfinite(v) and v > 0):
                raise ParseError(f"line {lineno}, column {col}: value must be positive, got {tok}")
            values.append(v)
    if len(values) < 2:
        raise ParseError(f"need at least two values, found {len(values)}")
    return DataSet(np.array(values))


def load_carbon_fibres() -> DataSet:
    """The bundled 69 carbon-fibre tensile strengths (GPa)."""
    text = resources.files("bapcs").joinpath("data/carbon_fibres.txt").read_text()
    return parse_values(text)


# --- fitting ---------------------------------------------------------------

def _gp_model(u):
    # shape restricted to k <= 0 (unbounded support)
    return GP(min(u[0], 0.0), math.exp(u[1]))


_BUILDERS = {
    "GP": _gp_model,
    "EP": lambda u: EP(math.exp(u[0]), math.exp(u[1])),
    "IER": lambda u: IER(math.exp(u[0]), math.exp(u[1])),
    "IL": lambda u: IL(math.exp(u[0]), math.exp(u[1])),
}


def _starts(family, x):
    mean = float(x.mean())
    if family == "GP":
        base = np.array([-0.1, math.log(mean)])
    elif family == "IER":
        base = np.array([0.0, 2.0 * math.log(float(np.median(x)))])
    else:
        base = np.zeros(2)
    offsets = np.array([[0, 0], [1, 1], [-1, -1], [2, -1], [-1, 2]], dtype=float)
    return base + offsets[:N_STARTS]


def _fit_competitor(family, x):
    build = _BUILDERS[family]

    def nll(u):
        if not np.all(np.isfinite(u)) or np.any(np.abs(u) > 700):
            return np.inf
        try:
            val = -competitor_loglik(x, build(u))
        except ValueError:
            return np.inf
        return val if math.isfinite(val) else np.inf

    best, failures = None, []
    for u0 in _starts(family, x):
        res = optimize.minimize(nll, u0, method="Nelder-Mead",
                                options={"xatol": SIMPLEX_TOL, "fatol": 1e-12,
                                         "maxiter": 20000, "maxfev": 40000})
        if not (res.success and math.isfinite(res.fun)):
            failures.append(f"start {u0.tolist()}: {res.message}")
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitError(f"{family}: no start converged; " + "; ".join(failures))
    model = build(best.x)
    if family == "GP" and abs(model.k) < 1e-12:
        model = GP(0.0, model.sigma)
    return model, -float(best.fun)


def fit_model(data: DataSet, family: str):
    """Maximum likelihood fit; returns ``(model, loglik)``.

    IEP uses the profile-score root. The competitors use Nelder-Mead in
    log-parameter space from five starts, keeping the best.
    """
    x = data.values
    if family == "IEP":
        return solve_complete(x)
    if family not in _BUILDERS:
        raise ValueError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    return _fit_competitor(family, x)


# --- tests and criteria ----------------------------------------------------

def ks_statistic(data, cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance between the empirical and a model cdf."""
    x = np.sort(np.asarray(data.values if isinstance(data, DataSet) else data, dtype=float))
    n = len(x)
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_pvalue(d: float, n: int, method: str = "asymptotic") -> float:
    """Upper tail of the one-sample Kolmogorov statistic.

    ``"asymptotic"`` is the limiting Kolmogorov law at ``sqrt(n) d`` and
    reproduces the published table; ``"exact"`` is the finite-n law.
    """
    if not 0 <= d <= 1:
        raise ValueError(f"d must lie in [0, 1], got {d}")
    if d == 0:
        return 1.0
    if d == 1:
        return 0.0
    if method == "asymptotic":
        return float(stats.kstwobign.sf(math.sqrt(n) * d))
    if method == "exact":
        return float(stats.kstwo.sf(d, n))
    raise ValueError(f"unknown method {method!r}")


def info_criteria(loglik: float, p: int, n: int) -> tuple[float, float, float, float]:
    """(AIC, BIC, CAIC, HQIC)."""
    if n < 2 or p < 1:
        raise ValueError("need n >= 2 and p >= 1")
    dev = -2.0 * loglik
    ln_n = math.log(n)
    return (dev + 2 * p, dev + p * ln_n, dev + p * (ln_n + 1), dev + 2 * p * math.log(ln_n))


@dataclass
class GofReport:
    model_id: str
    model: object
    params: tuple[float, ...]
    loglik: float
    aic: float
    bic: float
    caic: float
    hqic: float
    ks_stat: float
    ks_pvalue: float

    @property
    def param_names(self):
        return PARAM_NAMES[self.model_id]


def gof_report(data: DataSet, family: str, ks_method: str = "asymptotic") -> GofReport:
    model, ll = fit_model(data, family)
    aic, bic, caic, hqic = info_criteria(ll, model.n_params, data.n)
    d = ks_statistic(data, model.cdf)
    return GofReport(family, model, tuple(float(v) for v in model.params), ll,
                     aic, bic, caic, hqic, d, ks_pvalue(d, data.n, ks_method))


def gof_table(data: DataSet, families: Sequence[str] = FAMILIES,
              ks_method: str = "asymptotic") -> list[GofReport]:
    return [gof_report(data, f, ks_method) for f in families]


TABLE_HEADER = ["Model", "Pars.", "MLE", "AIC", "BIC", "CAIC", "HQIC", "K-S", "p-value"]


def report_csv(reports: Sequence[GofReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for r in reports:
        w.writerow([
            r.model_id,
            "(" + ", ".join(r.param_names) + ")",
            "(" + ", ".join(format(v, ".10g") for v in r.params) + ")",
            *(format(v, ".10g") for v in (r.aic, r.bic, r.caic, r.hqic, r.ks_stat, r.ks_pvalue)),
        ])
    return buf.getvalue()


# --- plot series -----------------------------------------------------------

def _fmt(v):
    return format(float(v), ".10g")


def plot_data(data: DataSet, fits: Sequence[GofReport]) -> dict[str, tuple[list[str], list[list[float]]]]:
    """Series for the ECDF, histogram, P-P, Q-Q and scaled TTT plots.

    Returns ``{file name: (header, rows)}``.
    """
    x = data.values
    n = data.n
    ids = [f.model_id for f in fits]
    out = {}

    ux, counts = np.unique(x, return_counts=True)
    ecdf = np.cumsum(counts) / n
    cols = [np.asarray(f.model.cdf(ux), dtype=float) for f in fits]
    out["ecdf.csv"] = (["x", "ecdf", *ids],
                       [[a, e, *(c[i] for c in cols)] for i, (a, e) in enumerate(zip(ux, ecdf))])

    bins = math.ceil(1 + math.log2(n))
    dens, edges = np.histogram(x, bins=bins, density=True)
    out["hist.csv"] = (["bin_left", "bin_right", "density"],
                       [[edges[i], edges[i + 1], dens[i]] for i in range(bins)])
    grid = np.linspace(edges[0], edges[-1], 200)
    pdfs = [np.exp(np.asarray(f.model.logpdf(grid), dtype=float)) for f in fits]
    out["hist_pdf.csv"] = (["x", *ids], [[g, *(p[i] for p in pdfs)] for i, g in enumerate(grid)])

    pos = np.arange(1, n + 1) / (n + 1)
    for f in fits:
        fx = np.asarray(f.model.cdf(x), dtype=float)
        out[f"pp_{f.model_id}.csv"] = (["empirical", "model"], [[a, b] for a, b in zip(pos, fx)])
        q = np.asarray(f.model.ppf(pos), dtype=float)
        out[f"qq_{f.model_id}.csv"] = (["observed", "model"], [[a, b] for a, b in zip(x, q)])

    total = x.sum()
    i = np.arange(1, n + 1)
    ttt = (np.cumsum(x) + (n - i) * x) / total
    ttt[-1] = 1.0  # exact by construction; avoid rounding drift
    out["ttt.csv"] = (["i_over_n", "scaled_ttt"], [[a, b] for a, b in zip(i / n, ttt)])
    return out


def write_plot_data(series, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (header, rows) in series.items():
        path = out_dir / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[_fmt(v) for v in row] for row in rows])
        paths.append(path)
    return paths
