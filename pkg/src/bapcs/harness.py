"""Simulation-study driver: repeated simulation, MLE and pivotal inference,
and per-target summaries (mean, bias, variance, mean interval, mean length).
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .asymptotic import mle_intervals
from .censoring import BlockDesign, FacilityDesign, dumps, plan_from_template, simulate_block
from .distributions import IepParams, hazard, mtf, reliability
from .mle import solve_mle
from .pivotal import algorithm1

__all__ = [
    "SETUPS",
    "StudyConfig",
    "SummaryRow",
    "builtin_setup",
    "true_values",
    "run_replication",
    "run_study",
    "emit_table",
    "parse_table",
    "table_filename",
    "write_manifest",
    "worker_count",
]

log = logging.getLogger(__name__)

# setup id -> (threshold, n_i, m_i)
SETUPS = {
    1: (0.75, (55, 45, 46, 54), (45, 36, 34, 45)),
    2: (0.75, (55, 60, 50, 60), (44, 50, 40, 46)),
    3: (0.75, (60, 65, 65, 60), (53, 57, 58, 52)),
    4: (0.5, (38, 42, 43, 37, 40), (32, 32, 38, 28, 30)),
    5: (0.5, (44, 48, 40, 45, 48), (33, 39, 32, 36, 40)),
    6: (0.5, (50, 57, 45, 50, 48), (45, 51, 39, 45, 40)),
}
FAST_REPLICATIONS = 250
METHODS = ("MLE", "pivotal")


def builtin_setup(setup_id: int, plan_template: int = 1) -> BlockDesign:
    """Block design of a built-in setup with the given withdrawal template."""
    if setup_id not in SETUPS:
        raise ValueError(f"unknown setup {setup_id!r}; expected 1..6")
    threshold, ns, ms = SETUPS[setup_id]
    return BlockDesign(tuple(FacilityDesign(plan_from_template(plan_template, n, m), threshold)
                             for n, m in zip(ns, ms)))


@dataclass(frozen=True)
class StudyConfig:
    setup_id: int
    plan_template: int = 1
    replications: int = 2500
    true_alpha: float = 3.5
    true_beta: float = 2.25
    t_eval: float = 0.75
    gamma: float = 0.05
    pivotal_draws: int = 10_000
    master_seed: int = 42

    def __post_init__(self):
        if self.setup_id not in SETUPS:
            raise ValueError(f"unknown setup {self.setup_id!r}")
        if self.plan_template not in (1, 2, 3):
            raise ValueError(f"unknown plan template {self.plan_template!r}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.pivotal_draws < 2:
            raise ValueError("need at least two pivotal draws")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        IepParams(self.true_alpha, self.true_beta)
        if not self.t_eval > 0:
            raise ValueError("t_eval must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def fast(self):
        return replace(self, replications=FAST_REPLICATIONS)

    @property
    def k(self):
        return len(SETUPS[self.setup_id][1])

    def targets(self):
        return ["beta", *(f"alpha_{i}" for i in range(1, self.k + 1)), "alpha", "R", "H", "MTF"]


def true_values(cfg: StudyConfig) -> dict[str, float]:
    p = IepParams(cfg.true_alpha, cfg.true_beta)
    out = {"beta": cfg.true_beta}
    out.update({f"alpha_{i}": cfg.true_alpha for i in range(1, cfg.k + 1)})
    out.update(alpha=cfg.true_alpha, R=float(reliability(cfg.t_eval, p)),
               H=float(hazard(cfg.t_eval, p)), MTF=mtf(p))
    return out


@dataclass(frozen=True)
class SummaryRow:
    method: str
    target: str
    estimate: float
    bias: float
    variance: float
    lower: float
    upper: float
    length: float
    replications: int
    dropped: int


def _rep_streams(cfg, rep):
    seq = np.random.SeedSequence(cfg.master_seed, spawn_key=(cfg.setup_id, cfg.plan_template, rep))
    sim, piv = seq.spawn(2)
    return np.random.default_rng(sim), np.random.default_rng(piv)


def run_replication(cfg: StudyConfig, rep: int):
    """One replication; returns ``{method: array (targets, 3) or error string}``.

    Columns are (estimate, lower, upper).
    """
    sim_rng, piv_rng = _rep_streams(cfg, rep)
    design = builtin_setup(cfg.setup_id, cfg.plan_template)
    params = [IepParams(cfg.true_alpha, cfg.true_beta)] * design.k
    sample = simulate_block(params, design, sim_rng)
    targets = cfg.targets()
    out = {}
    try:
        res = mle_intervals(solve_mle(sample), cfg.gamma, cfg.t_eval)
        out["MLE"] = np.array([[res[t][0], res[t][1].lower, res[t][1].upper] for t in targets])
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        out["MLE"] = f"{type(exc).__name__}: {exc}"
    try:
        _, summ = algorithm1(sample, cfg.pivotal_draws, cfg.gamma, cfg.t_eval, piv_rng)
        out["pivotal"] = np.array([[summ.estimates[t], summ.intervals[t].lower,
                                    summ.intervals[t].upper] for t in targets])
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        out["pivotal"] = f"{type(exc).__name__}: {exc}"
    return out


def _run_chunk(args):
    cfg, reps = args
    return [run_replication(cfg, r) for r in reps]


def worker_count() -> int:
    env = os.environ.get("BAPCS_THREADS")
    if env is None or env.strip() == "":
        return os.cpu_count() or 1
    n = int(env)
    if n < 1:
        raise ValueError(f"BAPCS_THREADS must be a positive integer, got {env!r}")
    return n


def _collect(cfg, workers):
    reps = list(range(cfg.replications))
    if workers <= 1 or cfg.replications == 1:
        return _run_chunk((cfg, reps))
    size = max(1, math.ceil(len(reps) / (4 * workers)))
    chunks = [(cfg, reps[i:i + size]) for i in range(0, len(reps), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves chunk order, so aggregation is independent of scheduling
        return [r for part in pool.map(_run_chunk, chunks) for r in part]


def summarize(cfg: StudyConfig, results) -> tuple[list[SummaryRow], dict[str, int]]:
    truth = true_values(cfg)
    targets = cfg.targets()
    rows, dropped = [], {}
    for method in METHODS:
        good = [r[method] for r in results if not isinstance(r[method], str)]
        for i, r in enumerate(results):
            if isinstance(r[method], str):
                log.warning("setup %d plan %d rep %d %s dropped: %s",
                            cfg.setup_id, cfg.plan_template, i, method, r[method])
        dropped[method] = len(results) - len(good)
        if not good:
            raise RuntimeError(f"every replication failed for {method}")
        arr = np.stack(good)  # (reps, targets, 3)
        est, lo, hi = arr[..., 0], arr[..., 1], arr[..., 2]
        mean = est.mean(axis=0)
        var = ((est - mean) ** 2).mean(axis=0)
        length = (hi - lo).mean(axis=0)
        for j, t in enumerate(targets):
            rows.append(SummaryRow(method, t, float(mean[j]), float(mean[j] - truth[t]),
                                   float(var[j]), float(lo[:, j].mean()), float(hi[:, j].mean()),
                                   float(length[j]), len(good), dropped[method]))
    return rows, dropped


def run_study(cfg: StudyConfig, workers: int | None = None) -> list[SummaryRow]:
    """Run every replication and summarize per method and target.

    Replication r draws from the substream keyed by (master_seed, setup,
    plan, r), so results do not depend on the number of workers.
    """
    results = _collect(cfg, worker_count() if workers is None else workers)
    rows, _ = summarize(cfg, results)
    return rows


TABLE_HEADER = "method,target,estimate,bias,variance,lower,upper,length,replications,dropped"


def table_filename(setup_id: int, plan_template: int) -> str:
    return f"setup{setup_id}_plan{plan_template}.csv"


def _table_text(rows):
    if not rows:
        raise ValueError("no rows to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(TABLE_HEADER + "\n")
    for r in rows:
        w.writerow([r.method, r.target,
                    *(format(getattr(r, f), ".17g") for f in
                      ("estimate", "bias", "variance", "lower", "upper", "length")),
                    r.replications, r.dropped])
    return buf.getvalue()


def emit_table(rows, destination) -> Path:
    """Write rows as CSV, ordered by method then target as produced by ``run_study``."""
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_table_text(rows), encoding="utf-8")
    return path


def parse_table(path) -> list[SummaryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != TABLE_HEADER:
        raise ValueError(f"{path}: unexpected header")
    out = []
    for rec in csv.reader(lines[1:]):
        out.append(SummaryRow(rec[0], rec[1], *map(float, rec[2:8]), int(rec[8]), int(rec[9])))
    return out


def _version():
    from . import __version__
    try:
        desc = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                              text=True, cwd=Path(__file__).parent, timeout=10)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_manifest(configs_rows, destination) -> Path:
    """JSON manifest: configs, version string and dropped-replication counts."""
    runs = []
    for cfg, rows in configs_rows:
        dropped = {}
        for r in rows:
            dropped[r.method] = r.dropped
        runs.append({"config": asdict(cfg), "table": table_filename(cfg.setup_id, cfg.plan_template),
                     "dropped": dropped})
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps({"version": _version(), "runs": runs}), encoding="utf-8")
    return path


