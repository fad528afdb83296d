"""Block adaptive progressive Type-II censoring: plans, designs, samples and
the sequential sampler.

Within a facility the test runs as an ordinary progressive Type-II test until
the threshold time is passed. From then on no units are withdrawn at
intermediate failures, and every surviving unit is withdrawn at the last
observed failure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import IepParams, iep_isf_log

__all__ = [
    "PlanError",
    "SimulationError",
    "CensoringPlan",
    "FacilityDesign",
    "BlockDesign",
    "FacilitySample",
    "BapcsSample",
    "plan_from_template",
    "effective_removals",
    "risk_set_size",
    "simulate_facility",
    "simulate_block",
    "facility_times_from_uniforms",
    "sample_to_json",
    "sample_from_json",
    "design_from_json",
]


class PlanError(ValueError):
    """Invalid censoring plan, design or sample."""


class SimulationError(RuntimeError):
    """Internal inconsistency detected while simulating a test."""


@dataclass(frozen=True)
class CensoringPlan:
    """n units on test, m observed failures, planned withdrawals R_1..R_m."""

    n: int
    m: int
    removals: tuple[int, ...]

    def __post_init__(self):
        removals = tuple(int(r) for r in self.removals)
        object.__setattr__(self, "removals", removals)
        if not (1 <= self.m <= self.n):
            raise PlanError(f"need 1 <= m <= n, got n={self.n}, m={self.m}")
        if len(removals) != self.m:
            raise PlanError(f"expected {self.m} removals, got {len(removals)}")
        if any(r < 0 for r in removals):
            raise PlanError("removals must be nonnegative")
        if sum(removals) != self.n - self.m:
            raise PlanError(f"removals sum to {sum(removals)}, expected n - m = {self.n - self.m}")


@dataclass(frozen=True)
class FacilityDesign:
    plan: CensoringPlan
    threshold: float

    def __post_init__(self):
        if not (self.threshold > 0):
            raise PlanError(f"threshold must be positive, got {self.threshold}")


@dataclass(frozen=True)
class BlockDesign:
    facilities: tuple[FacilityDesign, ...]
    total_n: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "facilities", tuple(self.facilities))
        if not self.facilities:
            raise PlanError("a block design needs at least one facility")
        total = sum(f.plan.n for f in self.facilities)
        if self.total_n is None:
            object.__setattr__(self, "total_n", total)
        elif self.total_n != total:
            raise PlanError(f"facility sizes sum to {total}, declared total is {self.total_n}")

    @property
    def k(self):
        return len(self.facilities)


def plan_from_template(template: int, n: int, m: int) -> CensoringPlan:
    """One of the three fixed withdrawal patterns used in the simulation study.

    1. half of the n - m withdrawals (rounded up) at failure floor(3m/4), the
       rest at failure m;
    2. the rounded-up half at floor(m/4), the rest at floor(3m/4);
    3. the rounded-up half at floor(m/4), the rest at failure m.
    """
    if template not in (1, 2, 3):
        raise PlanError(f"unknown plan template {template!r}")
    if not 1 <= m <= n:
        raise PlanError(f"need 1 <= m <= n, got n={n}, m={m}")
    first = math.ceil((n - m) / 2)
    rest = n - m - first
    q1, q3 = m // 4, (3 * m) // 4
    positions = {1: (q3, m), 2: (q1, q3), 3: (q1, m)}[template]
    if min(positions) < 1:
        raise PlanError(f"m={m} too small for plan template {template}")
    removals = [0] * m
    removals[positions[0] - 1] += first
    removals[positions[1] - 1] += rest
    return CensoringPlan(n, m, tuple(removals))


def effective_removals(plan: CensoringPlan, j_count: int) -> tuple[int, ...]:
    """Withdrawals actually carried out given J failures before the threshold."""
    m = plan.m
    if not 0 <= j_count <= m:
        raise PlanError(f"j_count={j_count} outside [0, {m}]")
    if j_count >= m - 1:
        return plan.removals
    r = list(plan.removals[:j_count]) + [0] * (m - j_count)
    r[-1] = plan.n - m - sum(plan.removals[:j_count])
    return tuple(r)


def risk_set_size(j: int, plan: CensoringPlan, j_count: int) -> int:
    """Units on test just before the j-th failure (1-based j)."""
    if not 1 <= j <= plan.m:
        raise PlanError(f"failure index j={j} outside [1, {plan.m}]")
    size = plan.n - j + 1 - sum(plan.removals[: min(j_count, j - 1)])
    if size < 1:
        raise SimulationError(f"risk set size {size} < 1 at j={j}; inconsistent plan")
    return size


@dataclass(frozen=True, eq=False)
class FacilitySample:
    """Ordered failure times of one facility plus the threshold-crossing count."""

    times: np.ndarray
    j_count: int
    plan: CensoringPlan
    threshold: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).copy()
        times.flags.writeable = False
        object.__setattr__(self, "times", times)
        m = self.plan.m
        if times.shape != (m,):
            raise PlanError(f"expected {m} failure times, got shape {times.shape}")
        if not np.all(np.isfinite(times)) or np.any(times <= 0):
            raise PlanError("failure times must be positive and finite")
        if np.any(np.diff(times) <= 0):
            raise PlanError("failure times must be strictly increasing")
        if not 0 <= self.j_count <= m:
            raise PlanError(f"j_count={self.j_count} outside [0, {m}]")
        before = int(np.sum(times < self.threshold))
        if before != self.j_count:
            raise PlanError(f"j_count={self.j_count} but {before} failures precede the threshold")

    @property
    def m(self):
        return self.plan.m

    @property
    def n(self):
        return self.plan.n

    @property
    def effective_removals(self):
        return np.array(effective_removals(self.plan, self.j_count), dtype=float)

    @property
    def risk_sets(self):
        return np.array([risk_set_size(j, self.plan, self.j_count)
                         for j in range(1, self.plan.m + 1)], dtype=float)

    def __eq__(self, other):
        if not isinstance(other, FacilitySample):
            return NotImplemented
        return (self.plan == other.plan and self.j_count == other.j_count
                and self.threshold == other.threshold
                and np.array_equal(self.times, other.times))


@dataclass(frozen=True)
class BapcsSample:
    facilities: tuple[FacilitySample, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "facilities", tuple(self.facilities))
        if not self.facilities:
            raise PlanError("a sample needs at least one facility")

    @property
    def k(self):
        return len(self.facilities)


def facility_times_from_uniforms(p: IepParams, plan: CensoringPlan, threshold: float,
                                 uniforms: Sequence[float]) -> tuple[np.ndarray, int]:
    """Sequential conditional sampling driven by the given uniforms.

    At step j the survival probability of the new failure is the previous one
    times ``V_j ** (1 / gamma_j)`` where gamma_j is the current risk set.
    """
    n, m = plan.n, plan.m
    if len(uniforms) != m:
        raise SimulationError(f"need {m} uniforms, got {len(uniforms)}")
    times = np.empty(m)
    surv = 1.0
    withdrawn = 0
    j_count = 0
    crossed = False
    for j in range(m):
        at_risk = n - j - withdrawn
        surv = surv * float(uniforms[j]) ** (1.0 / at_risk)
        t = iep_isf_log(math.log(surv), p)
        times[j] = t
        if crossed or not t < threshold:
            crossed = True
            continue
        j_count += 1
        if j < m - 1:
            r = plan.removals[j]
            # units left after this failure must cover the failures still to come
            if n - (j + 1) - withdrawn - r < m - (j + 1):
                raise SimulationError(f"planned removal {r} at failure {j + 1} exhausts the test")
            withdrawn += r
    return times, j_count


def simulate_facility(p: IepParams, plan: CensoringPlan, threshold: float,
                      rng: np.random.Generator) -> FacilitySample:
    """Simulate one facility's adaptive progressive Type-II censored sample."""
    # (0, 1] keeps log(surv) finite
    uniforms = 1.0 - rng.random(plan.m)
    times, j_count = facility_times_from_uniforms(p, plan, threshold, uniforms)
    return FacilitySample(times, j_count, plan, threshold)


def simulate_block(params: Sequence[IepParams], design: BlockDesign,
                   rng: np.random.Generator) -> BapcsSample:
    """Independent facility simulations with a shared beta."""
    params = list(params)
    if len(params) != design.k:
        raise PlanError(f"need {design.k} parameter sets, got {len(params)}")
    if len({p.beta for p in params}) != 1:
        raise PlanError("all facilities must share the same beta")
    streams = rng.spawn(design.k)
    return BapcsSample(tuple(
        simulate_facility(p, f.plan, f.threshold, s)
        for p, f, s in zip(params, design.facilities, streams)
    ))


# --- JSON wire format ------------------------------------------------------

def _dump(obj, indent=0):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_dump(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _dump(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return "null"
        return format(float(obj), ".17g")
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _dump(obj) + "\n"


def _threshold_in(value):
    return math.inf if value is None else float(value)


def sample_to_json(sample: BapcsSample) -> str:
    return dumps({"facilities": [
        {
            "n": f.plan.n,
            "m": f.plan.m,
            "removals": list(f.plan.removals),
            "threshold": f.threshold,
            "j_count": f.j_count,
            "times": [float(t) for t in f.times],
        }
        for f in sample.facilities
    ]})


def sample_from_json(text: str) -> BapcsSample:
    doc = json.loads(text)
    try:
        return BapcsSample(tuple(
            FacilitySample(
                times=np.array(f["times"], dtype=float),
                j_count=int(f["j_count"]),
                plan=CensoringPlan(int(f["n"]), int(f["m"]), tuple(f["removals"])),
                threshold=_threshold_in(f["threshold"]),
            )
            for f in doc["facilities"]
        ))
    except (KeyError, TypeError) as exc:
        raise PlanError(f"malformed sample document: {exc}") from exc


def design_from_json(text: str) -> BlockDesign:
    """Design file: ``{"facilities": [{"n", "m", "removals", "threshold"}]}``.

    A facility may give ``"template": 1|2|3`` instead of explicit removals.
    """
    doc = json.loads(text)
    facilities = []
    try:
        for f in doc["facilities"]:
            n, m = int(f["n"]), int(f["m"])
            if "removals" in f:
                plan = CensoringPlan(n, m, tuple(f["removals"]))
            else:
                plan = plan_from_template(int(f["template"]), n, m)
            facilities.append(FacilityDesign(plan, _threshold_in(f.get("threshold"))))
    except (KeyError, TypeError) as exc:
        raise PlanError(f"malformed design document: {exc}") from exc
    return BlockDesign(tuple(facilities), doc.get("total_n"))
