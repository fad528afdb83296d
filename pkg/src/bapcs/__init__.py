"""Inference for the inverted exponentiated Pareto lifetime law under block
adaptive progressive Type-II censoring."""

from .asymptotic import IntervalEstimate, mle_intervals
from .censoring import (
    BapcsSample,
    BlockDesign,
    CensoringPlan,
    FacilityDesign,
    FacilitySample,
    plan_from_template,
    simulate_block,
)
from .distributions import EP, GP, IER, IL, IepParams
from .mle import MleFit, solve_mle
from .pivotal import algorithm1

__version__ = "0.1.0"

__all__ = [
    "IepParams",
    "GP",
    "EP",
    "IER",
    "IL",
    "CensoringPlan",
    "FacilityDesign",
    "BlockDesign",
    "FacilitySample",
    "BapcsSample",
    "plan_from_template",
    "simulate_block",
    "MleFit",
    "solve_mle",
    "IntervalEstimate",
    "mle_intervals",
    "algorithm1",
]
