"""Exact arbitrage checks and price-system construction on finite multiple-prior scenario trees."""

from .arbitrage import Strategy2D, check_na, evaluate_strategy
from .cone_market import (
    ConeMarket,
    backward_modify_cones,
    check_efficient_friction,
    check_na2,
    check_nas,
    from_bidask,
)
from .cones import PolyCone, cone_sum, dualize, interior_point, intersect, is_subset
from .cps import construct_cps, verify_cps, verify_iiprime
from .lp import Constraint, LpProblem, solve
from .market import BidAskProcess, backward_modify
from .scps import construct_scps, verify_scps
from .tree import PriorFamily, ScenarioTree, TreeMeasure

__all__ = [
    "BidAskProcess",
    "ConeMarket",
    "Constraint",
    "LpProblem",
    "PolyCone",
    "PriorFamily",
    "ScenarioTree",
    "Strategy2D",
    "TreeMeasure",
    "backward_modify",
    "backward_modify_cones",
    "check_efficient_friction",
    "check_na",
    "check_na2",
    "check_nas",
    "cone_sum",
    "construct_cps",
    "construct_scps",
    "dualize",
    "evaluate_strategy",
    "from_bidask",
    "interior_point",
    "intersect",
    "is_subset",
    "solve",
    "verify_cps",
    "verify_iiprime",
    "verify_scps",
]
