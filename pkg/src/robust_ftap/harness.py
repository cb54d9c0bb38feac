"""Seeded cross-check of the arbitrage checkers against the price-system builders.

For each seed an instance is generated; the checker verdict must agree with
"the builder produces a verifying certificate for every extreme prior".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .arbitrage import check_na
from .cone_market import backward_modify_cones, check_efficient_friction, check_nas
from .cps import construct_cps, verify_cps, verify_iiprime
from .instances import Instance, gen_instance
from .scps import construct_scps, verify_scps
from .tree import selection_measure


def _extreme_measures(tree):
    for sel in tree.extreme_selections():
        yield selection_measure(tree, sel)


def cps_builder(inst: Instance) -> bool:
    tree, m = inst.tree, inst.market
    for P in _extreme_measures(tree):
        res = construct_cps(tree, m, P)
        if not res.ok:
            return False
        cert = res.certificate
        if not verify_cps(tree, m, cert, P) or not verify_iiprime(tree, res.modified, cert):
            return False
    return True


def scps_builder(inst: Instance) -> bool:
    tree, cm = inst.tree, inst.market
    mod = backward_modify_cones(tree, cm)
    for P in _extreme_measures(tree):
        res = construct_scps(tree, cm, P, mod)
        if not res.ok or not verify_scps(tree, cm, res.certificate, P):
            return False
    return True


def na_checker(inst: Instance) -> bool:
    return check_na(inst.tree, inst.market).holds


def nas_ef_checker(inst: Instance) -> bool:
    tree, cm = inst.tree, inst.market
    return check_efficient_friction(tree, cm.cones).holds and check_nas(tree, cm).holds


CHECKERS = {"bidask2d": na_checker, "cones": nas_ef_checker}
BUILDERS = {"bidask2d": cps_builder, "cones": scps_builder}


@dataclass
class Summary:
    mode: str
    seeds: list
    records: list = field(default_factory=list)  # (seed, checker verdict, builder verdict)
    disagreements: list = field(default_factory=list)  # (seed, instance)

    @property
    def agree(self) -> int:
        return sum(1 for _, c, b in self.records if c == b)

    @property
    def ok(self) -> bool:
        return not self.disagreements

    @property
    def holds(self) -> int:
        return sum(1 for _, c, _ in self.records if c)


def run_equivalence(
    seeds: Iterable[int],
    mode: str,
    builder: Optional[Callable] = None,
    checker: Optional[Callable] = None,
    params: Optional[dict] = None,
) -> Summary:
    builder = builder or BUILDERS[mode]
    checker = checker or CHECKERS[mode]
    seeds = list(seeds)
    out = Summary(mode, seeds)
    for seed in seeds:
        inst = gen_instance(seed, dict(params or {}, mode=mode))
        c = checker(inst)
        b = builder(inst)
        out.records.append((seed, c, b))
        if c != b:
            out.disagreements.append((seed, inst))
    return out
