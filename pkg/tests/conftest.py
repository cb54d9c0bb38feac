import random
from fractions import Fraction as F
from pathlib import Path

import pytest

from robust_ftap.instances import load_instance
from robust_ftap.market import BidAskProcess
from robust_ftap.tree import PriorFamily, ScenarioTree, TreeMeasure

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


def instance(name):
    return load_instance(str(INSTANCES / f"{name}.json"))


def chain_tree(depth):
    nodes = [(0,) * t for t in range(depth)]
    return ScenarioTree(depth, {v: 1 for v in nodes}, {v: PriorFamily(((1,),)) for v in nodes})


def chain_market(quotes):
    """Deterministic single-path market with ``quotes[t] = (bid, ask)``."""
    tree = chain_tree(len(quotes) - 1)
    m = BidAskProcess({(0,) * t: q for t, q in enumerate(quotes)})
    return tree, m


def chain_measure(tree):
    return TreeMeasure({v: (1,) for v in tree.internal_nodes()})


def one_period(kernels, s0, s1):
    """Root with quotes ``s0`` and children quoted by the list ``s1``."""
    n = len(s1)
    tree = ScenarioTree(1, {(): n}, {(): PriorFamily(tuple(kernels))})
    quotes = {(): s0}
    quotes.update({(i,): q for i, q in enumerate(s1)})
    return tree, BidAskProcess(quotes)


def random_kernel(rng, n, allow_zero=True):
    while True:
        w = [rng.randint(0 if allow_zero else 1, 4) for _ in range(n)]
        if sum(w):
            return tuple(F(x, sum(w)) for x in w)


def random_tree(rng, depth=None, max_children=3, max_kernels=2):
    depth = rng.randint(0, 2) if depth is None else depth
    children, families = {}, {}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            n = rng.randint(1, max_children)
            children[v] = n
            k = rng.randint(1, max_kernels)
            families[v] = PriorFamily(tuple(random_kernel(rng, n) for _ in range(k)))
            nxt.extend(v + (i,) for i in range(n))
        frontier = nxt
    return ScenarioTree(depth, children, families)


def random_measure(rng, tree):
    return TreeMeasure(
        {v: random_kernel(rng, tree.children[v]) for v in tree.internal_nodes()}, outside=True
    )


@pytest.fixture
def rng():
    return random.Random(12345)


_CONE_SCAN = {}


def cone_scan(seed):
    """Cached reports for the generated cone instance ``seed``."""
    if seed not in _CONE_SCAN:
        from robust_ftap.cone_market import (
            backward_modify_cones,
            check_efficient_friction,
            check_na2,
            check_nas,
        )
        from robust_ftap.instances import gen_instance

        inst = gen_instance(seed, {"mode": "cones"})
        tree, cm = inst.tree, inst.market
        mod = backward_modify_cones(tree, cm)
        _CONE_SCAN[seed] = {
            "inst": inst,
            "mod": mod,
            "na2": check_na2(tree, cm.cones),
            "na2_mod": check_na2(tree, mod.k),
            "ef": check_efficient_friction(tree, cm.cones),
            "nas": check_nas(tree, cm),
        }
    return _CONE_SCAN[seed]
