"""Quasi-sure arbitrage detection for the two-asset bid-ask market.

A strategy trades ``buy - sell`` shares at every node (time ``0..T``), paying
``buy * ask`` and receiving ``sell * bid`` from the money account.  The
terminal claim at a leaf is the accumulated ``(money, shares)`` along its
path.  Because the attainable set is a cone, the LP "maximise the total
terminal value subject to a non-negative claim at every non-polar leaf" is
either bounded at 0 (no arbitrage) or unbounded (arbitrage).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .lp import Constraint, LpProblem, OPTIMAL, UNBOUNDED, solve
from .market import BidAskProcess
from .tree import Node, ScenarioTree, TreeMeasure, node_str

HOLDS = "holds"
FAILS = "fails"


class StrategyError(ValueError):
    def __init__(self, node, msg):
        super().__init__(f"{msg} at {node_str(node)}")
        self.node = node


@dataclass(frozen=True)
class Strategy2D:
    """``orders[node] = (buy, sell, money increment)`` for the position decided at ``node``.

    Nodes absent from ``orders`` do not trade.
    """

    orders: Mapping

    def __post_init__(self):
        object.__setattr__(
            self,
            "orders",
            {v: tuple(Fraction(x) for x in o) for v, o in dict(self.orders).items()},
        )

    @classmethod
    def tight(cls, tree: ScenarioTree, m: BidAskProcess, trades: Mapping) -> "Strategy2D":
        """Build a strategy from ``{node: (buy, sell)}`` paying exactly the quoted prices."""
        orders = {}
        for v, (b, s) in trades.items():
            b, s = Fraction(b), Fraction(s)
            if b or s:
                orders[v] = (b, s, -b * m.ask(v) + s * m.bid(v))
        return cls(orders)

    def scaled(self, c) -> "Strategy2D":
        c = Fraction(c)
        return Strategy2D({v: tuple(c * x for x in o) for v, o in self.orders.items()})


def evaluate_strategy(tree: ScenarioTree, m: BidAskProcess, sigma: Strategy2D) -> dict:
    """Terminal claim ``(money, shares)`` per leaf; raises on a self-financing violation."""
    for v in tree.nodes():
        if v not in sigma.orders:
            continue
        b, s, d0 = sigma.orders[v]
        if b < 0 or s < 0:
            raise StrategyError(v, "negative order size")
        if d0 > -b * m.ask(v) + s * m.bid(v):
            raise StrategyError(v, "self-financing violated")
    unknown = set(sigma.orders) - set(tree.nodes())
    if unknown:
        raise StrategyError(min(unknown), "order outside the tree")
    claims = {}
    for leaf in tree.leaves():
        f0 = f1 = Fraction(0)
        for t in range(tree.depth + 1):
            o = sigma.orders.get(leaf[:t])
            if o:
                f0 += o[2]
                f1 += o[0] - o[1]
        claims[leaf] = (f0, f1)
    return claims


@dataclass(frozen=True)
class NaReport:
    verdict: str
    strategy: Optional[Strategy2D] = None
    leaf: Optional[Node] = None
    component: Optional[int] = None
    claim: Optional[tuple] = None
    measure: Optional[TreeMeasure] = None
    claims: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS


def _na_lp(tree, m, nodes, box):
    index = {v: k for k, v in enumerate(nodes)}
    nvar = 2 * len(nodes)
    rows = []
    objective = [Fraction(0)] * nvar
    for leaf in tree.non_polar(tree.leaves()):
        money = [Fraction(0)] * nvar
        shares = [Fraction(0)] * nvar
        for t in range(tree.depth + 1):
            k = index[leaf[:t]]
            money[2 * k] = -m.ask(leaf[:t])
            money[2 * k + 1] = m.bid(leaf[:t])
            shares[2 * k] = Fraction(1)
            shares[2 * k + 1] = Fraction(-1)
        rows.append(Constraint(money, ">=", 0))
        rows.append(Constraint(shares, ">=", 0))
        for j in range(nvar):
            objective[j] += money[j] + shares[j]
    bounds = ((0, 1) if box else (0, None),) * nvar
    return LpProblem(tuple(objective), tuple(rows), bounds)


def charging_measure(tree: ScenarioTree, target: Node) -> TreeMeasure:
    """A family member (extreme kernels) giving positive probability to the non-polar ``target``."""
    kernels = {}
    for v in tree.internal_nodes():
        fam = tree.families[v].kernels
        pick = 0
        if len(v) < len(target) and target[: len(v)] == v:
            nxt = target[len(v)]
            pick = next(i for i, k in enumerate(fam) if k[nxt] > 0)
        kernels[v] = fam[pick]
    return TreeMeasure(kernels)


def check_na(tree: ScenarioTree, m: BidAskProcess) -> NaReport:
    m.check_tree(tree)
    nodes = tree.non_polar()
    out = solve(_na_lp(tree, m, nodes, box=False))
    if out.status == OPTIMAL:
        return NaReport(HOLDS)
    assert out.status == UNBOUNDED, out.status
    # Finite witness from the boxed problem.
    boxed = solve(_na_lp(tree, m, nodes, box=True))
    assert boxed.status == OPTIMAL and boxed.value > 0
    trades = {v: (boxed.x[2 * k], boxed.x[2 * k + 1]) for k, v in enumerate(nodes)}
    sigma = Strategy2D.tight(tree, m, trades)
    claims = evaluate_strategy(tree, m, sigma)
    for leaf in tree.non_polar(tree.leaves()):
        f = claims[leaf]
        comp = next((i for i in (0, 1) if f[i] > 0), None)
        if comp is not None:
            return NaReport(FAILS, sigma, leaf, comp, f, charging_measure(tree, leaf), claims)
    raise AssertionError("unbounded NA programme without a profitable leaf")

