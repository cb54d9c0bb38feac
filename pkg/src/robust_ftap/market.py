"""Bid-ask market with one stock and a money account, and its backward modification.

The modified ``[X, Y]`` market tightens the spread backward in time: at each
node the bid is raised to the lowest quasi-surely attainable future bid and the
ask is lowered to the highest quasi-surely attainable future ask.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .tree import Node, ScenarioTree, TreeError, node_str


class MarketError(ValueError):
    pass


@dataclass(frozen=True)
class BidAskProcess:
    """``quotes[node] = (bid, ask)`` with ``0 < bid <= ask``."""

    quotes: Mapping

    def __post_init__(self):
        q = {}
        for v, (bid, ask) in dict(self.quotes).items():
            bid, ask = Fraction(bid), Fraction(ask)
            if bid <= 0 or ask <= 0:
                raise MarketError(f"non-positive quote at {node_str(v)}")
            if bid > ask:
                raise MarketError(f"crossed quote at {node_str(v)}: bid {bid} > ask {ask}")
            q[v] = (bid, ask)
        object.__setattr__(self, "quotes", q)

    def bid(self, node: Node) -> Fraction:
        return self.quotes[node][0]

    def ask(self, node: Node) -> Fraction:
        return self.quotes[node][1]

    def check_tree(self, tree: ScenarioTree) -> None:
        if set(self.quotes) != set(tree.nodes()):
            raise MarketError("market must quote every node of the tree exactly once")


@dataclass(frozen=True)
class ModifiedProcess:
    X: Mapping
    Y: Mapping
    flagged: tuple  # non-polar nodes with X > Y

    def spread(self, node: Node) -> tuple:
        return self.X[node], self.Y[node]


def qs_bounds(tree: ScenarioTree, node: Node, values: Mapping) -> tuple:
    """``(min, max)`` of ``values`` over the charged children of ``node``."""
    if tree.is_leaf(node):
        raise TreeError(f"no children: {node_str(node)} is a leaf")
    vals = [values[c] for c in sorted(tree.charged_children(node))]
    return min(vals), max(vals)


def backward_modify(tree: ScenarioTree, m: BidAskProcess) -> ModifiedProcess:
    m.check_tree(tree)
    X, Y = {}, {}
    for v in reversed(tree.nodes()):
        bid, ask = m.quotes[v]
        if tree.is_leaf(v):
            X[v], Y[v] = bid, ask
            continue
        kids = tree.child_nodes(v)
        lo, _ = qs_bounds(tree, v, {i: X[c] for i, c in enumerate(kids)})
        _, hi = qs_bounds(tree, v, {i: Y[c] for i, c in enumerate(kids)})
        X[v] = max(lo, bid)
        Y[v] = min(hi, ask)
    flagged = tuple(v for v in tree.nodes() if not tree.is_polar(v) and X[v] > Y[v])
    return ModifiedProcess(X, Y, flagged)
