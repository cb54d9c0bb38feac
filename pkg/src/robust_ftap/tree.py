"""Finite scenario trees carrying a family of one-step priors at every node.

Nodes are identified by their path of child indices from the root (the root
is the empty tuple), so the time of a node is ``len(node)``.  At each internal
node the set of admissible one-step models is the convex hull of finitely many
listed kernels; a kernel is a tuple of exact probabilities indexed by child.

Quasi-sure notions reduce to path reachability: a child is *charged* if some
listed kernel gives it positive mass, and a node is *polar* if some edge on
its root path leads to an uncharged child.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator, Mapping, Optional

from .lp import Constraint, LpProblem, OPTIMAL, solve

Node = tuple  # path of child indices
Kernel = tuple  # tuple of Fractions, one per child


class TreeError(ValueError):
    pass


def node_str(node: Node) -> str:
    return "/" + "/".join(str(i) for i in node)


def make_kernel(weights) -> Kernel:
    k = tuple(Fraction(w) for w in weights)
    if any(w < 0 for w in k):
        raise TreeError(f"negative weight in kernel {_fmt(k)}")
    total = sum(k, Fraction(0))
    if total != 1:
        raise TreeError(f"kernel sums to {total}")
    return k


def _fmt(k) -> str:
    return "(" + ", ".join(str(w) for w in k) + ")"


def support(kernel: Kernel) -> frozenset:
    return frozenset(i for i, w in enumerate(kernel) if w > 0)


@dataclass(frozen=True)
class PriorFamily:
    kernels: tuple

    def __post_init__(self):
        if not self.kernels:
            raise TreeError("empty prior family")
        ks = tuple(make_kernel(k) for k in self.kernels)
        if len({len(k) for k in ks}) != 1:
            raise TreeError("kernels of one family disagree on the child set")
        object.__setattr__(self, "kernels", ks)

    @property
    def width(self) -> int:
        return len(self.kernels[0])

    def uniform_mixture(self) -> Kernel:
        m = len(self.kernels)
        return tuple(sum(col, Fraction(0)) / m for col in zip(*self.kernels))


@dataclass(frozen=True)
class ScenarioTree:
    """Rooted tree of depth ``depth``; ``children[node]`` is the child count of an internal node."""

    depth: int
    children: Mapping
    families: Mapping

    def __post_init__(self):
        if self.depth < 0:
            raise TreeError("negative depth")
        children = dict(self.children)
        families = dict(self.families)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "families", families)
        seen = set()
        stack = [()]
        while stack:
            node = stack.pop()
            seen.add(node)
            if len(node) == self.depth:
                if node in children or node in families:
                    raise TreeError(f"leaf {node_str(node)} has children")
                continue
            n = children.get(node, 0)
            if n < 1:
                raise TreeError(f"internal node {node_str(node)} has no children")
            fam = families.get(node)
            if fam is None:
                raise TreeError(f"internal node {node_str(node)} has no prior family")
            if fam.width != n:
                raise TreeError(
                    f"family at {node_str(node)} has width {fam.width}, node has {n} children"
                )
            stack.extend(node + (i,) for i in range(n))
        dangling = (set(children) | set(families)) - seen
        if dangling:
            raise TreeError(f"dangling node {node_str(min(dangling))}")
        order = sorted(seen, key=lambda v: (len(v), v))
        object.__setattr__(self, "_order", tuple(order))
        charged = {v: frozenset().union(*(support(k) for k in families[v].kernels))
                   for v in families}
        object.__setattr__(self, "_charged", charged)
        polar = {(): False}
        for v in order[1:]:
            polar[v] = polar[v[:-1]] or v[-1] not in charged[v[:-1]]
        object.__setattr__(self, "_polar", polar)

    # -- topology ---------------------------------------------------------
    def nodes(self) -> tuple:
        """All nodes, ordered by time then lexicographically."""
        return self._order

    def nodes_at(self, t: int) -> list:
        return [v for v in self._order if len(v) == t]

    def internal_nodes(self) -> list:
        return [v for v in self._order if len(v) < self.depth]

    def leaves(self) -> list:
        return self.nodes_at(self.depth)

    def is_leaf(self, node: Node) -> bool:
        return len(node) == self.depth

    def child_nodes(self, node: Node) -> list:
        return [node + (i,) for i in range(self.children.get(node, 0))]

    def __contains__(self, node) -> bool:
        return node in self._polar

    # -- quasi-sure structure --------------------------------------------
    def charged_children(self, node: Node) -> frozenset:
        if self.is_leaf(node):
            raise TreeError(f"no children: {node_str(node)} is a leaf")
        return self._charged[node]

    def is_polar(self, node: Node) -> bool:
        return self._polar[node]

    def non_polar(self, nodes=None) -> list:
        nodes = self._order if nodes is None else nodes
        return [v for v in nodes if not self._polar[v]]

    def extreme_selections(self) -> Iterator[dict]:
        """Yield ``{internal node: kernel index}`` for every extreme product measure."""
        internal = self.internal_nodes()
        ranges = [range(len(self.families[v].kernels)) for v in internal]
        for combo in product(*ranges):
            yield dict(zip(internal, combo))

    def count_extreme(self) -> int:
        n = 1
        for v in self.internal_nodes():
            n *= len(self.families[v].kernels)
        return n


@dataclass(frozen=True)
class TreeMeasure:
    """A product measure: one kernel per internal node.

    ``outside`` marks measures deliberately built outside the prior family
    (counterexamples); it is informational only.
    """

    kernels: Mapping
    outside: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "kernels", {v: make_kernel(k) for v, k in dict(self.kernels).items()}
        )

    def path_probability(self, node: Node) -> Fraction:
        p = Fraction(1)
        for t in range(len(node)):
            p *= self.kernels[node[:t]][node[t]]
            if not p:
                break
        return p

    def charges(self, node: Node) -> bool:
        return self.path_probability(node) > 0

    def check_tree(self, tree: ScenarioTree) -> None:
        internal = tree.internal_nodes()
        if set(self.kernels) != set(internal):
            raise TreeError("measure is not defined on exactly the internal nodes of the tree")
        for v in internal:
            if len(self.kernels[v]) != tree.children[v]:
                raise TreeError(f"measure kernel at {node_str(v)} has wrong width")


def selection_measure(tree: ScenarioTree, selection: Mapping) -> TreeMeasure:
    return TreeMeasure({v: tree.families[v].kernels[i] for v, i in selection.items()})


def charged_children(tree: ScenarioTree, node: Node) -> frozenset:
    return tree.charged_children(node)


def is_polar(tree: ScenarioTree, node: Node) -> bool:
    return tree.is_polar(node)


def dominates(tree: ScenarioTree, Q: TreeMeasure, P: TreeMeasure) -> bool:
    """True iff ``P << Q``: wherever ``P`` reaches a node, its kernel support sits inside ``Q``'s."""
    Q.check_tree(tree)
    P.check_tree(tree)
    for v in tree.internal_nodes():
        if P.charges(v) and not support(P.kernels[v]) <= support(Q.kernels[v]):
            return False
    return True


def dominated_by_family(tree: ScenarioTree, Q: TreeMeasure) -> Optional[TreeMeasure]:
    """Return a family member dominating ``Q`` (nodewise uniform mixture), or ``None``."""
    Q.check_tree(tree)
    for v in tree.internal_nodes():
        if Q.charges(v) and not support(Q.kernels[v]) <= tree.charged_children(v):
            return None
    return TreeMeasure({v: tree.families[v].uniform_mixture() for v in tree.internal_nodes()})


def in_convex_hull(family: PriorFamily, k: Kernel) -> bool:
    """Decide whether ``k`` is a convex combination of the family's kernels (exact LP)."""
    k = tuple(Fraction(w) for w in k)
    if len(k) != family.width:
        raise TreeError("kernel width differs from the family's child set")
    m = len(family.kernels)
    rows = [Constraint([ker[c] for ker in family.kernels], "==", k[c]) for c in range(len(k))]
    rows.append(Constraint([1] * m, "==", 1))
    out = solve(LpProblem((0,) * m, tuple(rows)))
    return out.status == OPTIMAL


def contains_measure(tree: ScenarioTree, P: TreeMeasure) -> bool:
    """True iff every kernel of ``P`` lies in the convex hull of its node's family."""
    P.check_tree(tree)
    return all(in_convex_hull(tree.families[v], P.kernels[v]) for v in tree.internal_nodes())
