"""Multi-asset markets given by solvency cones on a scenario tree.

``K(node)`` holds the portfolios (in physical units) that can be liquidated
to zero at that node; every cone must contain the non-negative orthant.  The
backward recursion shrinks the dual cones toward what is reachable at the
charged children:

    Gamma(v) = sum of Kt*(c) over charged children c
    Kt*(v)   = K*(v) intersected with Gamma(v)
    Lambda(v) = Gamma(v)*          (the intersection of the children's Kt)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .cones import (
    ConeError,
    PolyCone,
    cone_sum,
    dot,
    dualize,
    interior_point,
    intersect,
    is_subset,
    primitive,
    subset_witness,
)
from .lp import Constraint, LpProblem, OPTIMAL, UNBOUNDED, solve
from .market import BidAskProcess
from .tree import Node, ScenarioTree, node_str


class ConeMarketError(ValueError):
    pass


@dataclass(frozen=True)
class ConeMarket:
    dim: int
    cones: Mapping  # node -> PolyCone

    def __post_init__(self):
        orthant = PolyCone.orthant(self.dim)
        for v, K in self.cones.items():
            if K.dim != self.dim:
                raise ConeMarketError(f"cone at {node_str(v)} has dimension {K.dim}")
            if not is_subset(orthant, K):
                raise ConeMarketError(f"cone at {node_str(v)} does not contain the orthant")

    @classmethod
    def from_generators(cls, dim: int, generators: Mapping) -> "ConeMarket":
        return cls(dim, {v: PolyCone.from_generators(dim, g) for v, g in generators.items()})

    def check_tree(self, tree: ScenarioTree) -> None:
        if set(self.cones) != set(tree.nodes()):
            raise ConeMarketError("market must give a cone at every node of the tree")

    def dual(self, node: Node) -> PolyCone:
        return dualize(self.cones[node])


def bidask_generators(bid, ask) -> list:
    bid, ask = Fraction(bid), Fraction(ask)
    one = Fraction(1)
    return [(one, Fraction(0)), (Fraction(0), one), (ask, -one), (-one, one / bid)]


def from_bidask(tree: ScenarioTree, m: BidAskProcess) -> ConeMarket:
    """Two-asset solvency cones (money, stock) spanned by the orthant and the two trades."""
    m.check_tree(tree)
    return ConeMarket.from_generators(
        2, {v: bidask_generators(*m.quotes[v]) for v in tree.nodes()}
    )


@dataclass(frozen=True)
class ModifiedConeMarket:
    kstar: Mapping  # node -> modified dual cone
    k: Mapping  # node -> its dual (the modified solvency cone)
    gamma: Mapping  # internal node -> sum of charged children's modified duals
    lam: Mapping  # internal node -> dual of gamma

    def as_market(self, dim: int) -> ConeMarket:
        return ConeMarket(dim, dict(self.k))


def backward_modify_cones(tree: ScenarioTree, cm: ConeMarket) -> ModifiedConeMarket:
    cm.check_tree(tree)
    kstar, k, gamma, lam = {}, {}, {}, {}
    for v in reversed(tree.nodes()):
        Kd = cm.dual(v)
        if tree.is_leaf(v):
            kstar[v] = Kd
        else:
            kids = tree.child_nodes(v)
            G = cone_sum(*(kstar[kids[c]] for c in sorted(tree.charged_children(v))))
            gamma[v] = G
            lam[v] = dualize(G)
            kstar[v] = intersect(Kd, G)
        k[v] = dualize(kstar[v])
    return ModifiedConeMarket(kstar, k, gamma, lam)


# -- NA of the second kind -------------------------------------------------


@dataclass(frozen=True)
class Na2Violation:
    node: Node
    witness: tuple  # primitive vector of Lambda outside K
    generator: tuple  # generator of Lambda violating K
    normal: tuple  # violated inner normal of K

    @property
    def point(self) -> tuple:
        """The witness scaled so its first nonzero coordinate has absolute value 1."""
        lead = next(abs(x) for x in self.witness if x)
        return tuple(x / lead for x in self.witness)


@dataclass(frozen=True)
class Na2Report:
    holds: bool
    violations: tuple = ()


def _na2_witness(Lam: PolyCone, K: PolyCone, g, a) -> tuple:
    # Sum the extreme directions of Lambda on the wrong side of the violated facet.
    C = intersect(Lam, PolyCone.from_halfspaces(Lam.dim, [tuple(-x for x in a)]))
    total = [Fraction(0)] * Lam.dim
    for r in C.rays:
        total = [x + y for x, y in zip(total, r)]
    w = primitive(total)
    if not any(w) or K.contains(w):
        w = primitive(g)
    return w


def check_na2(tree: ScenarioTree, cones: Mapping) -> Na2Report:
    """Nodewise test ``intersection of K(c) over charged children ⊆ K(v)``.

    ``cones`` maps each node to its solvency cone; pass the original or the
    modified cones.
    """
    bad = []
    for v in tree.non_polar(tree.internal_nodes()):
        kids = tree.child_nodes(v)
        Lam = intersect(*(cones[kids[c]] for c in sorted(tree.charged_children(v))))
        hit = subset_witness(Lam, cones[v])
        if hit is not None:
            g, a = hit
            bad.append(Na2Violation(v, _na2_witness(Lam, cones[v], g, a), g, a))
    return Na2Report(not bad, tuple(bad))


# -- efficient friction ----------------------------------------------------


@dataclass(frozen=True)
class EfReport:
    holds: bool
    nodes: tuple = ()  # non-polar nodes whose dual cone has empty interior


def check_efficient_friction(tree: ScenarioTree, cones: Mapping) -> EfReport:
    bad = []
    for v in tree.non_polar():
        _, _, full = interior_point(dualize(cones[v]))
        if not full:
            bad.append(v)
    return EfReport(not bad, tuple(bad))


# -- strict no-arbitrage ---------------------------------------------------


@dataclass(frozen=True)
class NasReport:
    holds: bool
    per_time: tuple  # verdict per t = 0..T
    time: Optional[int] = None
    node: Optional[Node] = None
    claim: Optional[tuple] = None  # f(node), primitive
    transfers: dict = field(default_factory=dict)  # node -> xi


class _NasProgram:
    """Variables: non-negative coefficients on the generators of ``-K(v)`` for each traded node."""

    def __init__(self, tree, cm, t):
        self.tree, self.t = tree, t
        self.d = cm.dim
        self.traded = [v for v in tree.non_polar() if len(v) <= t]
        self.targets = [v for v in self.traded if len(v) == t]
        self.cols = []  # (node, generator)
        for v in self.traded:
            for g in cm.cones[v].generators:
                self.cols.append((v, g))
        self.cones = cm.cones

    def claim_rows(self, m):
        """Row ``j`` of ``f(m)`` as coefficients over the columns."""
        anc = {m[:s] for s in range(len(m) + 1)}
        rows = []
        for j in range(self.d):
            rows.append(
                [(-g[j] if v in anc else Fraction(0)) for v, g in self.cols]
            )
        return rows

    def constraints(self, fixed=None):
        out = []
        for m in self.targets:
            rows = self.claim_rows(m)
            for a in self.cones[m].halfspaces:
                coeffs = [
                    sum((a[j] * rows[j][k] for j in range(self.d) if a[j]), Fraction(0))
                    for k in range(len(self.cols))
                ]
                out.append(Constraint(coeffs, ">=", 0))
        if fixed is not None:
            m, r = fixed
            rows = self.claim_rows(m)
            for j in range(self.d):
                out.append(Constraint(rows[j], "==", r[j]))
        return out

    def transfers(self, x):
        xi = {}
        for (v, g), c in zip(self.cols, x):
            if c:
                cur = xi.get(v, (Fraction(0),) * self.d)
                xi[v] = tuple(a - c * b for a, b in zip(cur, g))
        return xi

    def claim(self, m, x):
        rows = self.claim_rows(m)
        return tuple(sum((r * c for r, c in zip(row, x) if r and c), Fraction(0)) for row in rows)


def check_nas(tree: ScenarioTree, cm: ConeMarket) -> NasReport:
    """Strict no-arbitrage: attainable claims that are solvent must lie in the lineality space.

    For each ``t`` the programme maximises ``sum <u_m, f(m)>`` over transfers
    ``xi(v) in -K(v)`` at non-polar nodes of time ``<= t`` with ``f(m) in K(m)``
    at non-polar time-``t`` nodes, where ``u_m`` is a relative-interior point of
    ``K*(m)``.  The feasible set is a cone, so the optimum is 0 or unbounded.
    """
    cm.check_tree(tree)
    verdicts = []
    first = None
    for t in range(tree.depth + 1):
        prog = _NasProgram(tree, cm, t)
        obj = [Fraction(0)] * len(prog.cols)
        u = {}
        for m in prog.targets:
            u[m], _, _ = interior_point(cm.dual(m))
            rows = prog.claim_rows(m)
            for k in range(len(prog.cols)):
                obj[k] += sum((u[m][j] * rows[j][k] for j in range(prog.d)), Fraction(0))
        out = solve(LpProblem(tuple(obj), tuple(prog.constraints())))
        ok = out.status == OPTIMAL
        assert ok or out.status == UNBOUNDED, out.status
        verdicts.append(ok)
        if not ok and first is None:
            first = (t, prog, out, u)
    if first is None:
        return NasReport(True, tuple(verdicts))
    t, prog, out, u = first
    return _nas_witness(cm, t, prog, out.ray, u, tuple(verdicts))


def _nas_witness(cm, t, prog, ray, u, verdicts):
    m = next(m for m in prog.targets if dot(u[m], prog.claim(m, ray)) > 0)
    f = prog.claim(m, ray)
    # Prefer a single extreme ray on the face of K(m) spanned by f that is attainable on its own.
    K = cm.cones[m]
    tight = [a for a in K.halfspaces if not dot(a, f)]
    for r in K.rays:
        if not dot(u[m], r) or any(dot(a, r) for a in tight):
            continue
        out = solve(LpProblem((0,) * len(prog.cols), tuple(prog.constraints((m, r)))))
        if out.status == OPTIMAL:
            return NasReport(False, verdicts, t, m, primitive(r), prog.transfers(out.x))
    return NasReport(False, verdicts, t, m, primitive(f), prog.transfers(ray))
