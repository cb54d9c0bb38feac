"""Strictly consistent price systems in the modified cone market.

Starting from an interior point of the root's modified dual cone, each
non-polar internal node splits its vector ``z`` into pieces ``w_c``, one per
charged child, each strictly inside that child's modified dual cone and
summing to ``z``.  With ``q`` uniform on the charged children, ``Z(c) = w_c / q(c)``
is then an exact ``q``-martingale step.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .cones import PolyCone, dot, interior_point, normalize1
from .cone_market import (
    ConeMarket,
    ModifiedConeMarket,
    backward_modify_cones,
    check_efficient_friction,
)
from .cps import Report
from .lp import Constraint, LpProblem, OPTIMAL, solve
from .tree import Node, ScenarioTree, TreeMeasure, dominated_by_family, dominates, node_str


class ExtensionInfeasible(ValueError):
    pass


def extend_scps_node(
    z: Sequence, child_duals: Sequence, charged, node: Node = ()
) -> tuple:
    """Return ``(kernel, {charged child: Z}, slack)`` for one node.

    ``child_duals[c]`` is the modified dual cone at child ``c``; ``z`` must be
    interior to the node's own modified dual cone (the caller checks this).
    """
    z = tuple(Fraction(x) for x in z)
    d = len(z)
    charged = sorted(charged)
    k = len(charged)
    nvar = d * k + 1
    rows = []
    for i, c in enumerate(charged):
        for a in child_duals[c].halfspaces:
            a = normalize1(a)
            coeffs = [Fraction(0)] * nvar
            coeffs[d * i : d * i + d] = a
            coeffs[-1] = Fraction(-1)
            rows.append(Constraint(coeffs, ">=", 0))
    for j in range(d):
        coeffs = [Fraction(0)] * nvar
        for i in range(k):
            coeffs[d * i + j] = Fraction(1)
        rows.append(Constraint(coeffs, "==", z[j]))
    obj = [Fraction(0)] * (nvar - 1) + [Fraction(1)]
    bounds = ((None, None),) * (nvar - 1) + ((None, 1),)
    out = solve(LpProblem(tuple(obj), tuple(rows), bounds))
    if out.status != OPTIMAL or out.x[-1] <= 0:
        raise ExtensionInfeasible(f"extension infeasible at {node_str(node)}")
    q = Fraction(1, k)
    n = len(child_duals)
    kernel = tuple(q if c in charged else Fraction(0) for c in range(n))
    Z = {c: tuple(x / q for x in out.x[d * i : d * i + d]) for i, c in enumerate(charged)}
    return kernel, Z, out.x[-1]


@dataclass(frozen=True)
class ScpsCertificate:
    Q: TreeMeasure
    Z: Mapping  # node -> d-vector
    dominating: Optional[TreeMeasure]
    slack: Mapping  # node -> positive LP slack certifying interiority


@dataclass(frozen=True)
class ScpsResult:
    certificate: Optional[ScpsCertificate]
    modified: ModifiedConeMarket
    failure: Optional[str] = None
    node: Optional[Node] = None

    @property
    def ok(self) -> bool:
        return self.certificate is not None


def construct_scps(
    tree: ScenarioTree,
    cm: ConeMarket,
    P: TreeMeasure,
    modified: Optional[ModifiedConeMarket] = None,
) -> ScpsResult:
    P.check_tree(tree)
    mod = modified if modified is not None else backward_modify_cones(tree, cm)
    ef = check_efficient_friction(tree, mod.k)
    if not ef.holds:
        v = ef.nodes[0]
        return ScpsResult(
            None, mod, f"no SCPS: modified dual cone has empty interior at {node_str(v)}", v
        )
    z0, t0, _ = interior_point(mod.kstar[()])
    Z = {(): z0}
    slack = {(): t0}
    kernels = {}
    for v in tree.internal_nodes():
        kids = tree.child_nodes(v)
        duals = [mod.kstar[c] for c in kids]
        if tree.is_polar(v):
            kernels[v] = P.kernels[v]
            for c in kids:
                Z[c], slack[c], _ = interior_point(mod.kstar[c])
            continue
        try:
            kernel, split, t = extend_scps_node(Z[v], duals, tree.charged_children(v), v)
        except ExtensionInfeasible as exc:
            return ScpsResult(None, mod, f"no SCPS: {exc}", v)
        kernels[v] = kernel
        for i, c in enumerate(kids):
            if i in split:
                Z[c] = split[i]
                slack[c] = t
            else:
                Z[c], slack[c], _ = interior_point(mod.kstar[c])
    Q = TreeMeasure(kernels)
    return ScpsResult(ScpsCertificate(Q, Z, dominated_by_family(tree, Q), slack), mod)


def verify_scps(
    tree: ScenarioTree, cm: ConeMarket, cert: ScpsCertificate, P: TreeMeasure
) -> Report:
    rep = Report()
    Q = cert.Q
    try:
        Q.check_tree(tree)
    except ValueError as exc:
        rep.fail(str(exc))
        return rep
    mod = backward_modify_cones(tree, cm)
    for v in tree.nodes():
        if not Q.charges(v):
            continue
        z = cert.Z.get(v)
        if z is None or len(z) != cm.dim:
            rep.fail(f"missing or malformed Z at {node_str(v)}")
            continue
        if not mod.kstar[v].contains_interior(z):
            rep.fail(f"Z not strictly inside the modified dual cone at {node_str(v)}")
        if not cm.dual(v).contains_interior(z):
            rep.fail(f"Z not strictly inside the dual solvency cone at {node_str(v)}")
        if not all(x > 0 for x in z):
            rep.fail(f"Z not strictly positive at {node_str(v)}")
        if not tree.is_leaf(v):
            kids = tree.child_nodes(v)
            q = Q.kernels[v]
            e = tuple(
                sum((q[i] * cert.Z[c][j] for i, c in enumerate(kids) if q[i]), Fraction(0))
                for j in range(cm.dim)
            )
            if e != tuple(z):
                rep.fail(f"martingale violated at {node_str(v)}")
    if not dominates(tree, Q, P):
        rep.fail("P is not absolutely continuous with respect to Q")
    if dominated_by_family(tree, Q) is None or cert.dominating is None:
        rep.fail("Q is not dominated by any member of the prior family")
    return rep


def mu_kernel(cert: ScpsCertificate, tree: ScenarioTree, node: Node, i: int) -> Optional[tuple]:
    """Kernel with weights ``q(c) Z_i(c) / z_i``, or ``None`` when ``z_i = 0``."""
    zi = cert.Z[node][i]
    if not zi:
        return None
    q = cert.Q.kernels[node]
    return tuple(q[k] * cert.Z[c][i] / zi if q[k] else Fraction(0)
                 for k, c in enumerate(tree.child_nodes(node)))
