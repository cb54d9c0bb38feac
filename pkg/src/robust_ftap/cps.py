"""Forward construction of consistent price systems in the modified ``[X, Y]`` market.

Each internal node is classified from ``a = min X`` and ``b = max Y`` over its
charged children and the incoming price ``s``:

=====  ====================  ========================================
tag    condition             extension
=====  ====================  ========================================
N      ``X_t > Y_t``         keep ``p``, weight 1/2, midpoint prices
A1     ``a = s < b``         keep ``p``, weight 0, price ``X``
A2     ``a < s = b``         keep ``p``, weight 1, price ``Y``
A3     ``a = s = b``         keep ``p``, weight 1/2, midpoint prices
A4     ``a < s < b``         mix a selected pair ``(q1, q2)``
=====  ====================  ========================================

On A1/A2/A3 the children's prices must all equal ``s``; a mismatch is an
arbitrage and is reported as :class:`NaViolation` rather than raised.
Polar internal nodes are filled in the N style.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .market import BidAskProcess, ModifiedProcess, backward_modify
from .tree import (
    Kernel,
    Node,
    ScenarioTree,
    TreeMeasure,
    dominated_by_family,
    dominates,
    node_str,
    support,
)

HALF = Fraction(1, 2)
TAGS = ("N", "A1", "A2", "A3", "A4")


class NotInterior(ValueError):
    pass


class NaViolation(Exception):
    """A quasi-sure claim of the extension failed; the market admits arbitrage."""

    def __init__(self, node, msg):
        super().__init__(f"NA violated at {node_str(node)}: {msg}")
        self.node = node
        self.msg = msg


@dataclass(frozen=True)
class PairSelection:
    q1: Kernel
    q2: Kernel
    f: Fraction
    g: Fraction
    weight: Fraction


def _expect(kernel, values):
    return sum((w * values[c] for c, w in enumerate(kernel) if w), Fraction(0))


def _tilt(n, charged, target, alpha):
    u = Fraction(1, len(charged))
    return tuple(
        ((1 - alpha) * u if c in charged else Fraction(0)) + (alpha if c == target else 0)
        for c in range(n)
    )


def select_pair(tree: ScenarioTree, node: Node, s, X: Mapping, Y: Mapping) -> PairSelection:
    """Deterministic full-support pair with ``E^{q2}[X] < s < E^{q1}[Y]``.

    ``X`` and ``Y`` map child index to the modified bid/ask of that child.
    """
    s = Fraction(s)
    charged = sorted(tree.charged_children(node))
    a = min(X[c] for c in charged)
    b = max(Y[c] for c in charged)
    if not a < s < b:
        raise NotInterior(f"not an interior point: {s} outside ({a}, {b}) at {node_str(node)}")
    n = tree.children[node]
    up = min(charged, key=lambda c: (-Y[c], c))
    down = min(charged, key=lambda c: (X[c], c))
    cs = set(charged)

    def first(target, ok):
        alpha = HALF
        while True:
            q = _tilt(n, cs, target, alpha)
            if ok(q):
                return q
            alpha = (1 + alpha) / 2

    q1 = first(up, lambda q: _expect(q, Y) > s)
    q2 = first(down, lambda q: _expect(q, X) < s)
    f = _expect(q1, Y) - s
    g = _expect(q2, X) - s
    return PairSelection(q1, q2, f, g, g / (g - f))


@dataclass(frozen=True)
class NodeExtension:
    tag: str
    kernel: Kernel
    weight: Fraction
    prices: tuple  # S-tilde per child


def extend_node(
    tree: ScenarioTree, node: Node, s, modified: ModifiedProcess, p: Kernel
) -> NodeExtension:
    s = Fraction(s)
    kids = tree.child_nodes(node)
    X = {i: modified.X[c] for i, c in enumerate(kids)}
    Y = {i: modified.Y[c] for i, c in enumerate(kids)}
    mid = tuple((X[i] + Y[i]) / 2 for i in range(len(kids)))
    Xt, Yt = modified.X[node], modified.Y[node]
    if Xt > Yt:
        return NodeExtension("N", tuple(p), HALF, mid)
    if not Xt <= s <= Yt:
        raise ValueError(f"price {s} outside [{Xt}, {Yt}] at {node_str(node)}")
    charged = sorted(tree.charged_children(node))
    a = min(X[c] for c in charged)
    b = max(Y[c] for c in charged)

    def pinned(values, name):
        bad = [c for c in charged if values[c] != s]
        if bad:
            raise NaViolation(
                node, f"{name} of charged child {bad[0]} is {values[bad[0]]}, expected {s}"
            )

    def fill(values):
        return tuple(values[i] if i in charged else mid[i] for i in range(len(kids)))

    if a == s < b:
        pinned(X, "X")
        return NodeExtension("A1", tuple(p), Fraction(0), fill(X))
    if a < s == b:
        pinned(Y, "Y")
        return NodeExtension("A2", tuple(p), Fraction(1), fill(Y))
    if a == s == b:
        pinned(X, "X")
        pinned(Y, "Y")
        return NodeExtension("A3", tuple(p), HALF, mid)
    pair = select_pair(tree, node, s, X, Y)
    lam = pair.weight
    q = tuple(lam * w1 + (1 - lam) * w2 for w1, w2 in zip(pair.q1, pair.q2))
    prices = tuple(
        (lam * pair.q1[i] * Y[i] + (1 - lam) * pair.q2[i] * X[i]) / q[i] if q[i] else mid[i]
        for i in range(len(kids))
    )
    return NodeExtension("A4", q, lam, prices)


@dataclass(frozen=True)
class CpsCertificate:
    Q: TreeMeasure
    prices: Mapping  # node -> S-tilde
    weights: Mapping  # internal node -> lambda
    tags: Mapping  # internal node -> case tag
    dominating: Optional[TreeMeasure]
    modified: ModifiedProcess


@dataclass(frozen=True)
class CpsResult:
    certificate: Optional[CpsCertificate]
    modified: ModifiedProcess
    failure: Optional[str] = None
    node: Optional[Node] = None

    @property
    def ok(self) -> bool:
        return self.certificate is not None


def root_price(modified: ModifiedProcess) -> Fraction:
    X0, Y0 = modified.X[()], modified.Y[()]
    return (X0 + Y0) / 2 if X0 < Y0 else X0


def construct_cps(tree: ScenarioTree, m: BidAskProcess, P: TreeMeasure) -> CpsResult:
    P.check_tree(tree)
    mod = backward_modify(tree, m)
    if mod.flagged:
        v = mod.flagged[0]
        return CpsResult(
            None, mod, f"NA fails: X = {mod.X[v]} > Y = {mod.Y[v]} at {node_str(v)}", v
        )
    prices = {(): root_price(mod)}
    kernels, weights, tags = {}, {}, {}
    for v in tree.internal_nodes():
        p = P.kernels[v]
        if tree.is_polar(v):
            kids = tree.child_nodes(v)
            ext = NodeExtension(
                "N", p, HALF, tuple((mod.X[c] + mod.Y[c]) / 2 for c in kids)
            )
        else:
            try:
                ext = extend_node(tree, v, prices[v], mod, p)
            except NaViolation as exc:
                return CpsResult(None, mod, f"NA fails: {exc}", v)
        kernels[v] = ext.kernel
        weights[v] = ext.weight
        tags[v] = ext.tag
        for i, c in enumerate(tree.child_nodes(v)):
            prices[c] = ext.prices[i]
    Q = TreeMeasure(kernels)
    cert = CpsCertificate(Q, prices, weights, tags, dominated_by_family(tree, Q), mod)
    return CpsResult(cert, mod)


@dataclass
class Report:
    ok: bool = True
    violations: list = field(default_factory=list)

    def fail(self, msg):
        self.ok = False
        self.violations.append(msg)

    def __bool__(self):
        return self.ok


def _weight_matches(tag, lam):
    if tag == "A1":
        return lam == 0
    if tag == "A2":
        return lam == 1
    if tag in ("A3", "N"):
        return lam == HALF
    if tag == "A4":
        return 0 < lam < 1
    return False


def verify_cps(
    tree: ScenarioTree, m: BidAskProcess, cert: CpsCertificate, P: TreeMeasure
) -> Report:
    rep = Report()
    Q = cert.Q
    try:
        Q.check_tree(tree)
    except ValueError as exc:
        rep.fail(str(exc))
        return rep
    mod = backward_modify(tree, m)
    for v in tree.nodes():
        if not Q.charges(v):
            continue
        s = cert.prices[v]
        if not m.bid(v) <= s <= m.ask(v):
            rep.fail(f"price {s} outside bid-ask [{m.bid(v)}, {m.ask(v)}] at {node_str(v)}")
        if not mod.X[v] <= s <= mod.Y[v]:
            rep.fail(f"price {s} outside [X, Y] = [{mod.X[v]}, {mod.Y[v]}] at {node_str(v)}")
        if not tree.is_leaf(v):
            e = _expect(Q.kernels[v], [cert.prices[c] for c in tree.child_nodes(v)])
            if e != s:
                rep.fail(f"martingale violated at {node_str(v)}: {e} != {s}")
    for v in tree.internal_nodes():
        tag, lam = cert.tags.get(v), cert.weights.get(v)
        if tag not in TAGS or lam is None or not 0 <= lam <= 1:
            rep.fail(f"bad weight/tag at {node_str(v)}")
        elif not _weight_matches(tag, lam):
            rep.fail(f"weight {lam} inconsistent with tag {tag} at {node_str(v)}")
    if not dominates(tree, Q, P):
        rep.fail("P is not absolutely continuous with respect to Q")
    if dominated_by_family(tree, Q) is None:
        rep.fail("Q is not dominated by any member of the prior family")
    return rep


def _runs(weights, hit, leave):
    """Start/stop indices of maximal runs: start when ``hit``, stop at the first later ``leave``."""
    T = len(weights)
    out = []
    t = 0
    while t < T:
        if hit(weights[t]):
            stop = next((u for u in range(t + 1, T) if leave(weights[u])), None)
            out.append((t, stop))
            if stop is None:
                break
            t = stop + 1
            # the next run starts strictly after the stop time
            continue
        t += 1
    return out


def verify_iiprime(tree: ScenarioTree, modified: ModifiedProcess, cert: CpsCertificate) -> Report:
    """Check the weight-path structure along every non-polar root-to-leaf path."""
    rep = Report()
    X, Y, S = modified.X, modified.Y, cert.prices
    T = tree.depth
    for leaf in tree.non_polar(tree.leaves()):
        path = [leaf[:t] for t in range(T + 1)]
        lam = [cert.weights[path[t]] for t in range(T)]
        for t in range(T):
            nxt = path[t + 1]
            if lam[t] == 0 and S[nxt] != X[nxt]:
                rep.fail(f"S-tilde != X after weight 0 at {node_str(nxt)}")
            elif lam[t] == 1 and S[nxt] != Y[nxt]:
                rep.fail(f"S-tilde != Y after weight 1 at {node_str(nxt)}")
            elif 0 < lam[t] < 1 and X[nxt] < Y[nxt] and not X[nxt] < S[nxt] < Y[nxt]:
                rep.fail(f"S-tilde not strictly inside the spread at {node_str(nxt)}")
        for start, stop in _runs(lam, lambda w: w == 0, lambda w: w > 0):
            end = T if stop is None else min(stop, T)
            v0 = path[start]
            if X[v0] != Y[v0] or any(X[path[t]] != X[v0] for t in range(start, end + 1)):
                rep.fail(f"weight-0 run from {node_str(v0)} does not freeze X")
        for start, stop in _runs(lam, lambda w: w == 1, lambda w: w < 1):
            end = T if stop is None else min(stop, T)
            v0 = path[start]
            if X[v0] != Y[v0] or any(Y[path[t]] != Y[v0] for t in range(start, end + 1)):
                rep.fail(f"weight-1 run from {node_str(v0)} does not freeze Y")
    return rep
