"""JSON instance and result files, plus the seeded random instance generator.

Rationals travel as strings ``"p/q"`` or ``"p"``; JSON numbers are rejected
wherever a rational is expected so no float can slip in.  Nodes are written
as paths: ``"/"`` for the root, ``"/0/1"`` for its second grandchild via
child 0.  Emission sorts keys, which makes ``emit(parse(x))`` canonical.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Optional

from .cone_market import ConeMarket, ConeMarketError, bidask_generators
from .cones import ConeError, PolyCone, is_subset
from .market import BidAskProcess, MarketError
from .tree import (
    PriorFamily,
    ScenarioTree,
    TreeError,
    TreeMeasure,
    contains_measure,
    node_str,
)

VERSION = 1
MODES = ("bidask2d", "cones")
_RATIONAL = re.compile(r"-?\d+(/\d+)?")
_NODE = re.compile(r"/|(/\d+)+")


class ParseError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path
        self.msg = msg


# -- primitive codecs --------------------------------------------------------


def fmt_q(x) -> str:
    return str(Fraction(x))


def parse_q(s: Any, path: str) -> Fraction:
    if not isinstance(s, str):
        raise ParseError(path, f"expected a rational string, got {type(s).__name__}")
    if not _RATIONAL.fullmatch(s):
        raise ParseError(path, f"malformed rational {s!r}")
    try:
        return Fraction(s)
    except ZeroDivisionError:
        raise ParseError(path, f"zero denominator in {s!r}") from None


def parse_node(s: Any, path: str) -> tuple:
    if not isinstance(s, str) or not _NODE.fullmatch(s):
        raise ParseError(path, f"malformed node id {s!r}")
    return () if s == "/" else tuple(int(p) for p in s[1:].split("/"))


def _vec(v, path):
    if not isinstance(v, list):
        raise ParseError(path, "expected a list")
    return tuple(parse_q(x, f"{path}[{i}]") for i, x in enumerate(v))


def _obj(o, path, required=(), optional=()):
    if not isinstance(o, dict):
        raise ParseError(path, "expected an object")
    for k in o:
        if k not in required and k not in optional:
            raise ParseError(f"{path}.{k}", "unknown field")
    for k in required:
        if k not in o:
            raise ParseError(f"{path}.{k}", "missing field")
    return o


def _int(v, path, lo=0):
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise ParseError(path, f"expected an integer >= {lo}")
    return v


def _nodemap(o, path):
    if not isinstance(o, dict):
        raise ParseError(path, "expected an object keyed by node id")
    return {parse_node(k, f"{path}.{k}"): (k, v) for k, v in o.items()}


def _vecs(vs):
    return [[fmt_q(x) for x in v] for v in vs]


# -- instances ----------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    mode: str
    tree: ScenarioTree
    market: Any  # BidAskProcess or ConeMarket
    generators: Optional[Mapping] = None  # cone mode: node -> generator list as given
    measure: Optional[TreeMeasure] = None

    def cone_market(self) -> ConeMarket:
        if self.mode == "cones":
            return self.market
        from .cone_market import from_bidask

        return from_bidask(self.tree, self.market)


def _parse_tree(o, path):
    _obj(o, path, ("depth", "nodes"))
    depth = _int(o["depth"], f"{path}.depth")
    children, families = {}, {}
    for v, (key, entry) in _nodemap(o["nodes"], f"{path}.nodes").items():
        p = f"{path}.nodes.{key}"
        _obj(entry, p, ("children", "kernels"))
        children[v] = _int(entry["children"], f"{p}.children", 1)
        ks = entry["kernels"]
        if not isinstance(ks, list) or not ks:
            raise ParseError(f"{p}.kernels", "expected a nonempty list of kernels")
        kernels = []
        for i, k in enumerate(ks):
            kp = f"{p}.kernels[{i}]"
            vec = _vec(k, kp)
            if len(vec) != children[v]:
                raise ParseError(kp, f"kernel has {len(vec)} weights for {children[v]} children")
            try:
                kernels.append(PriorFamily((vec,)).kernels[0])
            except TreeError as exc:
                raise ParseError(kp, str(exc)) from None
        families[v] = PriorFamily(tuple(kernels))
    try:
        return ScenarioTree(depth, children, families)
    except TreeError as exc:
        raise ParseError(f"{path}.nodes", str(exc)) from None


def _parse_measure(o, tree, path):
    _obj(o, path, ("kernels",), ("outside",))
    outside = o.get("outside", False)
    if not isinstance(outside, bool):
        raise ParseError(f"{path}.outside", "expected a boolean")
    kernels = {}
    for v, (key, k) in _nodemap(o["kernels"], f"{path}.kernels").items():
        try:
            kernels[v] = PriorFamily((_vec(k, f"{path}.kernels.{key}"),)).kernels[0]
        except TreeError as exc:
            raise ParseError(f"{path}.kernels.{key}", str(exc)) from None
    try:
        P = TreeMeasure(kernels, outside)
        P.check_tree(tree)
    except TreeError as exc:
        raise ParseError(f"{path}.kernels", str(exc)) from None
    if not outside and not contains_measure(tree, P):
        raise ParseError(path, "measure lies outside the prior family")
    return P


def parse_measure(o, tree, path="$.measure") -> TreeMeasure:
    return _parse_measure(o, tree, path)


def instance_from_obj(o) -> Instance:
    _obj(o, "$", ("version", "mode", "tree", "market"), ("measure",))
    if o["version"] != VERSION:
        raise ParseError("$.version", f"unsupported version {o['version']!r}")
    mode = o["mode"]
    if mode not in MODES:
        raise ParseError("$.mode", f"unknown mode {mode!r}")
    tree = _parse_tree(o["tree"], "$.tree")
    gens = None
    if mode == "bidask2d":
        quotes = {}
        for v, (key, q) in _nodemap(o["market"], "$.market").items():
            p = f"$.market.{key}"
            _obj(q, p, ("bid", "ask"))
            quotes[v] = (parse_q(q["bid"], f"{p}.bid"), parse_q(q["ask"], f"{p}.ask"))
        try:
            market = BidAskProcess(quotes)
            market.check_tree(tree)
        except MarketError as exc:
            raise ParseError("$.market", str(exc)) from None
    else:
        mk = _obj(o["market"], "$.market", ("dim", "cones"))
        d = _int(mk["dim"], "$.market.dim", 1)
        gens = {}
        for v, (key, gl) in _nodemap(mk["cones"], "$.market.cones").items():
            p = f"$.market.cones.{key}"
            if not isinstance(gl, list):
                raise ParseError(p, "expected a list of generators")
            gens[v] = [_vec(g, f"{p}[{i}]") for i, g in enumerate(gl)]
            for i, g in enumerate(gens[v]):
                if len(g) != d:
                    raise ParseError(f"{p}[{i}]", f"generator has length {len(g)}, dim is {d}")
            if not is_subset(PolyCone.orthant(d), PolyCone.from_generators(d, gens[v])):
                raise ParseError(p, "cone does not contain the orthant")
        try:
            market = ConeMarket.from_generators(d, gens)
            market.check_tree(tree)
        except (ConeMarketError, ConeError) as exc:
            raise ParseError("$.market", str(exc)) from None
    measure = _parse_measure(o["measure"], tree, "$.measure") if "measure" in o else None
    return Instance(mode, tree, market, gens, measure)


def parse_instance(text: str) -> Instance:
    try:
        o = json.loads(text, parse_float=_reject_float, parse_constant=_reject_float)
    except json.JSONDecodeError as exc:
        raise ParseError("$", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    return instance_from_obj(o)


def _reject_float(s):
    raise ParseError("$", f"floating-point literal {s} not allowed; use a 'p/q' string")


def measure_obj(P: TreeMeasure) -> dict:
    o = {"kernels": {node_str(v): [fmt_q(w) for w in k] for v, k in P.kernels.items()}}
    if P.outside:
        o["outside"] = True
    return o


def instance_obj(inst: Instance) -> dict:
    tree = inst.tree
    nodes = {
        node_str(v): {
            "children": tree.children[v],
            "kernels": _vecs(tree.families[v].kernels),
        }
        for v in tree.internal_nodes()
    }
    o = {
        "version": VERSION,
        "mode": inst.mode,
        "tree": {"depth": tree.depth, "nodes": nodes},
    }
    if inst.mode == "bidask2d":
        o["market"] = {
            node_str(v): {"bid": fmt_q(b), "ask": fmt_q(a)} for v, (b, a) in inst.market.quotes.items()
        }
    else:
        gens = inst.generators or {v: K.generators for v, K in inst.market.cones.items()}
        o["market"] = {
            "dim": inst.market.dim,
            "cones": {node_str(v): _vecs(g) for v, g in gens.items()},
        }
    if inst.measure is not None:
        o["measure"] = measure_obj(inst.measure)
    return o


def dumps(o) -> str:
    return json.dumps(o, sort_keys=True, indent=2) + "\n"


def emit_instance(inst: Instance) -> str:
    return dumps(instance_obj(inst))


def load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


# -- certificates -------------------------------------------------------------


def _kernels_obj(P: Optional[TreeMeasure]):
    if P is None:
        return None
    return {node_str(v): [fmt_q(w) for w in k] for v, k in P.kernels.items()}


def _kernels_parse(o, tree, path):
    if o is None:
        return None
    return _parse_measure({"kernels": o, "outside": True}, tree, path)


def cps_obj(cert) -> dict:
    return {
        "kind": "cps",
        "Q": _kernels_obj(cert.Q),
        "prices": {node_str(v): fmt_q(s) for v, s in cert.prices.items()},
        "weights": {node_str(v): fmt_q(w) for v, w in cert.weights.items()},
        "tags": {node_str(v): t for v, t in cert.tags.items()},
        "dominating": _kernels_obj(cert.dominating),
    }


def parse_cps(o, inst: Instance, path="$.certificate"):
    from .cps import CpsCertificate
    from .market import backward_modify

    _obj(o, path, ("kind", "Q", "prices", "weights", "tags", "dominating"))
    if o["kind"] != "cps":
        raise ParseError(f"{path}.kind", "expected a cps certificate")
    Q = _kernels_parse(o["Q"], inst.tree, f"{path}.Q")
    prices = {v: parse_q(s, f"{path}.prices.{k}") for v, (k, s) in _nodemap(o["prices"], f"{path}.prices").items()}
    weights = {v: parse_q(s, f"{path}.weights.{k}") for v, (k, s) in _nodemap(o["weights"], f"{path}.weights").items()}
    tags = {}
    for v, (k, t) in _nodemap(o["tags"], f"{path}.tags").items():
        if not isinstance(t, str):
            raise ParseError(f"{path}.tags.{k}", "expected a tag string")
        tags[v] = t
    if set(prices) != set(inst.tree.nodes()):
        raise ParseError(f"{path}.prices", "prices must cover every node")
    dom = _kernels_parse(o["dominating"], inst.tree, f"{path}.dominating")
    return CpsCertificate(Q, prices, weights, tags, dom, backward_modify(inst.tree, inst.market))


def scps_obj(cert) -> dict:
    return {
        "kind": "scps",
        "Q": _kernels_obj(cert.Q),
        "Z": {node_str(v): [fmt_q(x) for x in z] for v, z in cert.Z.items()},
        "slack": {node_str(v): fmt_q(t) for v, t in cert.slack.items()},
        "dominating": _kernels_obj(cert.dominating),
    }


def parse_scps(o, inst: Instance, path="$.certificate"):
    from .scps import ScpsCertificate

    _obj(o, path, ("kind", "Q", "Z", "slack", "dominating"))
    if o["kind"] != "scps":
        raise ParseError(f"{path}.kind", "expected an scps certificate")
    Q = _kernels_parse(o["Q"], inst.tree, f"{path}.Q")
    Z = {v: _vec(z, f"{path}.Z.{k}") for v, (k, z) in _nodemap(o["Z"], f"{path}.Z").items()}
    slack = {v: parse_q(s, f"{path}.slack.{k}") for v, (k, s) in _nodemap(o["slack"], f"{path}.slack").items()}
    dom = _kernels_parse(o["dominating"], inst.tree, f"{path}.dominating")
    return ScpsCertificate(Q, Z, dom, slack)


def parse_certificate(text: str, inst: Instance):
    """Accept either a bare certificate object or a result file carrying one."""
    try:
        o = json.loads(text, parse_float=_reject_float, parse_constant=_reject_float)
    except json.JSONDecodeError as exc:
        raise ParseError("$", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    path = "$"
    if isinstance(o, dict) and "certificate" in o and "kind" not in o:
        o, path = o["certificate"], "$.certificate"
    if not isinstance(o, dict) or "kind" not in o:
        raise ParseError(path, "no certificate found")
    if o["kind"] == "cps":
        return parse_cps(o, inst, path)
    if o["kind"] == "scps":
        return parse_scps(o, inst, path)
    raise ParseError(f"{path}.kind", f"unknown certificate kind {o['kind']!r}")


# -- generator ----------------------------------------------------------------

DEFAULT_PARAMS = {
    "bidask2d": {"depth": 3, "max_children": 3, "max_kernels": 2},
    "cones": {"depth": 2, "max_children": 3, "max_kernels": 2, "d": 3},
}
LIMITS = {"depth": 3, "max_children": 3, "max_kernels": 2, "d": 3}


def _check_params(params):
    for k, v in params.items():
        if k == "mode":
            continue
        if k not in LIMITS:
            raise ValueError(f"unknown generator parameter {k!r}")
        lo = 2 if k == "d" else 1 if k != "depth" else 0
        if not isinstance(v, int) or not lo <= v <= LIMITS[k]:
            raise ValueError(f"generator parameter {k} = {v!r} out of range [{lo}, {LIMITS[k]}]")


def _kernel(rng, n):
    # Supports occasionally skip children so polar branches appear.
    while True:
        w = [rng.choice((0, 0, 1, 2, 3, 4, 5, 6, 7, 8)) if n > 1 else 1 for _ in range(n)]
        if sum(w):
            break
    total = sum(w)
    return tuple(Fraction(x, total) for x in w)


def _gen_tree(rng, depth, max_children, max_kernels):
    children, families = {}, {}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            n = rng.randint(1, max_children)
            children[v] = n
            nk = 2 if max_kernels > 1 and rng.random() < 0.25 else 1
            families[v] = PriorFamily(tuple(_kernel(rng, n) for _ in range(nk)))
            nxt.extend(v + (i,) for i in range(n))
        frontier = nxt
    return ScenarioTree(depth, children, families)


def _gen_quotes(rng, tree):
    """Random-walk mid prices on a quarter grid with occasional zero spreads."""
    mids, quotes = {}, {}
    for v in tree.nodes():
        if v:
            step = Fraction(rng.choice((-2, -1, -1, 0, 0, 1, 1, 2)), 4)
            mids[v] = min(max(mids[v[:-1]] + step, Fraction(3, 2)), Fraction(6))
        else:
            mids[v] = Fraction(rng.randint(8, 16), 4)
        half = Fraction(rng.choice((0, 0, 1, 1, 2)), 8)
        quotes[v] = (mids[v] - half, mids[v] + half)
    return quotes


def _gen_prices(rng, tree, d):
    prices = {}
    for v in tree.nodes():
        if v:
            prev = prices[v[:-1]]
            prices[v] = tuple(
                min(max(p + Fraction(rng.choice((-1, 0, 0, 1)), 8), Fraction(1, 2)), Fraction(4))
                if i else p
                for i, p in enumerate(prev)
            )
        else:
            prices[v] = (Fraction(1),) + tuple(Fraction(rng.randint(4, 16), 8) for _ in range(d - 1))
    return prices


def _gen_cone_generators(rng, price):
    """Orthant plus the trades of a bid-ask matrix around ``price`` (``pi[i][j] * pi[j][i] >= 1``)."""
    d = len(price)
    gens = [tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)]
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            # Units of asset i paid for one unit of asset j, rounded up onto a 1/64 grid.
            pij = price[j] / price[i] * (1 + Fraction(rng.choice((0, 0, 1, 2)), 16))
            pij = Fraction(-((-pij.numerator * 64) // pij.denominator), 64)
            g = [Fraction(0)] * d
            g[i], g[j] = pij, Fraction(-1)
            gens.append(tuple(g))
    return gens


def gen_instance(seed: int, params: Optional[Mapping] = None) -> Instance:
    params = dict(params or {})
    mode = params.pop("mode", "bidask2d")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    full = dict(DEFAULT_PARAMS[mode])
    full.update(params)
    _check_params(full)
    rng = random.Random(f"{mode}:{seed}")
    depth = rng.randint(min(1, full["depth"]), full["depth"])
    tree = _gen_tree(rng, depth, full["max_children"], full["max_kernels"])
    if mode == "bidask2d":
        market = BidAskProcess(_gen_quotes(rng, tree))
        return Instance(mode, tree, market)
    d = rng.randint(2, full.get("d", 3))
    prices = _gen_prices(rng, tree, d)
    gens = {v: _gen_cone_generators(rng, prices[v]) for v in tree.nodes()}
    return Instance(mode, tree, ConeMarket.from_generators(d, gens), gens)


def result_obj(command: str, verdict: str, **extra) -> dict:
    o = {"command": command, "verdict": verdict}
    o.update(extra)
    return o


def vec_strs(v):
    return [fmt_q(x) for x in v]


def bidask_as_cones(inst: Instance) -> Instance:
    gens = {v: bidask_generators(*inst.market.quotes[v]) for v in inst.tree.nodes()}
    return Instance("cones", inst.tree, ConeMarket.from_generators(2, gens), gens, inst.measure)
