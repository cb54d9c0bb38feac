"""Command-line front end.

Every command reads an instance file (``--in``), writes a JSON result to
stdout or ``--out`` and a one-line summary to stderr.  Exit codes: 0 verdict
holds or object built, 1 verdict fails, 2 checker/builder disagreement in
``equiv``, 64 usage error, 65 unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from typing import Optional

from . import harness
from .arbitrage import check_na
from .cone_market import (
    backward_modify_cones,
    check_efficient_friction,
    check_na2,
    check_nas,
)
from .cps import construct_cps, verify_cps, verify_iiprime
from .instances import (
    Instance,
    ParseError,
    cps_obj,
    dumps,
    emit_instance,
    fmt_q,
    gen_instance,
    instance_obj,
    load_instance,
    measure_obj,
    parse_certificate,
    parse_measure,
    scps_obj,
    vec_strs,
)
from .market import backward_modify
from .scps import construct_scps, verify_scps
from .tree import TreeMeasure, node_str, selection_measure

EXIT_OK, EXIT_FAIL, EXIT_DISAGREE, EXIT_USAGE, EXIT_PARSE = 0, 1, 2, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _cone_obj(K):
    return {"lineality": [vec_strs(v) for v in K.lineality], "rays": [vec_strs(v) for v in K.rays]}


def _select_measure(inst: Instance, choice: Optional[str]) -> TreeMeasure:
    tree = inst.tree
    internal = tree.internal_nodes()
    if choice is None:
        if inst.measure is not None:
            return inst.measure
        return selection_measure(tree, {v: 0 for v in internal})
    if re.fullmatch(r"\d+(,\d+)*", choice) or (choice == "" and not internal):
        idx = [int(x) for x in choice.split(",")] if choice else []
        if len(idx) != len(internal):
            raise UsageError(
                f"--measure: {len(idx)} indices given for {len(internal)} internal nodes"
            )
        sel = {}
        for v, i in zip(internal, idx):
            if i >= len(tree.families[v].kernels):
                raise UsageError(f"--measure: no kernel {i} at {node_str(v)}")
            sel[v] = i
        return selection_measure(tree, sel)
    try:
        with open(choice, encoding="utf-8") as fh:
            o = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--measure: cannot read {choice}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError("$", f"invalid JSON: {exc.msg}") from None
    if isinstance(o, dict) and "measure" in o:
        return parse_measure(o["measure"], tree, "$.measure")
    return parse_measure(o, tree, "$")


def _need_bidask(inst, cmd):
    if inst.mode != "bidask2d":
        raise UsageError(f"{cmd} needs a bidask2d instance, got mode {inst.mode!r}")


def _cones(inst):
    return inst.cone_market()


# -- commands ------------------------------------------------------------------


def cmd_check_na(inst, args):
    _need_bidask(inst, "check-na")
    rep = check_na(inst.tree, inst.market)
    if rep.holds:
        return EXIT_OK, {"verdict": "holds"}, "NA holds"
    strat = {
        node_str(v): {"buy": fmt_q(b), "sell": fmt_q(s), "money": fmt_q(d0)}
        for v, (b, s, d0) in sorted(rep.strategy.orders.items())
    }
    witness = {
        "strategy": strat,
        "leaf": node_str(rep.leaf),
        "component": rep.component,
        "claim": vec_strs(rep.claim),
        "claims": {node_str(v): vec_strs(f) for v, f in rep.claims.items()},
        "measure": measure_obj(rep.measure),
    }
    msg = f"NA fails: claim ({', '.join(vec_strs(rep.claim))}) at leaf {node_str(rep.leaf)}"
    return EXIT_FAIL, {"verdict": "fails", "witness": witness}, msg


def cmd_modify(inst, args):
    _need_bidask(inst, "modify")
    mod = backward_modify(inst.tree, inst.market)
    body = {
        "X": {node_str(v): fmt_q(x) for v, x in mod.X.items()},
        "Y": {node_str(v): fmt_q(y) for v, y in mod.Y.items()},
        "flagged": [node_str(v) for v in mod.flagged],
    }
    if mod.flagged:
        v = mod.flagged[0]
        body["verdict"] = "fails"
        return EXIT_FAIL, body, f"X = {mod.X[v]} > Y = {mod.Y[v]} at {node_str(v)}"
    body["verdict"] = "holds"
    return EXIT_OK, body, "no node with X > Y"


def cmd_build_cps(inst, args):
    _need_bidask(inst, "build-cps")
    P = _select_measure(inst, args.measure)
    res = construct_cps(inst.tree, inst.market, P)
    if not res.ok:
        diag = {"failure": res.failure, "node": node_str(res.node)}
        return EXIT_FAIL, {"verdict": "failed", "diagnostics": diag}, res.failure
    rep = verify_cps(inst.tree, inst.market, res.certificate, P)
    body = {
        "verdict": "built" if rep else "failed",
        "measure": measure_obj(P),
        "certificate": cps_obj(res.certificate),
    }
    if not rep:
        body["diagnostics"] = {"violations": rep.violations}
        return EXIT_FAIL, body, "; ".join(rep.violations)
    return EXIT_OK, body, "consistent price system built and verified"


def _read_cert(inst, args):
    if not args.cert:
        raise UsageError("--cert FILE is required")
    try:
        with open(args.cert, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"--cert: cannot read {args.cert}: {exc.strerror}") from None
    return parse_certificate(text, inst)


def cmd_verify_cps(inst, args):
    _need_bidask(inst, "verify-cps")
    cert = _read_cert(inst, args)
    if not hasattr(cert, "prices"):
        raise UsageError("verify-cps needs a cps certificate")
    P = _select_measure(inst, args.measure)
    rep = verify_cps(inst.tree, inst.market, cert, P)
    rep2 = verify_iiprime(inst.tree, cert.modified, cert)
    violations = rep.violations + rep2.violations
    body = {"verdict": "holds" if not violations else "fails", "violations": violations}
    if violations:
        return EXIT_FAIL, body, violations[0]
    return EXIT_OK, body, "certificate verified"


def cmd_check_na2(inst, args):
    cm = _cones(inst)
    cones = backward_modify_cones(inst.tree, cm).k if args.modified else cm.cones
    rep = check_na2(inst.tree, cones)
    body = {
        "verdict": "holds" if rep.holds else "fails",
        "market": "modified" if args.modified else "original",
        "violations": [
            {
                "node": node_str(x.node),
                "witness": vec_strs(x.witness),
                "point": vec_strs(x.point),
                "generator": vec_strs(x.generator),
                "normal": vec_strs(x.normal),
            }
            for x in rep.violations
        ],
    }
    if rep.holds:
        return EXIT_OK, body, "NA2 holds"
    x = rep.violations[0]
    return EXIT_FAIL, body, f"NA2 fails at {node_str(x.node)}: ({', '.join(vec_strs(x.point))})"


def cmd_check_ef(inst, args):
    cm = _cones(inst)
    cones = backward_modify_cones(inst.tree, cm).k if args.modified else cm.cones
    rep = check_efficient_friction(inst.tree, cones)
    body = {
        "verdict": "holds" if rep.holds else "fails",
        "market": "modified" if args.modified else "original",
        "nodes": [node_str(v) for v in rep.nodes],
    }
    if rep.holds:
        return EXIT_OK, body, "efficient friction holds"
    return EXIT_FAIL, body, f"efficient friction fails at {node_str(rep.nodes[0])}"


def cmd_check_nas(inst, args):
    rep = check_nas(inst.tree, _cones(inst))
    body = {"verdict": "holds" if rep.holds else "fails", "per_time": list(rep.per_time)}
    if rep.holds:
        return EXIT_OK, body, "strict no-arbitrage holds"
    body["witness"] = {
        "time": rep.time,
        "node": node_str(rep.node),
        "claim": vec_strs(rep.claim),
        "transfers": {node_str(v): vec_strs(x) for v, x in sorted(rep.transfers.items())},
    }
    return (
        EXIT_FAIL,
        body,
        f"strict no-arbitrage fails at t = {rep.time}, {node_str(rep.node)}: "
        f"({', '.join(vec_strs(rep.claim))})",
    )


def cmd_modify_cones(inst, args):
    mod = backward_modify_cones(inst.tree, _cones(inst))
    body = {
        "verdict": "holds",
        "kstar": {node_str(v): _cone_obj(K) for v, K in mod.kstar.items()},
        "k": {node_str(v): _cone_obj(K) for v, K in mod.k.items()},
        "gamma": {node_str(v): _cone_obj(K) for v, K in mod.gamma.items()},
        "lambda": {node_str(v): _cone_obj(K) for v, K in mod.lam.items()},
    }
    return EXIT_OK, body, "modified cones computed"


def cmd_build_scps(inst, args):
    cm = _cones(inst)
    P = _select_measure(inst, args.measure)
    res = construct_scps(inst.tree, cm, P)
    if not res.ok:
        diag = {"failure": res.failure, "node": node_str(res.node)}
        return EXIT_FAIL, {"verdict": "failed", "diagnostics": diag}, res.failure
    rep = verify_scps(inst.tree, cm, res.certificate, P)
    body = {
        "verdict": "built" if rep else "failed",
        "measure": measure_obj(P),
        "certificate": scps_obj(res.certificate),
    }
    if not rep:
        body["diagnostics"] = {"violations": rep.violations}
        return EXIT_FAIL, body, "; ".join(rep.violations)
    return EXIT_OK, body, "strictly consistent price system built and verified"


def cmd_verify_scps(inst, args):
    cert = _read_cert(inst, args)
    if not hasattr(cert, "Z"):
        raise UsageError("verify-scps needs an scps certificate")
    P = _select_measure(inst, args.measure)
    rep = verify_scps(inst.tree, _cones(inst), cert, P)
    body = {"verdict": "holds" if rep else "fails", "violations": rep.violations}
    if not rep:
        return EXIT_FAIL, body, rep.violations[0]
    return EXIT_OK, body, "certificate verified"


COMMANDS = {
    "check-na": cmd_check_na,
    "modify": cmd_modify,
    "build-cps": cmd_build_cps,
    "verify-cps": cmd_verify_cps,
    "check-na2": cmd_check_na2,
    "check-ef": cmd_check_ef,
    "check-nas": cmd_check_nas,
    "modify-cones": cmd_modify_cones,
    "build-scps": cmd_build_scps,
    "verify-scps": cmd_verify_scps,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="robust-ftap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--in", dest="infile", required=True, metavar="FILE")
        s.add_argument("--out", metavar="FILE")
        if name in ("build-cps", "verify-cps", "build-scps", "verify-scps"):
            s.add_argument("--measure", metavar="INDEX|FILE")
        if name in ("verify-cps", "verify-scps"):
            s.add_argument("--cert", metavar="FILE")
        if name in ("check-na2", "check-ef"):
            s.add_argument("--modified", action="store_true", help="test the modified cones")
    g = sub.add_parser("gen")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--mode", choices=("bidask2d", "cones"), default="bidask2d")
    g.add_argument("--out", metavar="FILE")
    e = sub.add_parser("equiv")
    e.add_argument("--mode", choices=("bidask2d", "cones"), required=True)
    e.add_argument("--count", type=int, default=200)
    e.add_argument("--seed", type=int, default=1, help="first seed")
    e.add_argument("--out", metavar="FILE")
    return p


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    if args.command == "gen":
        inst = gen_instance(args.seed, {"mode": args.mode})
        _write(emit_instance(inst), args.out)
        return EXIT_OK
    if args.command == "equiv":
        if args.count < 1:
            raise UsageError("--count must be positive")
        t0 = time.perf_counter()
        s = harness.run_equivalence(range(args.seed, args.seed + args.count), args.mode)
        body = {
            "command": "equiv",
            "mode": args.mode,
            "seeds": [args.seed, args.seed + args.count - 1],
            "agree": s.agree,
            "total": len(s.records),
            "holds": s.holds,
            "records": [{"seed": k, "checker": c, "builder": b} for k, c, b in s.records],
            "disagreements": [
                {"seed": k, "instance": instance_obj(inst)} for k, inst in s.disagreements
            ],
            "verdict": "holds" if s.ok else "fails",
            "timing": {"ms": int((time.perf_counter() - t0) * 1000)},
        }
        _write(dumps(body), args.out)
        print(f"{s.agree}/{len(s.records)} agreement ({args.mode})", file=sys.stderr)
        for k, inst in s.disagreements:
            print(f"disagreement at seed {k}:", file=sys.stderr)
            sys.stderr.write(emit_instance(inst))
        return EXIT_OK if s.ok else EXIT_DISAGREE
    inst = load_instance(args.infile)
    t0 = time.perf_counter()
    code, body, msg = COMMANDS[args.command](inst, args)
    result = {"command": args.command, "input": args.infile}
    result.update(body)
    result["timing"] = {"ms": int((time.perf_counter() - t0) * 1000)}
    _write(dumps(result), args.out)
    print(msg, file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        return _run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
