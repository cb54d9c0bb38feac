from fractions import Fraction as F

import pytest

from conftest import chain_market, chain_measure, one_period
from robust_ftap.cone_market import (
    ConeMarket,
    backward_modify_cones,
    check_efficient_friction,
    check_nas,
    from_bidask,
)
from robust_ftap.cones import PolyCone
from robust_ftap.instances import gen_instance
from robust_ftap.scps import (
    ExtensionInfeasible,
    ScpsCertificate,
    construct_scps,
    extend_scps_node,
    mu_kernel,
    verify_scps,
)
from robust_ftap.tree import TreeMeasure, selection_measure

gens = PolyCone.from_generators


def _solvent_tomorrow():
    tree, m = chain_market([(1, 3), (2, 4)])
    return tree, m, from_bidask(tree, m)


def test_solvent_tomorrow_certificate():
    tree, m, cm = _solvent_tomorrow()
    P = chain_measure(tree)
    res = construct_scps(tree, cm, P)
    assert res.ok
    Z = res.certificate.Z
    assert Z[()] == Z[(0,)] == (F(7, 17), 1)
    assert 2 < Z[(0,)][1] / Z[(0,)][0] < 4
    assert 2 < Z[()][1] / Z[()][0] < 3
    assert verify_scps(tree, cm, res.certificate, P).ok


def test_orthant_extension_is_uniform():
    z = (F(1), F(1))
    kernel, split, slack = extend_scps_node(z, [PolyCone.orthant(2)] * 2, {0, 1})
    assert kernel == (F(1, 2), F(1, 2))
    assert split == {0: (1, 1), 1: (1, 1)}
    assert slack > 0


def test_single_child_extension_keeps_vector():
    kernel, split, slack = extend_scps_node((2, 5), [gens(2, [(1, 2), (1, 4)])], {0})
    assert kernel == (1,) and split == {0: (2, 5)} and slack == F(1, 3)


def test_extension_infeasible_names_node():
    with pytest.raises(ExtensionInfeasible, match="/0"):
        extend_scps_node((1, 1), [gens(2, [(1, 2), (1, 4)])], {0}, (0,))


def test_frictionless_start_has_no_scps():
    tree, m = chain_market([(1, 1), (1, 2)])
    res = construct_scps(tree, from_bidask(tree, m), chain_measure(tree))
    assert not res.ok
    assert res.failure == "no SCPS: modified dual cone has empty interior at /"
    assert res.node == ()


def test_tampered_density_fails_strictness():
    tree, m, cm = _solvent_tomorrow()
    P = chain_measure(tree)
    cert = construct_scps(tree, cm, P).certificate
    bad = ScpsCertificate(cert.Q, {**cert.Z, (0,): (F(1), F(4))}, cert.dominating, cert.slack)
    rep = verify_scps(tree, cm, bad, P)
    assert not rep.ok
    assert any("strictly inside" in v and "/0" in v for v in rep.violations)


def test_charging_an_uncharged_child_fails_domination():
    tree, m = one_period([(1, 0)], (1, 3), [(2, 4), (2, 4)])
    cm = from_bidask(tree, m)
    P = selection_measure(tree, {(): 0})
    cert = construct_scps(tree, cm, P).certificate
    Z = {**cert.Z, (1,): cert.Z[(0,)]}
    bad = ScpsCertificate(TreeMeasure({(): (F(1, 2), F(1, 2))}), Z, None, cert.slack)
    rep = verify_scps(tree, cm, bad, P)
    assert not rep.ok
    assert any("prior family" in v for v in rep.violations)


# -- generated instances -------------------------------------------------------------


def _extreme(tree):
    for sel in tree.extreme_selections():
        yield selection_measure(tree, sel)


def _leaf_expectation(tree, cert):
    d = len(cert.Z[()])
    total = [F(0)] * d
    for leaf in tree.leaves():
        p = cert.Q.path_probability(leaf)
        if p:
            for j in range(d):
                total[j] += p * cert.Z[leaf][j]
    return tuple(total)


def _scps_cases(mode, seeds):
    for seed in seeds:
        inst = gen_instance(seed, {"mode": mode})
        tree = inst.tree
        cm = inst.cone_market()
        ok = check_efficient_friction(tree, cm.cones).holds and check_nas(tree, cm).holds
        yield seed, inst, tree, cm, ok


def test_bidask_certificates_sit_strictly_inside_quotes():
    """Ratio oracle: for two assets the dual cone is ``bid <= z2/z1 <= ask``."""
    built = 0
    for seed, inst, tree, cm, ok in _scps_cases("bidask2d", range(1, 201)):
        mod = backward_modify_cones(tree, cm)
        P = next(_extreme(tree))
        res = construct_scps(tree, cm, P, mod)
        assert res.ok == ok, seed
        if not res.ok:
            continue
        built += 1
        cert = res.certificate
        for v in tree.nodes():
            if cert.Q.charges(v):
                z1, z2 = cert.Z[v]
                assert z1 > 0 and inst.market.bid(v) < z2 / z1 < inst.market.ask(v)
    assert built > 10


def test_generated_cone_certificates():
    built = 0
    for seed, inst, tree, cm, ok in _scps_cases("cones", range(1, 41)):
        mod = backward_modify_cones(tree, cm)
        for P in _extreme(tree):
            res = construct_scps(tree, cm, P, mod)
            assert res.ok == ok, seed
            if not res.ok:
                assert res.failure.startswith("no SCPS: ")
                break
            built += 1
            cert = res.certificate
            assert verify_scps(tree, cm, cert, P).ok
            assert _leaf_expectation(tree, cert) == cert.Z[()]
            for v in tree.internal_nodes():
                if not cert.Q.charges(v):
                    continue
                for i in range(cm.dim):
                    mu = mu_kernel(cert, tree, v, i)
                    assert mu is not None and sum(mu) == 1 and min(mu) >= 0
                    assert [x > 0 for x in mu] == [x > 0 for x in cert.Q.kernels[v]]
    assert built > 10


def test_orthant_market_always_has_scps():
    for seed in range(1, 21):
        inst = gen_instance(seed, {"mode": "cones"})
        tree = inst.tree
        d = inst.market.dim
        cm = ConeMarket(d, {v: PolyCone.orthant(d) for v in tree.nodes()})
        for P in _extreme(tree):
            res = construct_scps(tree, cm, P)
            assert res.ok and verify_scps(tree, cm, res.certificate, P).ok
