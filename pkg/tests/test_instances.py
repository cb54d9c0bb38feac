import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import INSTANCES, instance
from robust_ftap.cone_market import backward_modify_cones
from robust_ftap.cones import PolyCone, dualize, is_subset
from robust_ftap.cps import construct_cps, verify_cps, verify_iiprime
from robust_ftap.instances import (
    ParseError,
    cps_obj,
    dumps,
    emit_instance,
    gen_instance,
    parse_certificate,
    parse_instance,
    parse_q,
    scps_obj,
)
from robust_ftap.scps import ScpsCertificate, construct_scps, verify_scps
from robust_ftap.tree import selection_measure


def _intro_obj():
    return json.loads((INSTANCES / "intro.json").read_text())


def test_intro_parses():
    inst = instance("intro")
    assert inst.mode == "bidask2d" and inst.tree.depth == 2
    assert inst.market.quotes[(0, 0)] == (F(7, 2), 5)
    assert inst.market.quotes[()] == (1, 3)


@pytest.mark.parametrize("path", sorted(INSTANCES.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_files_round_trip_byte_identically(path):
    text = path.read_text()
    assert emit_instance(parse_instance(text)) == text


def test_bad_kernel_sum_reports_path():
    o = _intro_obj()
    o["tree"]["nodes"]["/"]["kernels"] = [["1/2", "2/3"]]
    o["tree"]["nodes"]["/"]["children"] = 2
    with pytest.raises(ParseError) as e:
        parse_instance(json.dumps(o))
    assert str(e.value) == "$.tree.nodes./.kernels[0]: kernel sums to 7/6"


@pytest.mark.parametrize("bad", ["0.5", "1e3", "1/0", "+1", " 1", "1/-2", "", "1.0/2"])
def test_rational_strings(bad):
    with pytest.raises(ParseError):
        parse_q(bad, "$.x")


def test_rational_accepts_canonical_and_noncanonical():
    assert parse_q("-3/6", "$") == F(-1, 2)
    assert parse_q("7", "$") == 7


def test_json_numbers_rejected():
    text = (INSTANCES / "intro.json").read_text().replace('"7/2"', "3.5")
    with pytest.raises(ParseError):
        parse_instance(text)
    o = _intro_obj()
    o["market"]["/"]["bid"] = 1
    with pytest.raises(ParseError, match=r"\$\.market\./\.bid"):
        parse_instance(json.dumps(o))


def test_unknown_and_missing_fields():
    o = _intro_obj()
    o["extra"] = 1
    with pytest.raises(ParseError, match=r"\$\.extra: unknown field"):
        parse_instance(json.dumps(o))
    o = _intro_obj()
    del o["market"]["/0"]
    with pytest.raises(ParseError):
        parse_instance(json.dumps(o))


def test_inverted_quote_rejected():
    o = _intro_obj()
    o["market"]["/0"] = {"bid": "5", "ask": "4"}
    with pytest.raises(ParseError, match=r"\$\.market"):
        parse_instance(json.dumps(o))


def test_cone_missing_orthant_rejected():
    inst = gen_instance(3, {"mode": "cones"})
    o = json.loads(emit_instance(inst))
    o["market"]["cones"]["/"] = [["1", "-1"] + ["0"] * (inst.market.dim - 2)]
    with pytest.raises(ParseError, match=r"\$\.market\.cones\./: cone does not contain"):
        parse_instance(json.dumps(o))


def test_canonical_output_shape():
    text = emit_instance(instance("two_priors"))
    assert text.endswith("}\n")
    o = json.loads(text)
    assert list(o) == sorted(o)
    assert dumps(o) == text


# -- generator ----------------------------------------------------------------------


def test_generator_is_deterministic():
    for mode in ("bidask2d", "cones"):
        for seed in (1, 2, 99):
            a = emit_instance(gen_instance(seed, {"mode": mode}))
            assert a == emit_instance(gen_instance(seed, {"mode": mode}))
        assert emit_instance(gen_instance(1, {"mode": mode})) != emit_instance(
            gen_instance(2, {"mode": mode})
        )


def test_generator_parameter_limits():
    with pytest.raises(ValueError):
        gen_instance(1, {"depth": 9})
    with pytest.raises(ValueError):
        gen_instance(1, {"mode": "cones", "d": 1})
    with pytest.raises(ValueError):
        gen_instance(1, {"mode": "nope"})


def test_generated_bidask_quotes_are_ordered():
    for seed in range(1, 101):
        inst = gen_instance(seed, {"mode": "bidask2d"})
        assert set(inst.market.quotes) == set(inst.tree.nodes())
        for bid, ask in inst.market.quotes.values():
            assert 0 < bid <= ask


def test_generated_cones_contain_orthant_and_dual_is_in_orthant():
    for seed in range(1, 101):
        inst = gen_instance(seed, {"mode": "cones"})
        d = inst.market.dim
        for K in inst.market.cones.values():
            assert is_subset(PolyCone.orthant(d), K)
            assert is_subset(dualize(K), PolyCone.orthant(d))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["bidask2d", "cones"]))
def test_generated_instances_round_trip(seed, mode):
    inst = gen_instance(seed, {"mode": mode})
    text = emit_instance(inst)
    again = parse_instance(text)
    assert emit_instance(again) == text
    assert again.tree == inst.tree


# -- certificates -----------------------------------------------------------------


def _reparse(obj, inst):
    return parse_certificate(dumps({"certificate": obj}), inst)


def test_cps_certificate_round_trip_preserves_verdicts():
    checked = 0
    for seed in range(1, 41):
        inst = gen_instance(seed, {"mode": "bidask2d"})
        tree, m = inst.tree, inst.market
        P = selection_measure(tree, next(tree.extreme_selections()))
        res = construct_cps(tree, m, P)
        if not res.ok:
            continue
        checked += 1
        cert = res.certificate
        back = _reparse(cps_obj(cert), inst)
        assert dumps(cps_obj(back)) == dumps(cps_obj(cert))
        assert verify_cps(tree, m, back, P).ok == verify_cps(tree, m, cert, P).ok
        assert verify_iiprime(tree, back.modified, back).ok
        tampered = {**cps_obj(cert), "prices": {**cps_obj(cert)["prices"], "/": "1000"}}
        assert not verify_cps(tree, m, _reparse(tampered, inst), P).ok
    assert checked > 5


def test_scps_certificate_round_trip_preserves_verdicts():
    checked = 0
    for seed in range(1, 31):
        inst = gen_instance(seed, {"mode": "cones"})
        tree, cm = inst.tree, inst.market
        P = selection_measure(tree, next(tree.extreme_selections()))
        res = construct_scps(tree, cm, P, backward_modify_cones(tree, cm))
        if not res.ok:
            continue
        checked += 1
        cert = res.certificate
        back = _reparse(scps_obj(cert), inst)
        assert isinstance(back, ScpsCertificate)
        assert dumps(scps_obj(back)) == dumps(scps_obj(cert))
        assert verify_scps(tree, cm, back, P).ok and verify_scps(tree, cm, cert, P).ok
        o = scps_obj(cert)
        o["Z"]["/"] = ["0"] * cm.dim
        assert not verify_scps(tree, cm, _reparse(o, inst), P).ok
    assert checked > 5


def test_certificate_parse_errors_carry_paths():
    inst = instance("solvent_tomorrow")
    with pytest.raises(ParseError, match=r"\$: no certificate"):
        parse_certificate("{}", inst)
    with pytest.raises(ParseError, match=r"\$\.kind: unknown certificate kind"):
        parse_certificate('{"kind": "x"}', inst)
    with pytest.raises(ParseError, match=r"\$\.certificate\.Z\./\[0\]"):
        parse_certificate(
            dumps({"certificate": {"kind": "scps", "Q": {"/": ["1"]}, "Z": {"/": [1, "1"]},
                                   "slack": {}, "dominating": None}}),
            inst,
        )
