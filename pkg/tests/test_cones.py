import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from robust_ftap.cones import (
    ConeError,
    PolyCone,
    cone_sum,
    dot,
    dualize,
    interior_point,
    intersect,
    is_subset,
    lineality,
    subset_witness,
)
from robust_ftap.lp import OPTIMAL, Constraint, LpProblem, solve

gens = PolyCone.from_generators
halfs = PolyCone.from_halfspaces
R2 = PolyCone.orthant(2)


def test_orthant_self_dual():
    assert dualize(R2) == R2
    assert dualize(PolyCone.orthant(3)) == PolyCone.orthant(3)


def test_dual_of_two_halfspaces():
    K1 = halfs(2, [(1, 1), (1, 2)])
    assert dualize(K1) == gens(2, [(1, 1), (1, 2)])


def test_dual_of_halfspace_is_ray():
    assert dualize(halfs(2, [(1, 1)])) == gens(2, [(1, 1)])


def test_sum_examples():
    assert cone_sum(gens(2, [(1, 0)]), gens(2, [(0, 1)])) == R2
    K = gens(2, [(1, 2), (3, -1)])
    assert cone_sum(K, PolyCone.zero(2)) == K
    assert cone_sum(gens(2, [(1, 2)]), gens(2, [(1, 4)])) == gens(2, [(1, 2), (1, 4)])


def test_intersect_examples():
    K = gens(2, [(1, 2), (3, -1)])
    assert intersect(K, PolyCone.whole(2)) == K
    assert intersect(gens(2, [(1, 1), (1, 3)]), gens(2, [(1, 2), (1, 4)])) == gens(
        2, [(1, 2), (1, 3)]
    )
    assert intersect(gens(2, [(1, 1)]), gens(2, [(1, 1), (1, 2)])) == gens(2, [(1, 1)])


def test_lineality_examples():
    assert lineality(R2) == ()
    assert lineality(halfs(2, [(1, 1)])) == ((1, -1),)
    assert lineality(halfs(2, [(1, 1), (1, 3)])) == ()


def test_interior_point_orthant_pinned():
    assert interior_point(R2) == ((1, 1), 1, True)


def test_interior_point_ray():
    point, slack, full = interior_point(gens(2, [(1, 1)]))
    assert not full and slack > 0
    assert point == (1, 1)


def test_interior_point_full_cone():
    point, slack, full = interior_point(gens(2, [(1, 2), (1, 3)]))
    assert full and slack > 0
    assert gens(2, [(1, 2), (1, 3)]).contains_interior(point)
    assert 2 < point[1] / point[0] < 3


def test_is_subset_examples():
    K0 = halfs(2, [(1, 1)])
    K1 = halfs(2, [(1, 1), (1, 2)])
    assert is_subset(K1, K1)
    assert is_subset(K1, K0)
    L0 = halfs(2, [(1, 1), (1, 3)])
    L1 = halfs(2, [(1, 2), (1, 4)])
    assert not is_subset(L1, L0)
    g, a = subset_witness(L1, L0)
    assert g == (-2, 1) and a == (1, 1)


def test_dimension_mismatch():
    with pytest.raises(ConeError):
        cone_sum(R2, PolyCone.orthant(3))
    with pytest.raises(ConeError):
        intersect(R2, PolyCone.orthant(3))
    with pytest.raises(ConeError):
        is_subset(R2, PolyCone.orthant(3))


def test_canonical_form_ignores_scaling_order_and_redundancy():
    a = gens(3, [(1, 0, 0), (0, 2, 0), (0, 0, 1)])
    b = gens(3, [(0, 0, F(1, 3)), (1, 1, 1), (5, 0, 0), (0, 1, 0), (2, 3, 0)])
    assert a == b and hash(a) == hash(b)


def test_redundant_generators_dropped():
    K = gens(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, -1), (-1, 0, 1)])
    assert K.rays == ((-1, 0, 1), (1, 0, 0), (1, 1, -1))


def test_whole_and_zero():
    assert dualize(PolyCone.whole(3)) == PolyCone.zero(3)
    assert PolyCone.whole(2).contains((-5, 7))
    assert not PolyCone.zero(2).contains((0, 1))


# -- randomized contract ---------------------------------------------------------------


def _random_cone(rng, d):
    k = rng.randint(0, 4)
    vs = [tuple(rng.randint(-3, 3) for _ in range(d)) for _ in range(k)]
    if rng.random() < 0.5:
        return gens(d, vs)
    return halfs(d, vs)


def _in_conic_hull(x, generators, d):
    """LP oracle: is ``x`` a non-negative combination of ``generators``?"""
    if not generators:
        return not any(x)
    rows = [Constraint([g[j] for g in generators], "==", x[j]) for j in range(d)]
    return solve(LpProblem((0,) * len(generators), tuple(rows))).status == OPTIMAL


def _pairs(n=200, seed=2024):
    rng = random.Random(seed)
    for _ in range(n):
        d = rng.randint(1, 3)
        yield rng, d, _random_cone(rng, d), _random_cone(rng, d)


def test_double_dual():
    for _, _, K1, K2 in _pairs():
        assert dualize(dualize(K1)) == K1
        assert dualize(dualize(K2)) == K2


def test_sum_and_intersection_duality():
    for _, _, K1, K2 in _pairs():
        assert dualize(cone_sum(K1, K2)) == intersect(dualize(K1), dualize(K2))
        assert dualize(intersect(K1, K2)) == cone_sum(dualize(K1), dualize(K2))


def test_antitone_inclusion():
    hits = 0
    for rng, d, K1, K2 in _pairs():
        # Mix in a guaranteed inclusion so both outcomes are exercised.
        for A, B in ((K1, K2), (K1, cone_sum(K1, K2)), (intersect(K1, K2), K2)):
            sub = is_subset(A, B)
            hits += sub
            assert sub == is_subset(dualize(B), dualize(A))
    assert hits > 200


def test_orthant_containment_transfers():
    for _, d, K1, K2 in _pairs():
        K = cone_sum(K1, PolyCone.orthant(d))
        assert is_subset(PolyCone.orthant(d), K)
        assert is_subset(dualize(K), PolyCone.orthant(d))


def test_full_dimensional_dual_iff_pointed():
    for _, _, K1, K2 in _pairs():
        for K in (K1, K2):
            _, _, full = interior_point(dualize(K))
            assert full == (lineality(K) == ())


def test_representations_agree_with_lp_membership():
    rng = random.Random(99)
    for _, d, K1, _ in _pairs(120):
        generators = list(K1.generators)
        for g in generators:
            assert all(dot(a, g) >= 0 for a in K1.halfspaces)
        for _ in range(6):
            x = tuple(F(rng.randint(-4, 4)) for _ in range(d))
            assert K1.contains(x) == _in_conic_hull(x, generators, d)


def test_rays_are_irredundant():
    for _, d, K1, _ in _pairs(120):
        for i, r in enumerate(K1.rays):
            others = [g for j, g in enumerate(K1.rays) if j != i]
            others += list(K1.lineality) + [tuple(-x for x in v) for v in K1.lineality]
            assert not _in_conic_hull(r, others, d)


def test_interior_points_are_relative_interior():
    for _, _, K1, _ in _pairs(120):
        point, slack, full = interior_point(K1)
        assert K1.contains(point)
        if K1.facets:
            assert slack > 0 and K1.contains_relative_interior(point)
        assert full == (K1.is_full_dimensional and slack > 0)
        if full:
            assert K1.contains_interior(point)


vec3 = st.tuples(*(st.integers(-3, 3),) * 3)


@settings(max_examples=60, deadline=None)
@given(st.lists(vec3, max_size=4), st.lists(vec3, max_size=4))
def test_hypothesis_sum_commutes_and_contains_both(a, b):
    K1, K2 = gens(3, a), gens(3, b)
    S = cone_sum(K1, K2)
    assert S == cone_sum(K2, K1)
    assert is_subset(K1, S) and is_subset(K2, S)
    I = intersect(K1, K2)
    assert is_subset(I, K1) and is_subset(I, K2)
