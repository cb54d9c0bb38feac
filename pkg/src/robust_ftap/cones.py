"""Exact polyhedral convex cones.

A :class:`PolyCone` keeps both descriptions in canonical form:

* V-rep: a lineality basis (reduced row echelon form) plus the extreme rays of
  the cone intersected with the orthogonal complement of its lineality space;
* H-rep: the same data for the dual cone -- equality normals span the dual's
  lineality space and facet normals are the dual's extreme rays.

Rays are stored as primitive integer vectors (coprime entries, direction
preserved), so two cones are equal iff their canonical data are equal.
Conversions use the double description method with a combinatorial
adjacency test; intended for small dimensions (``d <= 4``).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Optional, Sequence

from .lp import Constraint, LpProblem, OPTIMAL, solve

Vec = tuple


class ConeError(ValueError):
    pass


def dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), Fraction(0))


def _vec(v) -> Vec:
    return tuple(Fraction(x) for x in v)


def primitive(v) -> Vec:
    """Positive rescaling of ``v`` to a coprime integer vector."""
    v = _vec(v)
    den = lcm(*(x.denominator for x in v)) if v else 1
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g == 0:
        return tuple(Fraction(0) for _ in v)
    return tuple(Fraction(x // g) for x in ints)


def rref(vectors: Iterable, d: int) -> tuple:
    """Reduced row echelon basis of the span of ``vectors``."""
    rows = [list(_vec(v)) for v in vectors]
    basis = []
    col = 0
    r = 0
    while col < d and r < len(rows):
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            col += 1
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][col]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
        col += 1
    basis = [tuple(row) for row in rows[:r]]
    return tuple(basis)


def rank(vectors: Iterable, d: int) -> int:
    return len(rref(vectors, d))


def _project_out(v, basis):
    """Orthogonal projection of ``v`` onto the complement of span(basis)."""
    if not basis:
        return _vec(v)
    k = len(basis)
    # Solve G c = B v with G the Gram matrix.
    aug = [[dot(basis[i], basis[j]) for j in range(k)] + [dot(basis[i], v)] for i in range(k)]
    for c in range(k):
        piv = next(i for i in range(c, k) if aug[i][c])
        aug[c], aug[piv] = aug[piv], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for i in range(k):
            if i != c and aug[i][c]:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    coef = [aug[i][k] for i in range(k)]
    return tuple(
        x - sum((c * b[j] for c, b in zip(coef, basis)), Fraction(0)) for j, x in enumerate(v)
    )


def double_description(constraints: Sequence, d: int) -> tuple:
    """Generators of ``{x : <a, x> >= 0 for all a in constraints}``.

    Returns ``(lineality_basis, rays)`` in canonical form.
    """
    cons = [_vec(a) for a in constraints]
    for a in cons:
        if len(a) != d:
            raise ConeError(f"constraint of length {len(a)} in dimension {d}")
    L = [tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)]
    R: list = []
    done: list = []
    for a in cons:
        vals = [dot(a, l) for l in L]
        k = next((i for i, v in enumerate(vals) if v), None)
        if k is not None:
            l0 = L[k]
            a0 = vals[k]
            if a0 < 0:
                l0 = tuple(-x for x in l0)
                a0 = -a0
            newL = []
            for i, l in enumerate(L):
                if i != k:
                    c = vals[i] / a0
                    newL.append(tuple(x - c * y for x, y in zip(l, l0)) if c else l)
            newR = []
            for r in R:
                c = dot(a, r) / a0
                newR.append(tuple(x - c * y for x, y in zip(r, l0)) if c else r)
            newR.append(l0)
            L, R = newL, newR
        else:
            ar = [dot(a, r) for r in R]
            pos = [i for i, v in enumerate(ar) if v > 0]
            neg = [i for i, v in enumerate(ar) if v < 0]
            keep = [R[i] for i, v in enumerate(ar) if v >= 0]
            if neg:
                zsets = [frozenset(j for j, b in enumerate(done) if not dot(b, r)) for r in R]
                for i in pos:
                    for j in neg:
                        common = zsets[i] & zsets[j]
                        if any(
                            common <= zsets[k2] for k2 in range(len(R)) if k2 != i and k2 != j
                        ):
                            continue
                        p, n = R[i], R[j]
                        keep.append(tuple(ar[i] * y - ar[j] * x for x, y in zip(p, n)))
            R = _dedupe(keep)
        done.append(a)
    lin = rref(L, d)
    rays = []
    for r in R:
        r = primitive(_project_out(r, lin))
        if any(r):
            rays.append(r)
    rays = _dedupe(rays)
    # Keep only extreme rays of the pointed part.
    eq = list(lin)
    extreme = []
    for r in rays:
        tight = [a for a in cons if not dot(a, r)]
        if rank(tight + eq, d) == d - 1:
            extreme.append(r)
    return lin, tuple(sorted(extreme))


def _dedupe(vectors):
    seen = {}
    for v in vectors:
        key = primitive(v)
        if any(key) and key not in seen:
            seen[key] = v
    return list(seen.values())


class PolyCone:
    """Closed polyhedral convex cone in ``R^dim`` with both descriptions kept canonical."""

    __slots__ = ("dim", "lineality", "rays", "equalities", "facets")

    def __init__(self, dim, lineality, rays, equalities, facets):
        self.dim = dim
        self.lineality = lineality
        self.rays = rays
        self.equalities = equalities
        self.facets = facets

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_generators(cls, dim: int, generators: Iterable) -> "PolyCone":
        gens = [_vec(g) for g in generators]
        for g in gens:
            if len(g) != dim:
                raise ConeError(f"generator of length {len(g)} in dimension {dim}")
        eqs, facets = double_description(gens, dim)
        lin, rays = double_description(_span_list(eqs, facets), dim)
        return cls(dim, lin, rays, eqs, facets)

    @classmethod
    def from_halfspaces(cls, dim: int, normals: Iterable) -> "PolyCone":
        lin, rays = double_description(list(normals), dim)
        eqs, facets = double_description(_span_list(lin, rays), dim)
        return cls(dim, lin, rays, eqs, facets)

    @classmethod
    def orthant(cls, dim: int) -> "PolyCone":
        return cls.from_generators(dim, _unit_vectors(dim))

    @classmethod
    def whole(cls, dim: int) -> "PolyCone":
        return cls.from_halfspaces(dim, [])

    @classmethod
    def zero(cls, dim: int) -> "PolyCone":
        return cls.from_generators(dim, [])

    # -- views -----------------------------------------------------------
    @property
    def generators(self) -> tuple:
        return tuple(_span_list(self.lineality, self.rays))

    @property
    def halfspaces(self) -> tuple:
        return tuple(_span_list(self.equalities, self.facets))

    @property
    def is_full_dimensional(self) -> bool:
        return not self.equalities

    @property
    def is_pointed(self) -> bool:
        return not self.lineality

    def key(self):
        return (self.dim, self.lineality, self.rays)

    def __eq__(self, other):
        return isinstance(other, PolyCone) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        def fmt(vs):
            return "[" + ", ".join("(" + ", ".join(str(x) for x in v) + ")" for v in vs) + "]"

        return f"PolyCone(dim={self.dim}, lineality={fmt(self.lineality)}, rays={fmt(self.rays)})"

    # -- membership ---------------------------------------------------------
    def contains(self, x) -> bool:
        x = _vec(x)
        return all(dot(a, x) >= 0 for a in self.facets) and all(
            not dot(e, x) for e in self.equalities
        )

    def contains_interior(self, x) -> bool:
        """Strict interior membership (false whenever the cone is not full-dimensional)."""
        x = _vec(x)
        return self.is_full_dimensional and all(dot(a, x) > 0 for a in self.facets)

    def contains_relative_interior(self, x) -> bool:
        x = _vec(x)
        return all(not dot(e, x) for e in self.equalities) and all(
            dot(a, x) > 0 for a in self.facets
        )


def _unit_vectors(d):
    return [tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)]


def _span_list(lin, rays):
    return list(rays) + list(lin) + [tuple(-x for x in v) for v in lin]


def _check_dims(K1: PolyCone, K2: PolyCone):
    if K1.dim != K2.dim:
        raise ConeError(f"dimension mismatch: {K1.dim} != {K2.dim}")


def dualize(K: PolyCone) -> PolyCone:
    return PolyCone(K.dim, K.equalities, K.facets, K.lineality, K.rays)


def cone_sum(*cones: PolyCone) -> PolyCone:
    if not cones:
        raise ConeError("sum of no cones")
    for K in cones[1:]:
        _check_dims(cones[0], K)
    return PolyCone.from_generators(cones[0].dim, [g for K in cones for g in K.generators])


def intersect(*cones: PolyCone) -> PolyCone:
    if not cones:
        raise ConeError("intersection of no cones")
    for K in cones[1:]:
        _check_dims(cones[0], K)
    return PolyCone.from_halfspaces(cones[0].dim, [a for K in cones for a in K.halfspaces])


def lineality(K: PolyCone) -> tuple:
    return K.lineality


def subset_witness(K1: PolyCone, K2: PolyCone) -> Optional[tuple]:
    """``None`` if ``K1 <= K2``, else ``(generator of K1, violated normal of K2)``."""
    _check_dims(K1, K2)
    for g in K1.generators:
        for a in K2.halfspaces:
            if dot(a, g) < 0:
                return g, a
    return None


def is_subset(K1: PolyCone, K2: PolyCone) -> bool:
    return subset_witness(K1, K2) is None


def normalize1(a) -> Vec:
    s = sum((abs(x) for x in a), Fraction(0))
    return tuple(x / s for x in a) if s else tuple(a)


def interior_point(K: PolyCone) -> tuple:
    """``(point, slack, full_dim)`` from the slack-maximisation LP.

    Maximise ``t`` subject to ``<a, y> >= t`` for each 1-norm normalised facet
    normal, ``<e, y> = 0`` for each equality normal, ``|y|_inf <= 1`` and
    ``t <= 1``.  The point is interior when ``full_dim`` holds and relatively
    interior otherwise (whenever ``slack > 0``).
    """
    d = K.dim
    rows = []
    for a in K.facets:
        a = normalize1(a)
        rows.append(Constraint(a + (Fraction(-1),), ">=", 0))
    for e in K.equalities:
        rows.append(Constraint(tuple(e) + (Fraction(0),), "==", 0))
    obj = (Fraction(0),) * d + (Fraction(1),)
    bounds = ((-1, 1),) * d + ((None, 1),)
    out = solve(LpProblem(obj, tuple(rows), bounds))
    assert out.status == OPTIMAL
    point = out.x[:d]
    slack = out.x[d]
    return point, slack, K.is_full_dimensional and slack > 0
