"""Exact rational linear programming.

A two-phase primal simplex over :class:`fractions.Fraction` with Bland's
anti-cycling rule.  Every outcome carries a witness that can be checked by
exact substitution:

* ``optimal``    -- a feasible point and its objective value,
* ``unbounded``  -- a feasible point plus an improving recession ray,
* ``infeasible`` -- a Farkas vector over the constraint rows.

Variables default to ``x >= 0``; pass explicit ``bounds`` for free or boxed
variables (``None`` means no bound on that side).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

__all__ = [
    "Constraint",
    "LpProblem",
    "LpOutcome",
    "LpError",
    "solve",
    "verify_outcome",
    "OPTIMAL",
    "UNBOUNDED",
    "INFEASIBLE",
]

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

_RELATIONS = ("<=", "==", ">=")


class LpError(ValueError):
    """Malformed linear program."""


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple
    rel: str
    rhs: Fraction

    def __post_init__(self):
        if self.rel not in _RELATIONS:
            raise LpError(f"unknown relation {self.rel!r}")
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", Fraction(self.rhs))


Bound = tuple  # (lower or None, upper or None)


@dataclass(frozen=True)
class LpProblem:
    objective: tuple
    constraints: tuple = ()
    bounds: Optional[tuple] = None
    sense: str = "max"

    def __post_init__(self):
        n = len(self.objective)
        object.__setattr__(self, "objective", tuple(Fraction(c) for c in self.objective))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.sense not in ("max", "min"):
            raise LpError(f"unknown sense {self.sense!r}")
        for k, row in enumerate(self.constraints):
            if len(row.coeffs) != n:
                raise LpError(f"constraint {k} has {len(row.coeffs)} coefficients, expected {n}")
        if self.bounds is None:
            bounds = tuple((Fraction(0), None) for _ in range(n))
        else:
            if len(self.bounds) != n:
                raise LpError(f"{len(self.bounds)} bounds for {n} variables")
            bounds = tuple(
                (None if lo is None else Fraction(lo), None if hi is None else Fraction(hi))
                for lo, hi in self.bounds
            )
        object.__setattr__(self, "bounds", bounds)

    @property
    def n(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class LpOutcome:
    status: str
    x: Optional[tuple] = None
    value: Optional[Fraction] = None
    ray: Optional[tuple] = None
    farkas: Optional[tuple] = None
    pivots: int = field(default=0, compare=False)


def _dot(a, b):
    return sum((x * y for x, y in zip(a, b) if x and y), Fraction(0))


class _Tableau:
    """Dense tableau ``rows[r] = [coefficients..., rhs]`` with an explicit basis."""

    def __init__(self, rows, basis, ncols):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols
        self.pivots = 0

    def pivot(self, r, c, obj):
        prow = self.rows[r]
        piv = prow[c]
        if piv != 1:
            inv = 1 / piv
            prow = [v * inv if v else v for v in prow]
            self.rows[r] = prow
        nz = [j for j, v in enumerate(prow) if v]
        for k, row in enumerate(self.rows):
            if k == r:
                continue
            f = row[c]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
        f = obj[c]
        if f:
            for j in nz:
                obj[j] -= f * prow[j]
        self.basis[r] = c
        self.pivots += 1

    def run(self, obj, allowed):
        """Maximise; ``obj`` holds reduced costs (``c_j - z_j``) and ``-value`` at the end.

        Returns ``None`` at optimality or the entering column of an unbounded ray.
        """
        while True:
            enter = next((j for j in allowed if obj[j] > 0), None)
            if enter is None:
                return None
            best = None
            leave = None
            for r, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if (
                        best is None
                        or ratio < best
                        or (ratio == best and self.basis[r] < self.basis[leave])
                    ):
                        best, leave = ratio, r
            if leave is None:
                return enter
            self.pivot(leave, enter, obj)


def solve(p: LpProblem) -> LpOutcome:
    """Solve ``p`` exactly.  Deterministic for a fixed input."""
    n = p.n
    sign = 1 if p.sense == "max" else -1

    # Column map: structural column -> (original variable, +1/-1).
    cols: list = []
    shift = [Fraction(0)] * n
    extra_rows = []  # (column, upper) for boxed variables
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is not None:
            shift[j] = lo
            cols.append((j, 1))
            if hi is not None:
                extra_rows.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            shift[j] = hi
            cols.append((j, -1))
        else:
            cols.append((j, 1))
            cols.append((j, -1))
    nstruct = len(cols)

    # Standard rows over structural columns: (coeffs, rel, rhs, origin)
    std = []
    for i, con in enumerate(p.constraints):
        coeffs = [con.coeffs[j] * s for j, s in cols]
        rhs = con.rhs - _dot(con.coeffs, shift)
        std.append((coeffs, con.rel, rhs, ("row", i)))
    for col, width in extra_rows:
        coeffs = [Fraction(0)] * nstruct
        coeffs[col] = Fraction(1)
        std.append((coeffs, "<=", width, ("bound", col)))

    m = len(std)
    nslack = sum(1 for _, rel, _, _ in std if rel != "==")
    slack_col = {}
    k = nstruct
    for r, (_, rel, _, _) in enumerate(std):
        if rel != "==":
            slack_col[r] = k
            k += 1
    art_start = nstruct + nslack
    ncols = art_start + m

    rows = []
    basis = []
    flips = []
    init_col = []
    for r, (coeffs, rel, rhs, _) in enumerate(std):
        row = [Fraction(0)] * (ncols + 1)
        row[:nstruct] = coeffs
        if rel == "<=":
            row[slack_col[r]] = Fraction(1)
        elif rel == ">=":
            row[slack_col[r]] = Fraction(-1)
        row[-1] = rhs
        flip = 1
        if rhs < 0:
            flip = -1
            row = [-v for v in row]
        flips.append(flip)
        if r in slack_col and row[slack_col[r]] == 1:
            basis.append(slack_col[r])
            init_col.append(slack_col[r])
        else:
            row[art_start + r] = Fraction(1)
            basis.append(art_start + r)
            init_col.append(art_start + r)
        rows.append(row)

    tab = _Tableau(rows, basis, ncols)
    arts = [r for r in range(m) if basis[r] >= art_start]

    # Phase 1: maximise -sum(artificials).
    if arts:
        obj = [Fraction(0)] * (ncols + 1)
        for r in arts:
            obj[art_start + r] = Fraction(-1)
        for r in arts:
            for j, v in enumerate(rows[r]):
                if v:
                    obj[j] += v
        # obj[-1] now holds the (positive) sum of artificial rhs, i.e. -value.
        tab.run(obj, range(ncols))
        if obj[-1] > 0:
            # pi_r = c_init - d_init; farkas multiplier mu = -pi.
            farkas = [Fraction(0)] * len(p.constraints)
            for r in range(m):
                c0 = init_col[r]
                cost = Fraction(-1) if c0 >= art_start else Fraction(0)
                mu = -(cost - obj[c0])
                origin = std[r][3]
                if origin[0] == "row":
                    farkas[origin[1]] = flips[r] * mu
            return LpOutcome(INFEASIBLE, farkas=tuple(farkas), pivots=tab.pivots)
        # Drive zero-level artificials out of the basis; drop redundant rows.
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] >= art_start:
                row = tab.rows[r]
                c = next((j for j in range(art_start) if row[j]), None)
                if c is None:
                    del tab.rows[r]
                    del tab.basis[r]
                    continue
                tab.pivot(r, c, [Fraction(0)] * (ncols + 1))
            r += 1

    # Phase 2.
    obj = [Fraction(0)] * (ncols + 1)
    for c, (j, s) in enumerate(cols):
        obj[c] = sign * p.objective[j] * s
    for r, b in enumerate(tab.basis):
        cb = obj[b]
        if cb:
            for j, v in enumerate(tab.rows[r]):
                if v:
                    obj[j] -= cb * v
    enter = tab.run(obj, range(art_start))

    z = [Fraction(0)] * ncols
    for r, b in enumerate(tab.basis):
        z[b] = tab.rows[r][-1]
    x = list(shift)
    for c, (j, s) in enumerate(cols):
        if z[c]:
            x[j] += s * z[c]
    x = tuple(x)
    value = _dot(p.objective, x)

    if enter is not None:
        dz = [Fraction(0)] * ncols
        dz[enter] = Fraction(1)
        for r, b in enumerate(tab.basis):
            dz[b] = -tab.rows[r][enter]
        ray = [Fraction(0)] * n
        for c, (j, s) in enumerate(cols):
            if dz[c]:
                ray[j] += s * dz[c]
        return LpOutcome(UNBOUNDED, x=x, value=value, ray=tuple(ray), pivots=tab.pivots)
    return LpOutcome(OPTIMAL, x=x, value=value, pivots=tab.pivots)


def _feasible(p: LpProblem, x: Sequence[Fraction]) -> bool:
    for (lo, hi), v in zip(p.bounds, x):
        if lo is not None and v < lo:
            return False
        if hi is not None and v > hi:
            return False
    for con in p.constraints:
        lhs = _dot(con.coeffs, x)
        if con.rel == "<=" and lhs > con.rhs:
            return False
        if con.rel == ">=" and lhs < con.rhs:
            return False
        if con.rel == "==" and lhs != con.rhs:
            return False
    return True


def verify_outcome(p: LpProblem, out: LpOutcome) -> bool:
    """Re-check the witness in ``out`` against ``p`` with exact arithmetic."""
    if out.status == OPTIMAL:
        return _feasible(p, out.x) and _dot(p.objective, out.x) == out.value
    if out.status == UNBOUNDED:
        if not _feasible(p, out.x):
            return False
        r = out.ray
        for (lo, hi), v in zip(p.bounds, r):
            if lo is not None and v < 0:
                return False
            if hi is not None and v > 0:
                return False
        for con in p.constraints:
            lhs = _dot(con.coeffs, r)
            if (con.rel == "<=" and lhs > 0) or (con.rel == ">=" and lhs < 0):
                return False
            if con.rel == "==" and lhs != 0:
                return False
        gain = _dot(p.objective, r)
        return gain > 0 if p.sense == "max" else gain < 0
    if out.status == INFEASIBLE:
        y = out.farkas
        if len(y) != len(p.constraints):
            return False
        for con, yi in zip(p.constraints, y):
            if (con.rel == "<=" and yi > 0) or (con.rel == ">=" and yi < 0):
                return False
        c = [Fraction(0)] * p.n
        for con, yi in zip(p.constraints, y):
            if yi:
                for j, a in enumerate(con.coeffs):
                    c[j] += yi * a
        rhs = sum((yi * con.rhs for con, yi in zip(p.constraints, y)), Fraction(0))
        sup = Fraction(0)
        for cj, (lo, hi) in zip(c, p.bounds):
            if cj > 0:
                if hi is None:
                    return False
                sup += cj * hi
            elif cj < 0:
                if lo is None:
                    return False
                sup += cj * lo
        return sup < rhs
    return False
