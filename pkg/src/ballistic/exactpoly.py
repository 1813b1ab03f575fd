"""Exact window quantities as polynomials in p with rational coefficients.

Conditioning on the k speeds, the resolution of a k-particle window is a
function of the gap vector g = (g_2, ..., g_k) only through strict
comparisons of candidate collision times, and every candidate time is a
rational homogeneous linear form in the gaps (a gap sum divided by the
relative speed 1 or 2).  Each outcome cell is therefore an open rational
polyhedral cone inside the positive orthant, and under i.i.d. unit
exponential gaps its probability is exactly rational:

    P(C) = integral over C of exp(-<1, g>) dg
         = sum over simplicial cones with generator matrix V of
           |det V| / prod_i <1, v_i>.

Summing the speed-vector weights p^(#still) * ((1-p)/2)^(#movers) against
the cell outcomes yields the window hit probability and the expected
surviving-still minus surviving-left count as exact polynomials in p, whose
roots are then isolated by bisection with exact rational sign evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

SYMBOLIC_CAP = 6   # speed vectors grow as 3^k and cells multiply fast
CONE_DIM_CAP = 5   # ray enumeration cost; dim = k - 1

LEFT, STILL, RIGHT = -1, 0, 1


# ---------------------------------------------------------------------------
# Polynomials over Q
# ---------------------------------------------------------------------------

class RationalPoly:
    """Dense univariate polynomial in p with Fraction coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @staticmethod
    def zero() -> "RationalPoly":
        return RationalPoly(())

    @staticmethod
    def constant(c) -> "RationalPoly":
        return RationalPoly((Fraction(c),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        return isinstance(other, RationalPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        if not isinstance(other, RationalPoly):
            other = RationalPoly.constant(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPoly(
            tuple((self.coeffs[i] if i < len(self.coeffs) else 0)
                  + (other.coeffs[i] if i < len(other.coeffs) else 0)
                  for i in range(n)))

    def __neg__(self):
        return RationalPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if not isinstance(other, RationalPoly):
            other = RationalPoly.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RationalPoly):
            if not self.coeffs or not other.coeffs:
                return RationalPoly.zero()
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return RationalPoly(out)
        return RationalPoly(tuple(c * Fraction(other) for c in self.coeffs))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = RationalPoly.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def __call__(self, x):
        acc = Fraction(0) if isinstance(x, (Fraction, int)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def fraction_list(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    def as_string(self, var: str = "p") -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                terms.append(f"{c}")
            elif i == 1:
                terms.append(f"{c}*{var}")
            else:
                terms.append(f"{c}*{var}^{i}")
        return " + ".join(terms).replace("+ -", "- ")

    def latex(self, var: str = "p") -> str:
        if not self.coeffs:
            return "0"

        def frac(c):
            c = abs(c)
            return str(c) if c.denominator == 1 else \
                f"\\frac{{{c.numerator}}}{{{c.denominator}}}"

        parts = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            sign = "-" if c < 0 else ("+" if parts else "")
            mag = frac(c)
            if i == 0:
                body = mag
            else:
                power = var if i == 1 else f"{var}^{{{i}}}"
                body = power if mag == "1" else f"{mag} {power}"
            parts.append(f"{sign} {body}" if sign else body)
        return " ".join(parts)

    def __repr__(self):
        return f"RationalPoly({self.as_string()})"


P_VAR = RationalPoly((Fraction(0), Fraction(1)))          # p
PBAR = RationalPoly((Fraction(1, 2), Fraction(-1, 2)))    # (1 - p)/2


# ---------------------------------------------------------------------------
# Constraint canonicalization and exact feasibility
# ---------------------------------------------------------------------------

def _canon(vec) -> tuple[int, ...]:
    """Primitive integer representative of a rational direction vector."""
    fr = [Fraction(v) for v in vec]
    den = math.lcm(*(f.denominator for f in fr)) if fr else 1
    ints = [int(f * den) for f in fr]
    g = math.gcd(*(abs(i) for i in ints)) if any(ints) else 1
    if g > 1:
        ints = [i // g for i in ints]
    return tuple(ints)


def _fm_feasible(rows: tuple[tuple[int, ...], ...], d: int) -> bool:
    """Fourier-Motzkin: is {v.g > 0 for all v} consistent with g in (0,inf)^d?"""
    work = set(rows)
    for i in range(d):
        unit = tuple(1 if j == i else 0 for j in range(d))
        work.add(unit)
    nvar = d
    while nvar > 0:
        if any(not any(r) for r in work):
            return False
        j = nvar - 1
        pos = [r for r in work if r[j] > 0]
        neg = [r for r in work if r[j] < 0]
        zer = [r[:j] for r in work if r[j] == 0]
        if pos and neg:
            for pr in pos:
                for nr in neg:
                    comb = tuple(-nr[j] * pr[m] + pr[j] * nr[m] for m in range(j))
                    zer.append(comb)
        nxt = set()
        for r in zer:
            if not any(r):
                return False
            nxt.add(_canon(r))
        work = nxt
        nvar = j
    return True


@lru_cache(maxsize=200000)
def _feasible_cached(ineqs: frozenset, d: int) -> bool:
    return _fm_feasible(tuple(ineqs), d)


# ---------------------------------------------------------------------------
# Exact linear algebra helpers over Q
# ---------------------------------------------------------------------------

def _rank(rows: list[tuple], d: int) -> int:
    m = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    for col in range(d):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = m[rank][col]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / inv
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def _nullspace_1d(rows: list[tuple], d: int) -> tuple[int, ...] | None:
    """Primitive spanning vector of the nullspace if it is one-dimensional."""
    m = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    rank = 0
    for col in range(d):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = m[rank][col]
        m[rank] = [a / inv for a in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        pivots.append(col)
        rank += 1
    if rank != d - 1:
        return None
    free = next(c for c in range(d) if c not in pivots)
    v = [Fraction(0)] * d
    v[free] = Fraction(1)
    for r, col in enumerate(pivots):
        v[col] = -m[r][free]
    return _canon(v)


def _det(matrix: list[tuple]) -> Fraction:
    m = [[Fraction(x) for x in row] for row in matrix]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / inv
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return det


# ---------------------------------------------------------------------------
# Cone probability: extreme rays + placing triangulation
# ---------------------------------------------------------------------------

def _extreme_rays(ineqs: tuple[tuple[int, ...], ...], d: int) -> list[tuple[int, ...]]:
    rows = list(ineqs)
    for i in range(d):
        rows.append(tuple(1 if j == i else 0 for j in range(d)))
    rays = set()
    for sub in combinations(range(len(rows)), d - 1):
        v = _nullspace_1d([rows[s] for s in sub], d)
        if v is None:
            continue
        dots = [sum(a * b for a, b in zip(r, v)) for r in rows]
        if all(x >= 0 for x in dots):
            rays.add(v)
        elif all(x <= 0 for x in dots):
            rays.add(_canon([-c for c in v]))
    return sorted(rays)


def _extends_affine_span(pts, basis, i) -> bool:
    if not basis:
        return True
    origin = pts[basis[0]]
    dirs = [tuple(a - b for a, b in zip(pts[bj], origin)) for bj in basis[1:]]
    d = len(origin)
    new = tuple(a - b for a, b in zip(pts[i], origin))
    return _rank(dirs + [new], d) > _rank(dirs, d)


def _pivot_columns(pts, basis) -> list[int]:
    origin = pts[basis[0]]
    dirs = [[a - b for a, b in zip(pts[bj], origin)] for bj in basis[1:]]
    d = len(origin)
    m = [[Fraction(x) for x in r] for r in dirs]
    pivots = []
    rank = 0
    for col in range(d):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = m[rank][col]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / inv
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        pivots.append(col)
        rank += 1
    return pivots


def _orient(pts, facet: tuple[int, ...], apex: int, cols: list[int]) -> int:
    qs = [[pts[j][c] for c in cols] for j in facet] + [[pts[apex][c] for c in cols]]
    base = qs[0]
    mat = [tuple(a - b for a, b in zip(q, base)) for q in qs[1:]]
    det = _det(mat)
    return (det > 0) - (det < 0)


def _placing_triangulation(pts: list[tuple]) -> list[list[int]]:
    """Triangulation of conv(pts) by incremental insertion (beneath-beyond).

    Exact rational arithmetic; degenerate (flat) additions are skipped,
    which only ever omits zero-volume pieces.
    """
    simplices = [[0]]
    basis = [0]
    for i in range(1, len(pts)):
        if _extends_affine_span(pts, basis, i):
            simplices = [s + [i] for s in simplices]
            basis.append(i)
            continue
        cols = _pivot_columns(pts, basis)
        if not cols:
            continue  # duplicate of the single seed point
        counts: dict[tuple, tuple[int, int]] = {}
        seen: dict[tuple, int] = {}
        for s in simplices:
            for drop in range(len(s)):
                f = tuple(s[:drop] + s[drop + 1:])
                seen[f] = seen.get(f, 0) + 1
                counts[f] = (0, s[drop])
        fresh = []
        for f, cnt in seen.items():
            if cnt != 1:
                continue
            opp = counts[f][1]
            o_in = _orient(pts, f, opp, cols)
            o_new = _orient(pts, f, i, cols)
            if o_in != 0 and o_new != 0 and (o_in > 0) != (o_new > 0):
                fresh.append(list(f) + [i])
        simplices += fresh
    return simplices


@dataclass(frozen=True)
class GapEvent:
    """Conjunction of strict inequalities v.g > 0 over gaps g in (0,inf)^dim."""

    comparisons: tuple[tuple[int, ...], ...]
    dim: int


@lru_cache(maxsize=200000)
def _cone_probability(ineqs: frozenset, d: int) -> Fraction:
    rows = tuple(sorted(ineqs))
    if any(not any(r) for r in rows):
        return Fraction(0)
    if d == 0:
        return Fraction(1)
    rays = _extreme_rays(rows, d)
    if len(rays) < d or _rank(rays, d) < d:
        return Fraction(0)
    pts = [tuple(Fraction(c, sum(v)) for c in v) for v in rays]
    total = Fraction(0)
    for s in _placing_triangulation(pts):
        if len(s) == d:
            total += abs(_det([pts[i] for i in s]))
    return total


def gap_event_probability(event: GapEvent) -> Fraction:
    """Exact probability of the event under i.i.d. Exp(1) gaps.

    Coordinates not mentioned by any inequality integrate to 1 and are
    dropped before the cone decomposition, so the effective dimension (which
    is what the dim <= 5 cap protects) is the number of active gaps.
    """
    if any(len(c) != event.dim for c in event.comparisons):
        raise ValueError("inequality arity does not match event dimension")
    if any(not any(c) for c in event.comparisons):
        return Fraction(0)  # a zero row reads 0 > 0: unsatisfiable
    comps = tuple(_canon(c) for c in event.comparisons)
    used = sorted({m for c in comps for m in range(event.dim) if c[m] != 0})
    if len(used) > CONE_DIM_CAP:
        raise ValueError(f"cone dimension {len(used)} exceeds cap {CONE_DIM_CAP}")
    reduced = tuple(tuple(c[m] for m in used) for c in comps)
    return _cone_probability(frozenset(reduced), len(used))


# ---------------------------------------------------------------------------
# Symbolic event-driven resolution over gap forms
# ---------------------------------------------------------------------------

_FATE_LETTER = {LEFT: "L", STILL: "S", RIGHT: "R"}


@dataclass(frozen=True)
class OutcomeCell:
    """One cell of gap space with its (constant) resolution outcome."""

    event: GapEvent
    fates: tuple[str, ...]   # 'A' for annihilated, else survivor letter
    n_value: int             # surviving still minus surviving left
    origin_hit: bool
    probability: Fraction


def _time_form(speeds, i: int, j: int, d: int) -> tuple[Fraction, ...]:
    dv = speeds[i] - speeds[j]
    return tuple(Fraction(1, dv) if i <= m < j else Fraction(0) for m in range(d))


@lru_cache(maxsize=100000)
def symbolic_resolve(speeds: tuple[int, ...]) -> tuple[OutcomeCell, ...]:
    """Case-split resolution of a k-particle window conditioned on speeds.

    Branches on every comparison between candidate collision times of
    adjacent approaching pairs, pruning inconsistent orderings exactly.
    Leaves cover the positive gap orthant up to measure zero.
    """
    k = len(speeds)
    if k > SYMBOLIC_CAP:
        raise ValueError(f"k={k} exceeds symbolic cap {SYMBOLIC_CAP}")
    for s in speeds:
        if s not in (-1, 0, 1):
            raise ValueError("speeds must be in {-1, 0, 1}")
    d = max(k - 1, 0)
    cells: list[OutcomeCell] = []

    def leaf(alive: tuple[int, ...], constraints: frozenset):
        fates = ["A"] * k
        for i in alive:
            fates[i] = _FATE_LETTER[speeds[i]]
        n_val = sum(1 for i in alive if speeds[i] == STILL) \
            - sum(1 for i in alive if speeds[i] == LEFT)
        hit = any(speeds[i] == LEFT for i in alive)
        event = GapEvent(tuple(sorted(constraints)), d)
        prob = gap_event_probability(event)
        cells.append(OutcomeCell(event, tuple(fates), n_val, hit, prob))

    def recurse(alive: tuple[int, ...], constraints: frozenset):
        cands = [(alive[m], alive[m + 1]) for m in range(len(alive) - 1)
                 if speeds[alive[m]] > speeds[alive[m + 1]]]
        if not cands:
            leaf(alive, constraints)
            return
        # tournament scan: the running winner is transitively minimal
        def tourney(widx: int, rest: list, cons: frozenset):
            if not rest:
                i, j = cands[widx]
                nxt = tuple(a for a in alive if a != i and a != j)
                recurse(nxt, cons)
                return
            cidx = rest[0]
            tw = _time_form(speeds, *cands[widx], d)
            tc = _time_form(speeds, *cands[cidx], d)
            w_first = _canon(tuple(c - w for c, w in zip(tc, tw)))
            c_first = tuple(-v for v in w_first)
            for cons_new, nextw in ((cons | {w_first}, widx),
                                    (cons | {c_first}, cidx)):
                if _feasible_cached(frozenset(cons_new), d):
                    tourney(nextw, rest[1:], cons_new)

        if len(cands) == 1:
            tourney(0, [], constraints)
        else:
            tourney(0, list(range(1, len(cands))), constraints)

    recurse(tuple(range(k)), frozenset())
    return tuple(cells)


# ---------------------------------------------------------------------------
# Window polynomials and root isolation
# ---------------------------------------------------------------------------

def _speed_weight(speeds: tuple[int, ...]) -> RationalPoly:
    n_still = sum(1 for s in speeds if s == STILL)
    n_move = len(speeds) - n_still
    return P_VAR ** n_still * PBAR ** n_move


@lru_cache(maxsize=None)
def expected_Nk_poly(k: int) -> RationalPoly:
    """E[surviving still - surviving left] of a k-window, exactly in p."""
    if k < 1 or k > SYMBOLIC_CAP:
        raise ValueError(f"k must be in [1, {SYMBOLIC_CAP}]")
    total = RationalPoly.zero()
    for speeds in product((-1, 0, 1), repeat=k):
        contrib = Fraction(0)
        for cell in symbolic_resolve(speeds):
            if cell.n_value:
                contrib += cell.n_value * cell.probability
        if contrib:
            total = total + _speed_weight(speeds) * contrib
    return total


@lru_cache(maxsize=None)
def qk_poly(k: int) -> RationalPoly:
    """P(the origin is reached within the k-window), exactly in p."""
    if k < 1 or k > SYMBOLIC_CAP:
        raise ValueError(f"k must be in [1, {SYMBOLIC_CAP}]")
    total = RationalPoly.zero()
    for speeds in product((-1, 0, 1), repeat=k):
        contrib = Fraction(0)
        for cell in symbolic_resolve(speeds):
            if cell.origin_hit:
                contrib += cell.probability
        if contrib:
            total = total + _speed_weight(speeds) * contrib
    return total


def smallest_root(poly: RationalPoly, lo, hi, tol) -> tuple[Fraction, Fraction]:
    """Bisection with exact rational sign evaluation.

    Requires a strict sign change on [lo, hi]; returns an enclosing interval
    of width <= tol (a point interval when a bisection midpoint is an exact
    rational root).
    """
    lo, hi, tol = Fraction(lo), Fraction(hi), Fraction(tol)
    flo, fhi = poly(lo), poly(hi)
    if flo == 0 or fhi == 0 or (flo < 0) == (fhi < 0):
        raise ValueError("no sign change across [lo, hi]")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        fm = poly(mid)
        if fm == 0:
            return (mid, mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return (lo, hi)


def pc_upper_bound_scan(kmax: int, tol=Fraction(1, 10 ** 6)) -> list[tuple]:
    """Per-k smallest root of E[N_k] in (1/4, 1/3]: rigorous threshold bounds.

    An exact zero at 1/3 is reported as a point interval (the k = 1 and
    k = 2 windows); otherwise bisection runs on the certified sign change.
    """
    rows = []
    lo0, hi0 = Fraction(1, 4), Fraction(1, 3)
    for k in range(1, kmax + 1):
        poly = expected_Nk_poly(k)
        if poly(lo0) >= 0:
            raise ValueError(f"E[N_{k}] is not negative at 1/4")
        if poly(hi0) == 0:
            rows.append((k, hi0, hi0))
        else:
            lo, hi = smallest_root(poly, lo0, hi0, tol)
            rows.append((k, lo, hi))
    return rows
