"""
Exact integer/rational linear algebra and polyhedral cone primitives.

Everything here is exact: integers, fractions.Fraction and sympy rationals.
Smith decompositions come from sympy and are normalized so that the invariant
factors are nonnegative and form a divisibility chain.
"""
from fractions import Fraction
from itertools import combinations
from math import gcd, prod
from typing import List, Optional, Sequence, Tuple

import sympy
from sympy.matrices.normalforms import smith_normal_decomp

from app.models.common import to_fraction
from app.models.lattice import (
    CokernelStructure,
    IntegerMatrix,
    RationalCone,
    SmithDecomposition,
    StrictInequality,
    primitive_vector,
)
from app.utils.exceptions import ErrorHelper
from app.utils.logger import get_service_logger

logger = get_service_logger("lattice")

Vector = Tuple[Fraction, ...]


# ── small exact helpers ──────────────────────────────────────────────────────

def dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def _matmul(a: List[List[int]], b: List[List[int]]) -> List[List[int]]:
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def _extended_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """x, y, g with x*a + y*b = g = gcd(a, b) >= 0"""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_x, old_y, old_r


def _divides(a: int, b: int) -> bool:
    if a == 0:
        return b == 0
    return b % a == 0


def rank_of(rows: Sequence[Sequence]) -> int:
    rows = [list(r) for r in rows]
    if not rows or not rows[0]:
        return 0
    return int(sympy.Matrix(rows).rank())


def null_basis(rows: Sequence[Sequence], n: int) -> List[Vector]:
    """Rational basis of {x in Q^n : rows . x = 0}"""
    rows = [list(r) for r in rows]
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    return [tuple(to_fraction(x) for x in v) for v in sympy.Matrix(rows).nullspace()]


def row_space_basis(rows: Sequence[Sequence]) -> List[Vector]:
    rows = [list(r) for r in rows]
    if not rows:
        return []
    return [tuple(to_fraction(x) for x in v) for v in sympy.Matrix(rows).rowspace()]


def inverse_rows(square: Sequence[Sequence[int]]) -> List[Vector]:
    """Rows of the inverse of a square integer matrix"""
    inv = sympy.Matrix([list(r) for r in square]).inv()
    return [tuple(to_fraction(x) for x in inv.row(i)) for i in range(inv.rows)]


# ── Smith normal form ────────────────────────────────────────────────────────

def smith_decompose(A: IntegerMatrix) -> SmithDecomposition:
    """Smith decomposition left * A * right = diag(invariants), invariants in divisibility order"""
    rows, cols = A.rows, A.cols
    D, S, T = smith_normal_decomp(sympy.Matrix([list(r) for r in A.entries]), domain=sympy.ZZ)
    left = [[int(S[i, j]) for j in range(rows)] for i in range(rows)]
    right = [[int(T[i, j]) for j in range(cols)] for i in range(cols)]
    n = min(rows, cols)
    inv = [int(D[i, i]) for i in range(n)]

    for i in range(n):
        if inv[i] < 0:
            inv[i] = -inv[i]
            left[i] = [-x for x in left[i]]

    # Enforce the divisibility chain: diag(a, b) -> diag(gcd, lcm) by unimodular moves
    for i in range(n):
        for j in range(i + 1, n):
            a, b = inv[i], inv[j]
            if _divides(a, b):
                continue
            x, y, g = _extended_gcd(a, b)
            row_i, row_j = left[i], left[j]
            left[i] = [x * u + y * v for u, v in zip(row_i, row_j)]
            left[j] = [(-b // g) * u + (a // g) * v for u, v in zip(row_i, row_j)]
            for r in right:
                ci, cj = r[i], r[j]
                r[i] = ci + cj
                r[j] = (-y * b // g) * ci + (x * a // g) * cj
            inv[i], inv[j] = g, a * b // g

    result = SmithDecomposition(
        left=IntegerMatrix.create(left),
        invariants=tuple(inv),
        right=IntegerMatrix.create(right),
    )
    _check_smith(A, result)
    return result


def _check_smith(A: IntegerMatrix, sd: SmithDecomposition) -> None:
    product = _matmul(_matmul([list(r) for r in sd.left.entries], [list(r) for r in A.entries]),
                      [list(r) for r in sd.right.entries])
    for i, row in enumerate(product):
        for j, value in enumerate(row):
            expected = sd.invariants[i] if i == j and i < len(sd.invariants) else 0
            if value != expected:
                raise ErrorHelper.invariant("Smith reconstruction failed", matrix=[list(r) for r in A.entries])
    for unimodular in (sd.left, sd.right):
        if abs(sympy.Matrix([list(r) for r in unimodular.entries]).det()) != 1:
            raise ErrorHelper.invariant("Smith transform is not unimodular")


def cokernel_structure(A: IntegerMatrix) -> CokernelStructure:
    """Structure of Z^rows / A Z^cols: free rank and torsion invariants"""
    sd = smith_decompose(A)
    r = sd.rank
    return CokernelStructure(
        rank=A.rows - r,
        torsion=tuple(d for d in sd.invariants if d > 1),
        kernel_rank=A.cols - r,
    )


def integer_kernel(rows: Sequence[Sequence[int]], n: int) -> List[Tuple[int, ...]]:
    """Z-basis of {x in Z^n : rows . x = 0}"""
    if not rows:
        return [tuple(int(i == j) for j in range(n)) for i in range(n)]
    sd = smith_decompose(IntegerMatrix.create(rows))
    return [sd.right.column(j) for j in range(sd.rank, n)]


def lattice_volume(generators: Sequence[Sequence[int]]) -> int:
    """Index of the lattice spanned by the generators inside its saturation (|det| when square)"""
    if not generators:
        return 1
    sd = smith_decompose(IntegerMatrix.create(generators))
    return prod(d for d in sd.invariants if d != 0)


# ── cones ────────────────────────────────────────────────────────────────────

def _pointed_dual_rays(generators: Sequence[Sequence[int]]) -> List[Tuple[int, ...]]:
    """Extreme rays of {y in span(G) : G y >= 0}; for a pointed cone these are its facet normals"""
    basis = row_space_basis(generators)
    r = len(basis)
    if r == 0:
        return []
    pairing = [[dot(g, b) for b in basis] for g in generators]
    rays: List[Tuple[int, ...]] = []
    for subset in combinations(range(len(generators)), r - 1):
        null = null_basis([pairing[i] for i in subset], r)
        if len(null) != 1:
            continue
        c = null[0]
        values = [dot(h, c) for h in pairing]
        if all(v >= 0 for v in values):
            sign = 1
        elif all(v <= 0 for v in values):
            sign = -1
        else:
            continue
        y = [sign * sum(c[j] * basis[j][i] for j in range(r)) for i in range(len(basis[0]))]
        ray = primitive_vector(y)
        if any(ray) and ray not in rays:
            rays.append(ray)
    return rays


def dual_cone(C: RationalCone) -> RationalCone:
    """{y : <y, g> >= 0 for every generator g}; lineality first, then the pointed part"""
    n = C.ambient_dim
    generators = [list(g) for g in C.generators]
    if not generators:
        return RationalCone.whole_space(n)
    dual_gens = []
    for v in null_basis(generators, n):
        p = primitive_vector(v)
        dual_gens.append(p)
        dual_gens.append(tuple(-x for x in p))
    dual_gens.extend(_pointed_dual_rays(generators))
    return RationalCone.create(n, dual_gens)


def cone_contains(C: RationalCone, point: Sequence, dual: Optional[RationalCone] = None) -> bool:
    """Exact membership via the inequalities of the dual cone"""
    dual = dual or dual_cone(C)
    values = [to_fraction(x) for x in point]
    return all(dot(h, values) >= 0 for h in dual.generators)


def is_pointed(C: RationalCone) -> bool:
    """True when some linear form is strictly positive on every generator"""
    if not C.generators:
        return True
    system = [StrictInequality(coefficients=tuple(Fraction(x) for x in g), bound=Fraction(0)) for g in C.generators]
    return find_interior_point(system) is not None


def triangulate(C: RationalCone) -> List[RationalCone]:
    """Pulling triangulation from the first generator; requires a pointed cone"""
    generators = [tuple(g) for g in C.generators]
    if not generators:
        return []
    r = rank_of(generators)
    if len(generators) == r:
        return [C]
    if not is_pointed(C):
        raise ErrorHelper.invariant("cannot triangulate a cone containing a line", generators=[list(g) for g in generators])
    apex = generators[0]
    pieces: List[RationalCone] = []
    for normal in _pointed_dual_rays(generators):
        if dot(normal, apex) == 0:
            continue
        facet = [g for g in generators if dot(normal, g) == 0]
        for sub in triangulate(RationalCone.create(C.ambient_dim, facet)):
            pieces.append(RationalCone.create(C.ambient_dim, [apex] + list(sub.generators)))
    return pieces


# ── strict feasibility ───────────────────────────────────────────────────────

def _normalize_row(coefficients: List[Fraction], bound: Fraction) -> Tuple[Tuple[Fraction, ...], Fraction]:
    scale = max((abs(c) for c in coefficients), default=Fraction(0))
    if scale == 0:
        return tuple(coefficients), bound
    return tuple(c / scale for c in coefficients), bound / scale


def _fourier_motzkin(system: List[Tuple[Tuple[Fraction, ...], Fraction]], n: int) -> Optional[Vector]:
    live = []
    for a, b in system:
        if all(c == 0 for c in a):
            if b >= 0:
                return None
            continue
        live.append((a, b))
    if n == 0:
        return ()

    lower, upper, projected = [], [], []
    for a, b in live:
        c = a[n - 1]
        if c > 0:
            lower.append((a, b))
        elif c < 0:
            upper.append((a, b))
        else:
            projected.append(_normalize_row(list(a[:n - 1]), b))
    for al, bl in lower:
        for au, bu in upper:
            cl, cu = al[n - 1], au[n - 1]
            combined = [(-cu) * al[i] + cl * au[i] for i in range(n - 1)]
            projected.append(_normalize_row(combined, (-cu) * bl + cl * bu))
    projected = list(dict.fromkeys(projected))

    head = _fourier_motzkin(projected, n - 1)
    if head is None:
        return None

    lows = [(b - dot(a[:n - 1], head)) / a[n - 1] for a, b in lower]
    highs = [(b - dot(a[:n - 1], head)) / a[n - 1] for a, b in upper]
    lo = max(lows) if lows else None
    hi = min(highs) if highs else None
    if lo is not None and hi is not None:
        value = (lo + hi) / 2
    elif lo is not None:
        value = lo + 1
    elif hi is not None:
        value = hi - 1
    else:
        value = Fraction(0)
    return tuple(head) + (value,)


def find_interior_point(inequalities: Sequence[StrictInequality]) -> Optional[Vector]:
    """Exact witness of <a_i, x> > b_i for all i, or None when the system is infeasible"""
    if not inequalities:
        return ()
    n = len(inequalities[0].coefficients)
    system = [_normalize_row(list(q.coefficients), q.bound) for q in inequalities]
    witness = _fourier_motzkin(system, n)
    if witness is None:
        return None
    if not all(q.holds(witness) for q in inequalities):
        raise ErrorHelper.invariant("Fourier-Motzkin witness fails an inequality")
    return witness
