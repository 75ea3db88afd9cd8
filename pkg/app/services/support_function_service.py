"""
Piecewise-linear support functions of a smooth complete fan.

phi_a is the function that is linear on every cone with phi_a(n_b) = delta_ab.
Exact evaluation works on integer or Fraction vectors; the numpy paths serve
quadrature and Monte Carlo, and the scalar float paths serve enumeration.
"""
import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from app.models.fan import Fan, RaySet
from app.models.measures import MetricSpec
from app.services.lattice_service import dot, inverse_rows
from app.utils.exceptions import ErrorHelper, metric_not_supported

LinearForm = Tuple[int, ...]


class SupportFunctions:
    """Exact and vectorized evaluation of the phi_a of one fan"""

    def __init__(self, fan: Fan):
        self.fan = fan
        self.dim = fan.dim
        self.maximal: Tuple[RaySet, ...] = tuple(c for c in fan.maximal_cones if len(c) == fan.dim)
        if not self.maximal:
            raise ErrorHelper.invariant("fan has no full-dimensional cone")
        # Row j of the inverse ray matrix is the dual basis element for ray cone[j]
        self.dual_rows: Dict[RaySet, List[LinearForm]] = {}
        for cone in self.maximal:
            rows = inverse_rows([[fan.rays[i][k] for i in cone] for k in range(fan.dim)])
            if any(x.denominator != 1 for r in rows for x in r):
                raise ErrorHelper.invariant("maximal cone is not unimodular", cone=list(cone))
            self.dual_rows[cone] = [tuple(int(x) for x in r) for r in rows]
        self._dual_np = {c: np.array(rows, dtype=float) for c, rows in self.dual_rows.items()}

    # ── exact ────────────────────────────────────────────────────────────

    def locate(self, v: Sequence) -> Tuple[RaySet, Dict[int, Fraction]]:
        """A maximal cone containing v and the coefficients of v in its rays"""
        for cone in self.maximal:
            coefficients = [dot(row, v) for row in self.dual_rows[cone]]
            if all(c >= 0 for c in coefficients):
                return cone, dict(zip(cone, coefficients))
        raise ErrorHelper.invariant("vector lies outside the support of the fan", vector=[str(x) for x in v])

    def support_rays(self, v: Sequence) -> Tuple[int, ...]:
        """Rays of the smallest cone containing v"""
        _, coefficients = self.locate(v)
        return tuple(sorted(a for a, c in coefficients.items() if c > 0))

    def phi(self, v: Sequence, s: Sequence) -> Fraction:
        """phi_s(v) = sum_a s_a phi_a(v), exact"""
        _, coefficients = self.locate(v)
        return sum((Fraction(s[a]) * c for a, c in coefficients.items()), Fraction(0))

    @lru_cache(maxsize=None)
    def pieces(self, alpha: int) -> Tuple[LinearForm, ...]:
        """Distinct linear pieces of phi_alpha over the maximal cones"""
        forms: List[LinearForm] = []
        for cone in self.maximal:
            if alpha in cone:
                form = self.dual_rows[cone][cone.index(alpha)]
            else:
                form = (0,) * self.dim
            if form not in forms:
                forms.append(form)
        return tuple(forms)

    def is_convex(self, alpha: int) -> bool:
        """phi_alpha equals the maximum of its pieces"""
        for form in self.pieces(alpha):
            for beta, ray in enumerate(self.fan.rays):
                if dot(form, ray) > (1 if beta == alpha else 0):
                    return False
        return True

    def require_smoothable(self, metric: MetricSpec) -> None:
        if metric.is_canonical:
            return
        bad = [self.fan.label(a) for a in range(self.fan.ray_count) if not self.is_convex(a)]
        if bad:
            raise metric_not_supported(f"boundary functions of {', '.join(bad)} are not convex")

    def limit_pieces(self, alpha: int, direction: Sequence) -> Tuple[LinearForm, ...]:
        """Pieces of phi_alpha attaining the maximum on `direction`"""
        values = [dot(form, direction) for form in self.pieces(alpha)]
        top = max(values)
        return tuple(form for form, v in zip(self.pieces(alpha), values) if v == top)

    # ── numeric ──────────────────────────────────────────────────────────

    def phi_canonical_np(self, u: np.ndarray, s: Sequence[float]) -> np.ndarray:
        """phi_s on the rows of u by cone location"""
        out = np.full(u.shape[0], np.nan)
        weights = np.asarray(s, dtype=float)
        for cone in self.maximal:
            coeffs = u @ self._dual_np[cone].T
            inside = np.all(coeffs >= -1e-12, axis=1) & np.isnan(out)
            if inside.any():
                out[inside] = coeffs[inside] @ weights[list(cone)]
        return out

    def phi_smoothed_np(self, u: np.ndarray, s: Sequence[float], k: float,
                        piece_sets: Optional[Dict[int, Tuple[LinearForm, ...]]] = None) -> np.ndarray:
        """sum_a s_a (1/k) logsumexp(k * pieces_a(u))"""
        total = np.zeros(u.shape[0])
        for alpha, weight in enumerate(s):
            if weight == 0:
                continue
            forms = piece_sets[alpha] if piece_sets is not None else self.pieces(alpha)
            values = u @ np.array(forms, dtype=float).T
            total += float(weight) * logsumexp(k * values, axis=1) / k
        return total

    def phi_float(self, u: Sequence[float], s: Sequence[float], metric: MetricSpec) -> float:
        """Scalar phi_s(u) for the enumeration hot path"""
        if metric.is_canonical:
            for cone in self.maximal:
                rows = self.dual_rows[cone]
                coefficients = [sum(r[i] * u[i] for i in range(self.dim)) for r in rows]
                if min(coefficients) >= -1e-12:
                    return sum(s[a] * c for a, c in zip(cone, coefficients))
            raise ErrorHelper.invariant("vector lies outside the support of the fan")
        k = metric.k
        total = 0.0
        for alpha, weight in enumerate(s):
            if weight == 0:
                continue
            values = [k * sum(f[i] * u[i] for i in range(self.dim)) for f in self.pieces(alpha)]
            top = max(values)
            total += weight * (top + math.log(sum(math.exp(v - top) for v in values))) / k
        return total


@lru_cache(maxsize=64)
def support_functions(fan: Fan) -> SupportFunctions:
    return SupportFunctions(fan)
