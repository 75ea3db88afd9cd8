"""
Characteristic functions of cones, X_L(s) = integral over the dual cone of exp(-<s, y>) dy,
their quotient versions on Pic(U; A), and an independent Monte Carlo oracle.
"""
from fractions import Fraction
from math import prod
from typing import Optional, Sequence, Tuple

import numpy as np

from app.models.common import to_fraction
from app.models.divisor import PicData
from app.models.fan import RaySet, ToricPair
from app.models.lattice import IntegerMatrix, MonteCarloEstimate, RationalCone
from app.models.measures import ChiQuery
from app.services.divisor_service import divisor_sequence
from app.services.lattice_service import (
    cokernel_structure,
    dot,
    dual_cone,
    integer_kernel,
    lattice_volume,
    rank_of,
    triangulate,
)
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ErrorHelper, ToricError
from app.utils.logger import get_service_logger

logger = get_service_logger("chi")


def _lattice_factor(lattice: Optional[IntegerMatrix]) -> int:
    if lattice is None:
        return 1
    return lattice_volume(lattice.transpose().entries)


def chi_value(cone: RationalCone, s: Sequence, lattice: Optional[IntegerMatrix] = None) -> Fraction:
    """Exact X_cone(s), with the measure normalized by the dual of `lattice` (columns; default Z^n)"""
    point = [to_fraction(x) for x in s]
    n = cone.ambient_dim
    if len(point) != n:
        raise ErrorHelper.invariant("evaluation point has the wrong dimension", expected=n, got=len(point))
    if rank_of(cone.generators) < n:
        raise ErrorHelper.pole("dual cone is not pointed; the integral diverges")
    dual = dual_cone(cone)
    total = Fraction(0)
    for piece in triangulate(dual):
        pairings = [dot(point, g) for g in piece.generators]
        if any(v <= 0 for v in pairings):
            raise ErrorHelper.pole(point=[str(x) for x in point])
        total += Fraction(lattice_volume(piece.generators)) / prod(pairings)
    return total * _lattice_factor(lattice)


def quotient_cone(query: ChiQuery) -> Tuple[Optional[RationalCone], Tuple[Fraction, ...], int]:
    """Image cone in Pic(U; A) coordinates, the reduced point, and the number of generators with zero image"""
    k = query.rank
    image = [list(row) for row in query.sublattice]
    d = len(image[0]) if image and image[0] else 0

    if d:
        if rank_of(image) != d:
            raise ErrorHelper.invariant("M does not embed into V_A", coordinates=list(query.coordinates))
        if cokernel_structure(IntegerMatrix.create(image)).torsion:
            raise ToricError(ErrorCode.PIC_TORSION, details={"coordinates": list(query.coordinates)})

    # Z-basis of the dual lattice M^perp of Pic(U; A), as columns of K
    transpose = [[image[i][j] for i in range(k)] for j in range(d)]
    basis = integer_kernel(transpose, k)
    if not basis:
        return None, (), k
    rows = [tuple(b[i] for b in basis) for i in range(k)]

    # Coordinates whose image in V_A / M vanishes contribute a principal value 1/2 each
    dropped = sum(1 for r in rows if not any(r))
    kept_rows = [r for r in rows if any(r)]
    reduced = tuple(sum(b[i] * query.point[i] for i in range(k)) for b in basis)
    cone = RationalCone.create(len(basis), kept_rows)
    if rank_of(kept_rows) < len(basis):
        raise ErrorHelper.pole("image cone is not full-dimensional in Pic(U; A)")
    return cone, reduced, dropped


def chi_quotient(query: ChiQuery) -> Fraction:
    """X of the image of the orthant of V_A in V_A / M, evaluated at the image of the point"""
    cone, reduced, dropped = quotient_cone(query)
    logger.debug(f"Quotient cone over {query.rank} coordinates, {dropped} principal values")
    if cone is None:
        return Fraction(1, 2 ** dropped)
    return chi_value(cone, reduced) / (2 ** dropped)


def build_chi_query(pair: ToricPair, face: RaySet, pic: Optional[PicData] = None) -> ChiQuery:
    """V_A = Z^(A_U) + Z^A with M embedded by m -> (<m, n_a>)_a and the point lambda restricted"""
    pic = pic or divisor_sequence(pair)
    if pic.lambda_ is None:
        raise ErrorHelper.not_big(pair.name)
    coordinates = tuple(pair.kept) + tuple(sorted(face))
    return ChiQuery(
        coordinates=coordinates,
        sublattice=tuple(tuple(pair.fan.rays[a]) for a in coordinates),
        point=tuple(pic.lambda_[a] for a in coordinates),
    )


def chi_monte_carlo_oracle(
    cone: RationalCone,
    s: Sequence,
    samples: int,
    seed: int,
    lattice: Optional[IntegerMatrix] = None,
    blocks: int = 8,
) -> MonteCarloEstimate:
    """Importance-sampled X_cone(s): Laplace proposal on R^n, membership tested on the cone's own generators"""
    n = cone.ambient_dim
    point = np.array([float(to_fraction(x)) for x in s])
    generators = np.array(cone.generators, dtype=float)
    dual = dual_cone(cone)
    if rank_of(cone.generators) < n:
        raise ErrorHelper.pole("dual cone is not pointed")
    rates = [float(dot([to_fraction(x) for x in s], g)) / float(sum(abs(x) for x in g)) for g in dual.generators]
    if min(rates) <= 0:
        raise ErrorHelper.pole("evaluation point is not interior")
    scale = 1.0 / min(rates)

    per_block = max(1, samples // blocks)
    means, variances = [], []
    for child in np.random.SeedSequence(seed).spawn(blocks):
        rng = np.random.default_rng(child)
        y = rng.laplace(0.0, scale, size=(per_block, n))
        inside = np.all(y @ generators.T >= 0.0, axis=1)
        log_q = -np.abs(y).sum(axis=1) / scale - n * np.log(2.0 * scale)
        weights = np.where(inside, np.exp(-(y @ point) - log_q), 0.0)
        means.append(weights.mean())
        variances.append(weights.var(ddof=1) if per_block > 1 else 0.0)

    total = per_block * blocks
    estimate = float(np.mean(means))
    stderr = float(np.sqrt(np.mean(variances) / total))
    factor = _lattice_factor(lattice)
    return MonteCarloEstimate(
        estimate=estimate * factor,
        stderr=stderr * factor,
        samples=total,
        seed=seed,
        blocks=blocks,
    )
