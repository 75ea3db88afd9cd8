"""
Divisor class bookkeeping for a toric pair: Pic(X), Pic(U), units of U,
the effective cone, rho and a strictly positive representative lambda.
"""
from fractions import Fraction
from typing import List, Sequence

from app.models.divisor import BigCheck, PicData
from app.models.fan import Fan, ToricPair
from app.models.lattice import IntegerMatrix, RationalCone, StrictInequality
from app.services.lattice_service import cokernel_structure, dot, find_interior_point, smith_decompose
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ErrorHelper, ToricError
from app.utils.logger import get_service_logger

logger = get_service_logger("divisor")


def ray_matrix(fan: Fan, indices: Sequence[int] = None) -> List[List[int]]:
    """Matrix of m -> (<m, n_a>)_a restricted to the given rays (rows are rays)"""
    indices = range(fan.ray_count) if indices is None else indices
    return [list(fan.rays[i]) for i in indices]


def class_map(fan: Fan) -> List[List[int]]:
    """Rows of Z^rays -> Pic(X) = Z^rays / div(M) in Smith coordinates"""
    sd = smith_decompose(IntegerMatrix.create(ray_matrix(fan)))
    if any(d != 1 for d in sd.invariants):
        raise ErrorHelper.invariant("Pic(X) has torsion; the fan is not smooth and complete")
    return [list(row) for row in sd.left.entries[sd.rank:]]


def check_big(pair: ToricPair) -> BigCheck:
    """rho + div(chi^m) strictly positive for some m in M_R"""
    fan = pair.fan
    rho = pair.rho
    inequalities = [
        StrictInequality(coefficients=tuple(Fraction(x) for x in fan.rays[a]), bound=Fraction(-rho[a]))
        for a in range(fan.ray_count)
    ]
    m = find_interior_point(inequalities)
    if m is None:
        logger.info("Pair is not big", extra={"pair_name": pair.name})
        return BigCheck(big=False)
    lam = tuple(rho[a] + dot(fan.rays[a], m) for a in range(fan.ray_count))
    return BigCheck(big=True, lambda_=lam, character=tuple(m))


def divisor_sequence(pair: ToricPair) -> PicData:
    """Ranks of Pic(X), Pic(U), the unit rank r0 and class data for the pair"""
    fan = pair.fan
    d = fan.dim
    coker_x = cokernel_structure(IntegerMatrix.create(ray_matrix(fan)))

    kept = pair.kept
    if kept:
        coker_u = cokernel_structure(IntegerMatrix.create(ray_matrix(fan, kept)))
        rank_pic_u, r0, torsion = coker_u.rank, coker_u.kernel_rank, coker_u.torsion
    else:
        rank_pic_u, r0, torsion = 0, d, ()

    if torsion:
        raise ToricError(ErrorCode.PIC_TORSION, details={"pair": pair.name, "torsion": list(torsion)})

    rows = class_map(fan)
    generators = tuple(tuple(row[a] for row in rows) for a in range(fan.ray_count))
    rho_class = tuple(dot(row, pair.rho) for row in rows)
    big = check_big(pair)

    return PicData(
        rank_pic_X=coker_x.rank,
        rank_pic_U=rank_pic_u,
        units_rank_r0=r0,
        pic_U_torsion=torsion,
        effective_generators=generators,
        rho=pair.rho,
        rho_class=rho_class,
        big=big.big,
        lambda_=big.lambda_,
        character=big.character,
    )


def effective_cone(pair: ToricPair) -> RationalCone:
    """Image of the nonnegative orthant of Z^rays in Pic(X)_R"""
    rows = class_map(pair.fan)
    generators = [[row[a] for row in rows] for a in range(pair.fan.ray_count)]
    return RationalCone.create(len(rows), generators)
