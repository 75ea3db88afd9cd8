"""
Analytic Clemens complex at the real place and the exponent b.
"""
from itertools import combinations
from typing import Optional

from app.models.clemens import ClemensComplex, ExponentReport
from app.models.divisor import PicData
from app.models.fan import ToricPair
from app.services.divisor_service import divisor_sequence
from app.services.fan_service import cone_of_rayset
from app.utils.logger import get_service_logger

logger = get_service_logger("clemens")


def build_clemens(pair: ToricPair) -> ClemensComplex:
    """Faces are the nonempty subsets of A_D spanning a cone (every such stratum has real points)"""
    removed = pair.removed
    if not removed:
        return ClemensComplex()

    faces = []
    for k in range(1, len(removed) + 1):
        for subset in combinations(removed, k):
            if cone_of_rayset(pair.fan, subset) is not None:
                faces.append(subset)
    face_sets = [set(f) for f in faces]
    max_faces = tuple(f for f, s in zip(faces, face_sets) if not any(s < other for other in face_sets))
    return ClemensComplex(
        faces=tuple(faces),
        max_faces=max_faces,
        dim=max(len(f) for f in faces) - 1,
    )


def compute_b(pair: ToricPair, pic: Optional[PicData] = None, complex_: Optional[ClemensComplex] = None) -> ExponentReport:
    """b_pole = |A_U| + (1 + dim C) - rank M and b_theorem = rank Pic(U) + (1 + dim C)"""
    pic = pic or divisor_sequence(pair)
    complex_ = complex_ or build_clemens(pair)
    arch = complex_.archimedean_contribution
    b_pole = len(pair.kept) + arch - pair.dim
    b_theorem = pic.rank_pic_U + arch

    warnings = []
    if b_pole != b_theorem:
        message = (
            f"b_pole = {b_pole} differs from b_theorem = {b_theorem} "
            f"(U has {pic.units_rank_r0} independent nonconstant units); predictions use b_pole"
        )
        warnings.append(message)
        logger.warning(message, extra={"pair_name": pair.name})

    return ExponentReport(
        b_pole=b_pole,
        b_theorem=b_theorem,
        consistent=b_pole == b_theorem,
        units_rank_r0=pic.units_rank_r0,
        clemens_dim=complex_.dim,
        warnings=tuple(warnings),
    )
