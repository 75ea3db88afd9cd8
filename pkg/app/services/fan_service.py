"""
Fan validation, orbit strata and their point counts over finite fields, star fans.
"""
from collections import Counter
from math import gcd
from typing import List, Optional, Sequence, Tuple

import sympy

from app.models.fan import Fan, FanDiagnostics, RaySet
from app.models.lattice import IntegerMatrix
from app.services.lattice_service import smith_decompose
from app.utils.exceptions import ErrorHelper, no_cone
from app.utils.logger import get_service_logger, log_service_call

logger = get_service_logger("fan")


def validate(fan: Fan) -> FanDiagnostics:
    """Smoothness and completeness diagnostics; never raises on malformed input"""
    messages: List[str] = []
    n_rays = fan.ray_count

    for i, ray in enumerate(fan.rays):
        content = 0
        for x in ray:
            content = gcd(content, x)
        if content == 0:
            messages.append(f"rays[{i}]: zero vector")
        elif content != 1:
            messages.append(f"rays[{i}]: ray not primitive")
    duplicates = [r for r, c in Counter(fan.rays).items() if c > 1]
    for r in duplicates:
        messages.append(f"rays: duplicate ray {list(r)}")

    well_indexed = True
    for cone in fan.cones:
        if any(i < 0 or i >= n_rays for i in cone):
            messages.append(f"cones: index out of range in {list(cone)}")
            well_indexed = False
    if not well_indexed:
        return FanDiagnostics(smooth=False, complete=False, messages=tuple(messages))

    cone_set = set(fan.cones)
    for i in range(n_rays):
        if (i,) not in cone_set:
            messages.append(f"cones: ray {i} is not a cone")

    smooth = True
    for cone in fan.maximal_cones:
        if not cone:
            continue
        if len(cone) > fan.dim:
            smooth = False
            messages.append(f"cones: {list(cone)} has more rays than the dimension")
            continue
        columns = [[fan.rays[i][k] for i in cone] for k in range(fan.dim)]
        invariants = smith_decompose(IntegerMatrix.create(columns)).invariants
        if len(invariants) < len(cone) or any(d != 1 for d in invariants):
            smooth = False
            messages.append(f"cones: {list(cone)} is not smooth (invariants {list(invariants)})")

    complete = _two_facet_criterion(fan)
    if not complete:
        messages.append("fan is not complete")

    return FanDiagnostics(smooth=smooth and not duplicates, complete=complete, messages=tuple(messages))


def _two_facet_criterion(fan: Fan) -> bool:
    top = fan.cones_of_dim(fan.dim)
    if not top:
        return False
    # A facet of a full-dimensional cone must lie in exactly two of them
    for facet in fan.cones_of_dim(fan.dim - 1):
        containing = sum(1 for cone in top if set(facet) <= set(cone))
        if containing != 2:
            return False
    return all(len(c) == fan.dim for c in fan.maximal_cones)


def cone_of_rayset(fan: Fan, rays: Sequence[int]) -> Optional[RaySet]:
    """The cone with exactly this ray set, or None when D_A is empty"""
    key = tuple(sorted(set(rays)))
    return key if key in set(fan.cones) else None


def _check_prime_power(q: int) -> None:
    if q < 2 or len(sympy.factorint(q)) != 1:
        raise ErrorHelper.invalid_prime(q)


def stratum_point_count(fan: Fan, rays: Sequence[int], q: int) -> int:
    """#D_A°(F_q) = (q-1)^(d-|A|) when A spans a cone, else 0"""
    _check_prime_power(q)
    cone = cone_of_rayset(fan, rays)
    if cone is None:
        return 0
    return (q - 1) ** (fan.dim - len(cone))


def variety_point_count(fan: Fan, q: int, allowed: Optional[Sequence[int]] = None) -> int:
    """Sum over cones (of the subfan on `allowed` rays when given) of (q-1)^(d - dim cone)"""
    _check_prime_power(q)
    cones = fan.cones if allowed is None else fan.subfan(allowed)
    return sum((q - 1) ** (fan.dim - len(c)) for c in cones)


def quotient_map(fan: Fan, rays: Sequence[int]) -> List[List[int]]:
    """Integer matrix of N -> N / (Z-span of the given rays); rows are the quotient coordinates"""
    rays = list(rays)
    if not rays:
        return [[int(i == j) for j in range(fan.dim)] for i in range(fan.dim)]
    columns = [[fan.rays[i][k] for i in rays] for k in range(fan.dim)]
    sd = smith_decompose(IntegerMatrix.create(columns))
    if any(d != 1 for d in sd.invariants) or len(sd.invariants) < len(rays):
        raise ErrorHelper.invariant("ray set does not extend to a basis", rays=rays)
    return [list(row) for row in sd.left.entries[len(rays):]]


def star_fan_with_origin(fan: Fan, rays: Sequence[int]) -> Tuple[Fan, Tuple[int, ...]]:
    """Star fan of the cone spanned by `rays`, plus the original index of each new ray"""
    log_service_call(logger, "star_fan", {"rays": list(rays)})
    sigma = cone_of_rayset(fan, rays)
    if sigma is None:
        raise no_cone(rays)
    if not sigma:
        return fan, tuple(range(fan.ray_count))

    q = quotient_map(fan, sigma)
    star_cones = [c for c in fan.cones if set(sigma) <= set(c)]
    origin = sorted({i for c in star_cones for i in c if i not in sigma})
    position = {old: new for new, old in enumerate(origin)}
    new_rays = [tuple(sum(row[k] * fan.rays[i][k] for k in range(fan.dim)) for row in q) for i in origin]
    maximal = [[position[i] for i in c if i not in sigma] for c in star_cones]
    labels = [fan.label(i) for i in origin]
    star = Fan.create(dim=fan.dim - len(sigma), rays=new_rays, maximal_cones=[m for m in maximal if m], labels=labels)
    return star, tuple(origin)


def star_fan(fan: Fan, rays: Sequence[int]) -> Fan:
    """Fan of the stratum D_A = V(sigma_A) in the quotient lattice N / Z sigma_A"""
    return star_fan_with_origin(fan, rays)[0]


def cones_containing(fan: Fan, rays: Sequence[int]) -> Tuple[RaySet, ...]:
    """Maximal cones of the fan that contain the given ray set"""
    target = set(rays)
    return tuple(c for c in fan.maximal_cones if target <= set(c))