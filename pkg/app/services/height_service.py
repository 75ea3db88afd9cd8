"""
Global heights on T(Q) and the integrality test for the split model.

log_p x is the valuation vector of x at p and log_inf x = (-log|x_i|)_i, so
H(x; s) = prod_p p^phi_s(log_p x) * exp(phi_s(log_inf x)).
"""
import math
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

from mpmath import iv

from app.models.census import TorusPoint
from app.models.common import to_fraction
from app.models.fan import Fan, ToricPair
from app.models.measures import MetricSpec
from app.services.support_function_service import support_functions
from app.utils.exceptions import ErrorHelper

Height = Union[Fraction, float]


def _character_value(x: Sequence[Fraction], m: Sequence[int]) -> Fraction:
    value = Fraction(1)
    for xi, mi in zip(x, m):
        value *= xi ** mi
    return value


def archimedean_log(x: TorusPoint) -> Tuple[float, ...]:
    """log_inf x = (-log|x_i|)_i"""
    coords = x.to_rationals()
    return tuple(-(math.log(abs(c.numerator)) - math.log(c.denominator)) for c in coords)


def _archimedean_cone(fan: Fan, x: TorusPoint) -> Tuple[Tuple[int, ...], Tuple[Fraction, ...]]:
    """Maximal cone containing log_inf x, decided exactly, with |chi^(m_j)(x)| for its dual basis"""
    sf = support_functions(fan)
    coords = [abs(c) for c in x.to_rationals()]
    for cone in sf.maximal:
        values = tuple(_character_value(coords, row) for row in sf.dual_rows[cone])
        # <m_j, log_inf x> >= 0 iff |chi^(m_j)(x)| <= 1
        if all(v <= 1 for v in values):
            return cone, values
    raise ErrorHelper.invariant("log_inf x lies outside the fan support")


def _archimedean_exact(fan: Fan, x: TorusPoint, s: Sequence[Fraction]) -> Fraction:
    """|chi^(-m_sigma)(x)|, the canonical archimedean factor for integral s"""
    cone, values = _archimedean_cone(fan, x)
    total = Fraction(1)
    for a, v in zip(cone, values):
        total *= v ** -int(s[a])
    return total


def _finite_part(fan: Fan, x: TorusPoint, s: Sequence[Fraction]) -> Tuple[Fraction, float]:
    """prod_p p^phi_s(log_p x) as an exact rational when every exponent is integral, and its log"""
    sf = support_functions(fan)
    exact: Optional[Fraction] = Fraction(1)
    log_total = 0.0
    for p, v in x.exponents.items():
        phi = sf.phi(v, s)
        log_total += float(phi) * math.log(p)
        if exact is not None and phi.denominator == 1:
            exact *= Fraction(p) ** int(phi)
        else:
            exact = None
    return exact, log_total


def height(fan: Fan, x: TorusPoint, s: Sequence, metric: Optional[MetricSpec] = None) -> Height:
    """H(x; s) on the fan's toric variety; exact Fraction under CANONICAL with integral s"""
    metric = metric or MetricSpec.canonical()
    if x.dim != fan.dim:
        raise ErrorHelper.invariant("point and fan dimensions differ", point=x.dim, fan=fan.dim)
    weights = [to_fraction(w) for w in s]
    if len(weights) != fan.ray_count:
        raise ErrorHelper.invariant("s needs one weight per ray", expected=fan.ray_count, got=len(weights))

    exact_finite, log_finite = _finite_part(fan, x, weights)
    integral = all(w.denominator == 1 for w in weights)
    if metric.is_canonical and integral and exact_finite is not None:
        return exact_finite * _archimedean_exact(fan, x, weights)
    return math.exp(log_height(fan, x, weights, metric, log_finite=log_finite))


def log_height(fan: Fan, x: TorusPoint, s: Sequence, metric: MetricSpec, log_finite: Optional[float] = None) -> float:
    weights = [to_fraction(w) for w in s]
    if log_finite is None:
        _, log_finite = _finite_part(fan, x, weights)
    sf = support_functions(fan)
    return log_finite + sf.phi_float(archimedean_log(x), [float(w) for w in weights], metric)


def log_height_interval(fan: Fan, x: TorusPoint, s: Sequence, metric: MetricSpec):
    """Enclosure of log H(x; s) in mpmath interval arithmetic"""
    sf = support_functions(fan)
    weights = [to_fraction(w) for w in s]

    def exact(q: Fraction):
        return iv.mpf(q.numerator) / iv.mpf(q.denominator)

    total = iv.mpf(0)
    for p, v in x.exponents.items():
        total += exact(sf.phi(v, weights)) * iv.log(iv.mpf(p))
    u = [-iv.log(exact(abs(c))) for c in x.to_rationals()]

    if metric.is_canonical:
        cone, _ = _archimedean_cone(fan, x)
        rows = sf.dual_rows[cone]
        for j, a in enumerate(cone):
            coefficient = sum((u[i] * rows[j][i] for i in range(fan.dim)), iv.mpf(0))
            total += exact(weights[a]) * coefficient
        return total

    k = iv.mpf(metric.k)
    for alpha, weight in enumerate(weights):
        if weight == 0:
            continue
        terms = [iv.exp(k * sum((u[i] * f[i] for i in range(fan.dim)), iv.mpf(0))) for f in sf.pieces(alpha)]
        total += exact(weight) * iv.log(sum(terms, iv.mpf(0))) / k
    return total


def compare_height(fan: Fan, x: TorusPoint, s: Sequence, metric: MetricSpec, bound: Fraction) -> int:
    """Sign of H(x; s) - bound, decided exactly or by interval enclosure; 0 means equal"""
    weights = [to_fraction(w) for w in s]
    if metric.is_canonical and all(w.denominator == 1 for w in weights):
        value = height(fan, x, weights, metric)
        if isinstance(value, Fraction):
            return (value > bound) - (value < bound)
    enclosure = log_height_interval(fan, x, weights, metric)
    target = iv.log(iv.mpf(bound.numerator) / iv.mpf(bound.denominator))
    if enclosure.a > target.b:
        return 1
    if enclosure.b < target.a:
        return -1
    # Enclosure straddles the bound
    raise ErrorHelper.invariant("interval enclosure too wide to decide the bound", bound=str(bound))


def is_integral(x: TorusPoint, pair: ToricPair) -> bool:
    """log_p x lies in the support of the kept subfan at every prime"""
    sf = support_functions(pair.fan)
    kept = set(pair.kept)
    for v in x.exponents.values():
        if not set(sf.support_rays(v)) <= kept:
            return False
    return True


def anticanonical_height(pair: ToricPair, x: TorusPoint, metric: Optional[MetricSpec] = None) -> Height:
    """Height attached to the log-anticanonical class, weights rho"""
    return height(pair.fan, x, pair.rho, metric)
