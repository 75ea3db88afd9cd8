"""
Local volumes entering the leading constant: p-adic densities by the stratum
formula, the regularized Euler product over finite places, archimedean
residue measures by adaptive quadrature, and independent oracles for each.
"""
import math
import time
import warnings
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from scipy import integrate
from sympy import sieve

from app.models.common import to_fraction
from app.models.fan import RaySet, ToricPair
from app.models.measures import (
    EulerProductResult,
    LocalDensity,
    MetricSpec,
    MonteCarloSpec,
    QuadratureSpec,
    ResidueMeasureResult,
    ShellDensity,
    TubeOracleResult,
)
from app.services.fan_service import cone_of_rayset, cones_containing
from app.services.support_function_service import support_functions
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ErrorHelper, ToricError, no_cone
from app.utils.logger import get_service_logger, log_performance, log_service_call

logger = get_service_logger("local_measures")

try:
    IntegrationWarning = integrate.IntegrationWarning
except AttributeError:  # older scipy
    from scipy.integrate.quadpack import IntegrationWarning


def _require_prime(p: int) -> None:
    if p < 2 or not sympy.isprime(p):
        raise ErrorHelper.invalid_prime(p)


def _kept_weights(pair: ToricPair, s: Sequence) -> Dict[int, Fraction]:
    kept = pair.kept
    if len(s) != len(kept):
        raise ErrorHelper.invariant("s must have one entry per kept ray", expected=len(kept), got=len(s))
    weights = {a: to_fraction(x) for a, x in zip(kept, s)}
    if any(w <= 0 for w in weights.values()):
        raise ErrorHelper.invariant("s must be strictly positive on the kept rays")
    return weights


# ── finite places ────────────────────────────────────────────────────────────

def denef_local(pair: ToricPair, p: int, s: Sequence) -> LocalDensity:
    """Stratum formula tau_p(T)^-1 p^-d sum_A #D_A°(F_p) prod_{a in A} (p-1)/(p^s_a - 1), A over the kept subfan"""
    _require_prime(p)
    weights = _kept_weights(pair, s)
    d = pair.dim
    integral = all(w.denominator == 1 for w in weights.values())

    if integral:
        total = Fraction(0)
        for cone in pair.kept_subfan():
            term = Fraction((p - 1) ** (d - len(cone)))
            for a in cone:
                term *= Fraction(p - 1, p ** int(weights[a]) - 1)
            total += term
        tamagawa = total / Fraction(p) ** d
        value = tamagawa / (1 - Fraction(1, p)) ** d
        return LocalDensity(
            p=p, s=tuple(weights[a] for a in pair.kept),
            value=value, value_float=float(value),
            tamagawa_value=tamagawa, tamagawa_float=float(tamagawa),
        )

    total = 0.0
    for cone in pair.kept_subfan():
        term = float((p - 1) ** (d - len(cone)))
        for a in cone:
            term *= (p - 1) / math.expm1(float(weights[a]) * math.log(p))
        total += term
    tamagawa = total / p ** d
    return LocalDensity(
        p=p, s=tuple(weights[a] for a in pair.kept),
        value_float=tamagawa / (1 - 1 / p) ** d,
        tamagawa_float=tamagawa,
    )


def _maximal_kept_cones(pair: ToricPair) -> List[RaySet]:
    cones = [tuple(sorted(c)) for c in pair.kept_subfan()]
    return [c for c in cones if not any(set(c) < set(other) for other in cones)]


def residue_class_density(pair: ToricPair, p: int, k: int) -> Fraction:
    """
    #U(Z/p^k) / p^(kd) by brute force over the affine charts of U.

    The chart of a kept cone tau of dimension r is A^r x G_m^(d-r) in the
    coordinates dual to its rays (completed by a lattice basis). Two charts
    meet in the chart of tau cap tau', which inside tau's chart is the locus
    where the coordinates of the rays of tau outside tau' are units. Every
    residue point is assigned to the first chart containing it.
    """
    _require_prime(p)
    if k < 1:
        raise ErrorHelper.invariant("k must be at least 1", k=k)
    d = pair.dim
    modulus = p ** k
    charts = _maximal_kept_cones(pair)
    if len(charts) * modulus ** d > 2_000_000:
        raise ErrorHelper.invariant("residue enumeration too large", p=p, k=k, d=d)
    units = modulus - modulus // p
    count = 0
    for i, tau in enumerate(charts):
        r = len(tau)
        # positions in tau's chart that must be units to lie in an earlier chart
        overlaps = [[j for j, a in enumerate(tau) if a not in earlier] for earlier in charts[:i]]
        torus = units ** (d - r)
        for affine in product(range(modulus), repeat=r):
            if any(all(affine[j] % p for j in positions) for positions in overlaps):
                continue
            count += torus
    return Fraction(count, modulus ** d)


def valuation_shell_density(pair: ToricPair, p: int, s: Sequence, radius: int) -> ShellDensity:
    """Truncated sum over valuation vectors v in the kept support, |v|_inf <= radius, of (1-1/p)^d p^(-phi_s(v))"""
    _require_prime(p)
    weights = _kept_weights(pair, s)
    full_weights = [weights.get(a, Fraction(0)) for a in range(pair.fan.ray_count)]
    sf = support_functions(pair.fan)
    kept = set(pair.kept)
    d = pair.dim
    exact_mode = all(w.denominator == 1 for w in weights.values())

    exact_total = Fraction(0)
    float_total = 0.0
    terms = 0
    for v in product(range(-radius, radius + 1), repeat=d):
        if not set(sf.support_rays(v)) <= kept:
            continue
        phi = sf.phi(v, full_weights)
        terms += 1
        if exact_mode:
            exact_total += Fraction(1, p ** int(phi))
        else:
            float_total += p ** (-float(phi))
    shell = (1 - Fraction(1, p)) ** d
    if exact_mode:
        exact = exact_total * shell
        return ShellDensity(p=p, radius=radius, value=float(exact), exact=exact, terms=terms)
    return ShellDensity(p=p, radius=radius, value=float_total * float(shell), terms=terms)


def euler_factor_polynomial(pair: ToricPair) -> Tuple[List[int], int]:
    """Ascending coefficients of g(x) = sum_tau (1-x)^(d-|tau|) x^|tau| and the exponent e = |A_U| - d"""
    x = sympy.Symbol("x")
    d = pair.dim
    g = sum(((1 - x) ** (d - len(c)) * x ** len(c) for c in pair.kept_subfan()), sympy.Integer(0))
    coefficients = [int(c) for c in reversed(sympy.Poly(sympy.expand(g), x).all_coeffs())]
    return coefficients, len(pair.kept) - d


def finite_tamagawa(pair: ToricPair, prime_bound: int, keep_factors: bool = False) -> EulerProductResult:
    """prod_{p <= P} #U(F_p)/p^d (1 - 1/p)^(|A_U| - d) with a certified tail bound"""
    log_service_call(logger, "finite_tamagawa", {"prime_bound": prime_bound}, pair.name)
    started = time.perf_counter()
    coefficients, exponent = euler_factor_polynomial(pair)
    while len(coefficients) > 1 and coefficients[-1] == 0:
        coefficients.pop()

    x = sympy.Symbol("x")
    g = sum((c * x ** i for i, c in enumerate(coefficients)), sympy.Integer(0))
    expansion = sympy.series(sympy.log(g * (1 - x) ** exponent), x, 0, 3).removeO()
    first = Fraction(str(expansion.coeff(x, 1)))
    second = Fraction(str(expansion.coeff(x, 2)))
    if first != 0:
        raise ErrorHelper.invariant("Euler factors are not 1 + O(1/p^2)", first_order=str(first))

    degree = len(coefficients) - 1
    if degree > 0:
        # roots of x^deg g(1/x) are the reciprocal roots of g
        reciprocal = np.abs(np.roots([float(c) for c in coefficients]))
        radius = max(1.0, float(reciprocal.max())) if reciprocal.size else 1.0
    else:
        radius = 1.0
    if prime_bound <= radius:
        raise ToricError(ErrorCode.CONFIG_INVALID, f"prime bound must exceed {radius:.3f}")
    constant = (degree * radius ** 2 + abs(exponent)) / (2.0 * (1.0 - radius / prime_bound))

    primes = np.array(list(sieve.primerange(2, prime_bound + 1)), dtype=float)
    xs = 1.0 / primes
    g_minus_one = np.polyval(list(reversed(coefficients[1:])) + [0.0], xs) if degree > 0 else np.zeros_like(xs)
    logs = np.log1p(g_minus_one) + exponent * np.log1p(-xs)
    value = math.exp(math.fsum(logs.tolist()))

    result = EulerProductResult(
        value=value,
        prime_bound=prime_bound,
        tail_bound=constant / prime_bound,
        constant=constant,
        second_order=second,
        polynomial=tuple(coefficients),
        exponent=exponent,
        factors={int(p): float(l) for p, l in zip(primes, logs)} if keep_factors else None,
    )
    log_performance(logger, "finite_tamagawa", (time.perf_counter() - started) * 1000, pair.name)
    return result


# ── archimedean place ────────────────────────────────────────────────────────

def canonical_residue_volume(pair: ToricPair, face: RaySet) -> float:
    """2^|A| * 2^(d-|A|) * #(maximal cones containing sigma_A) under the canonical metric"""
    if cone_of_rayset(pair.fan, face) is None:
        raise no_cone(face)
    return float(2 ** pair.dim * len(cones_containing(pair.fan, face)))


def _chart_integrand(pair: ToricPair, face: RaySet, chart: RaySet, metric: MetricSpec):
    """exp(-phi_1(w)) on the star chart, w = sum t_b n_b over the chart rays outside the face"""
    fan = pair.fan
    sf = support_functions(fan)
    direction = [sum(fan.rays[a][k] for a in face) for k in range(fan.dim)]
    pieces = {a: sf.limit_pieces(a, direction) for a in range(fan.ray_count)}
    free = [b for b in chart if b not in face]
    basis = np.array([fan.rays[b] for b in free], dtype=float).reshape(len(free), fan.dim)
    ones = [1.0] * fan.ray_count

    def density(*t):
        w = np.asarray(t, dtype=float) @ basis if free else np.zeros(fan.dim)
        u = w.reshape(1, -1)
        if metric.is_canonical:
            phi = sf.phi_canonical_np(u, ones)[0]
        else:
            phi = sf.phi_smoothed_np(u, ones, metric.k, pieces)[0]
        return math.exp(-phi)

    return density, len(free)


def residue_measure(pair: ToricPair, face: RaySet, metric: MetricSpec, quadrature: QuadratureSpec) -> ResidueMeasureResult:
    """tau_A(D_A(R)) including c_R = 2 per element of the face, integrated chart by chart over the star fan"""
    face = tuple(sorted(face))
    log_service_call(logger, "residue_measure", {"face": list(face), "metric": metric.describe()}, pair.name)
    if cone_of_rayset(pair.fan, face) is None:
        raise no_cone(face)
    sf = support_functions(pair.fan)
    sf.require_smoothable(metric)

    started = time.perf_counter()
    charts = cones_containing(pair.fan, face)
    total, error = 0.0, 0.0
    for chart in charts:
        density, k = _chart_integrand(pair, face, chart, metric)
        if k == 0:
            total += density()
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", IntegrationWarning)
            value, abserr = integrate.nquad(
                density,
                [[0.0, np.inf]] * k,
                opts={"epsrel": quadrature.rel_tol, "epsabs": 0.0, "limit": quadrature.subinterval_limit},
            )
        if any(issubclass(w.category, IntegrationWarning) for w in caught) and abserr > 100 * quadrature.rel_tol * abs(value):
            raise ToricError(
                ErrorCode.QUADRATURE_NONCONVERGENCE,
                details={"face": list(face), "chart": list(chart), "estimate": value, "abserr": abserr},
            )
        total += value
        error += abserr

    scale = float(2 ** pair.dim)
    result = ResidueMeasureResult(
        face=face,
        value=scale * total,
        est_error=scale * error,
        metric=metric,
        charts=len(charts),
        closed_form=canonical_residue_volume(pair, face) if metric.is_canonical else None,
    )
    log_performance(logger, f"residue_measure{list(face)}", (time.perf_counter() - started) * 1000, pair.name)
    return result


def tube_oracle(
    pair: ToricPair,
    face: RaySet,
    metric: MetricSpec,
    epsilons: Sequence[float],
    mc: MonteCarloSpec,
) -> TubeOracleResult:
    """
    mu_X({|f_a| < eps for a in A}) / eps^|A| by Monte Carlo, extrapolated linearly to eps = 0.

    Chart coordinates c >= 0 (u = sum c_j n_j over a maximal cone containing
    the face) are drawn from the unit exponential law on the whole chart; the
    tube is the event phi_a(u) > log(1/eps) for every a in A. The estimate is
    therefore a hit frequency with a genuine sampling error under either metric.
    """
    face = tuple(sorted(face))
    if mc.seed is None:
        raise ErrorHelper.config_invalid("tube oracle needs a seed")
    if cone_of_rayset(pair.fan, face) is None:
        raise no_cone(face)
    fan = pair.fan
    sf = support_functions(fan)
    sf.require_smoothable(metric)
    d = fan.dim
    ones = [1.0] * fan.ray_count
    indicators = {b: [1.0 if a == b else 0.0 for a in range(fan.ray_count)] for b in face}
    charts = cones_containing(fan, face)
    per_block = max(2, mc.samples // (mc.blocks * len(charts)))
    seeds = np.random.SeedSequence(mc.seed).spawn(len(epsilons) * len(charts) * mc.blocks)

    estimates, stderrs = [], []
    seed_index = 0
    for eps in epsilons:
        level = math.log(1.0 / eps)
        mean_total, var_total = 0.0, 0.0
        for chart in charts:
            rays = np.array([fan.rays[b] for b in chart], dtype=float)
            block_means, block_vars = [], []
            for _ in range(mc.blocks):
                rng = np.random.default_rng(seeds[seed_index])
                seed_index += 1
                c = rng.exponential(1.0, size=(per_block, len(chart)))
                u = c @ rays
                tube = np.ones(per_block, dtype=bool)
                if metric.is_canonical:
                    phi_all = sf.phi_canonical_np(u, ones)
                    for b in face:
                        tube &= sf.phi_canonical_np(u, indicators[b]) > level
                else:
                    phi_all = sf.phi_smoothed_np(u, ones, metric.k)
                    for b in face:
                        tube &= sf.phi_smoothed_np(u, indicators[b], metric.k) > level
                # density 2^d exp(-phi(u)) against the sampling density exp(-sum c)
                weights = np.where(tube, (2.0 ** d) * np.exp(c.sum(axis=1) - phi_all), 0.0) / eps ** len(face)
                block_means.append(weights.mean())
                block_vars.append(weights.var(ddof=1))
            mean_total += float(np.mean(block_means))
            var_total += float(np.mean(block_vars)) / (per_block * mc.blocks)
        estimates.append(mean_total)
        stderrs.append(math.sqrt(var_total))

    xs = np.asarray(epsilons, dtype=float)
    if len(epsilons) >= 2 and face:
        # intercept of the least-squares line as a linear combination of the estimates
        centred = xs - xs.mean()
        coefficients = 1.0 / len(xs) - xs.mean() * centred / float(centred @ centred)
        extrapolated = float(coefficients @ np.asarray(estimates))
        stderr = float(math.sqrt(float((coefficients ** 2) @ np.asarray(stderrs) ** 2)))
    else:
        smallest = int(np.argmin(xs))
        extrapolated = float(estimates[smallest])
        stderr = stderrs[smallest]
    return TubeOracleResult(
        face=face,
        epsilons=tuple(float(e) for e in epsilons),
        estimates=tuple(estimates),
        stderrs=tuple(stderrs),
        extrapolated=extrapolated,
        stderr=stderr,
        samples=per_block * mc.blocks * len(charts),
        seed=mc.seed,
    )
