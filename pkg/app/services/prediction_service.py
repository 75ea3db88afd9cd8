"""
Assembly of the exponent b and the leading constant Theta, and verification
of predictions against the census.

Theta = sum over maximal faces A of the Clemens complex of
X_A(lambda) * tau_fin * tau_A(D_A(R)); with D empty the single face is the
empty set and the term is Peyre's alpha * tau(X(A_Q)).
"""
import asyncio
import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from app.models.census import CensusResult, TorusPoint
from app.models.clemens import ClemensComplex, ExponentReport
from app.models.config import RunConfig, Tolerances
from app.models.divisor import PicData
from app.models.fan import RaySet, ToricPair
from app.models.measures import EulerProductResult, MetricSpec, ResidueMeasureResult
from app.models.report import (
    AnalysisReport,
    CheckResult,
    ErrorBudget,
    FaceTerm,
    ObstructionReport,
    OracleComparison,
    OracleReport,
    ThetaReport,
    Verdict,
)
from app.services.census_service import (
    count_partition,
    count_partition_payload,
    default_workers,
    fit_leading,
    merge_partitions,
    naive_count,
    partition_payloads,
)
from app.services.chi_service import build_chi_query, chi_monte_carlo_oracle, chi_quotient, chi_value, quotient_cone
from app.services.clemens_service import build_clemens, compute_b
from app.services.divisor_service import divisor_sequence, effective_cone
from app.services.fan_service import validate
from app.services.height_service import is_integral
from app.services.local_measure_service import (
    denef_local,
    finite_tamagawa,
    residue_class_density,
    residue_measure,
    tube_oracle,
)
from app.utils.cache_keys import census_cache_key
from app.utils.cache_utils import load_census_cache, save_census_cache
from app.utils.exceptions import ErrorHelper
from app.utils.logger import get_service_logger, log_service_call

logger = get_service_logger("prediction")

SPLIT_ASSUMPTION = "split torus over Q: weak-approximation, Brauer and class-number factors equal 1"
PROJECTIVITY_ASSUMPTION = "projectivity of X is assumed, not verified"
ORACLE_PRIMES = (2, 3, 5)
TUBE_EPSILONS = (0.04, 0.02, 0.01)
RESIDUE_LEVELS = (2, 3)
RESIDUE_ENUMERATION_LIMIT = 200_000


def obstruction_check(pair: ToricPair) -> ObstructionReport:
    """The identity is an integral adelic point in the split model; x = 1/2 is offered when also integral"""
    identity = TorusPoint.identity(pair.dim)
    extras = []
    if pair.dim:
        half = TorusPoint.from_rationals([Fraction(1, 2)] + [1] * (pair.dim - 1))
        if is_integral(half, pair):
            extras.append(half)
    return ObstructionReport(witness=identity, extra_witnesses=tuple(extras), obstructed=False)


def theta_faces(complex_: ClemensComplex) -> Tuple[RaySet, ...]:
    """Faces of maximal dimension; the empty face when the complex is empty"""
    if complex_.dim < 0:
        return ((),)
    return tuple(f for f in complex_.max_faces if len(f) == complex_.dim + 1)


def _base_assumptions(metric: MetricSpec) -> Tuple[str, ...]:
    return (SPLIT_ASSUMPTION, f"metric {metric.describe()} at the real place, model metric at finite places",
            PROJECTIVITY_ASSUMPTION)


def analyze(pair: ToricPair) -> AnalysisReport:
    diagnostics = validate(pair.fan)
    pic = divisor_sequence(pair)
    complex_ = build_clemens(pair)
    exponent = compute_b(pair, pic, complex_)
    warnings = list(exponent.warnings)
    if not pic.big:
        warnings.append("log-anticanonical not big")
    return AnalysisReport(
        pair_name=pair.name,
        dim=pair.dim,
        rays=pair.fan.rays,
        removed=tuple(pair.fan.label(i) for i in pair.removed),
        maximal_cones=pair.fan.maximal_cones,
        diagnostics=diagnostics,
        pic=pic,
        clemens=complex_,
        exponent=exponent,
        assumptions=(SPLIT_ASSUMPTION, PROJECTIVITY_ASSUMPTION),
        warnings=tuple(warnings),
    )


def peyre_alpha(pair: ToricPair, pic: PicData):
    """X of the effective cone of X at the class of rho"""
    return chi_value(effective_cone(pair), pic.rho_class)


def assemble_theta(
    pair: ToricPair,
    metric: MetricSpec,
    pic: PicData,
    exponent: ExponentReport,
    euler: EulerProductResult,
    residues: Dict[RaySet, ResidueMeasureResult],
) -> ThetaReport:
    """Combine per-face factors into Theta with its error budget"""
    terms: List[FaceTerm] = []
    quadrature_error = 0.0
    for face, residue in residues.items():
        chi = chi_quotient(build_chi_query(pair, face, pic))
        theta = float(chi) * euler.value * residue.value
        quadrature_error += float(chi) * euler.value * residue.est_error
        terms.append(FaceTerm(
            face=face,
            labels=tuple(pair.fan.label(i) for i in face),
            chi_value=chi,
            finite_volume=euler.value,
            arch_volume=residue.value,
            arch_error=residue.est_error,
            theta=theta,
        ))

    total = sum(t.theta for t in terms)
    if total <= 0:
        raise ErrorHelper.invariant("Theta must be positive", pair=pair.name)
    warnings = list(exponent.warnings)
    alpha = None
    if pair.is_rational_mode:
        alpha = peyre_alpha(pair, pic)
        if terms and alpha != terms[0].chi_value:
            message = f"Peyre alpha {alpha} differs from the quotient value {terms[0].chi_value}"
            warnings.append(message)
            logger.warning(message, extra={"pair_name": pair.name})

    b = exponent.b
    return ThetaReport(
        pair_name=pair.name,
        mode="RATIONAL" if pair.is_rational_mode else "INTEGRAL",
        metric=metric.describe(),
        exponent=exponent,
        faces=tuple(terms),
        theta_total=total,
        error=ErrorBudget(euler_tail=total * math.expm1(euler.tail_bound), quadrature=quadrature_error),
        leading_constant=total / math.factorial(b - 1),
        prime_bound=euler.prime_bound,
        peyre_alpha=alpha,
        assumptions=_base_assumptions(metric),
        warnings=tuple(warnings),
    )


def _prepare(pair: ToricPair) -> Tuple[PicData, ClemensComplex, ExponentReport]:
    pic = divisor_sequence(pair)
    if not pic.big:
        raise ErrorHelper.not_big(pair.name)
    obstruction = obstruction_check(pair)
    if obstruction.obstructed:
        raise ErrorHelper.invariant("no integral adelic point", pair=pair.name)
    complex_ = build_clemens(pair)
    return pic, complex_, compute_b(pair, pic, complex_)


def predict(pair: ToricPair, metric: Optional[MetricSpec] = None, config: Optional[RunConfig] = None) -> ThetaReport:
    """Sequential prediction; `PredictionService.predict` runs the per-face quadratures concurrently"""
    config = config or RunConfig()
    metric = metric or config.metric
    pic, complex_, exponent = _prepare(pair)
    logger.warning(PROJECTIVITY_ASSUMPTION, extra={"pair_name": pair.name})
    euler = finite_tamagawa(pair, config.prime_bound)
    residues = {face: residue_measure(pair, face, metric, config.quadrature) for face in theta_faces(complex_)}
    return assemble_theta(pair, metric, pic, exponent, euler, residues)


def verify(pair: ToricPair, theta: ThetaReport, census: CensusResult, tolerances: Optional[Tolerances] = None) -> Verdict:
    """Exponent selection and leading-coefficient agreement of the census with the prediction"""
    tolerances = tolerances or Tolerances()
    exponent = theta.exponent
    fit = fit_leading(census, exponent.b, candidates=sorted({exponent.b_pole, exponent.b_theorem}))
    predicted = theta.leading_constant
    relative = abs(fit.coefficient - predicted) / predicted

    checks = [
        CheckResult(name="theta_positive", passed=theta.theta_total > 0, detail=f"theta = {theta.theta_total:.6g}"),
        CheckResult(
            name="leading_coefficient",
            passed=relative <= tolerances.theta_rel + 1e-9,
            detail=f"fit {fit.coefficient:.6g} vs predicted {predicted:.6g} (relative error {relative:.3%})",
        ),
    ]
    exponent_ok = fit.best_b == exponent.b
    checks.append(CheckResult(
        name="exponent",
        passed=exponent_ok or not tolerances.exponent_required,
        detail=f"empirical b' = {fit.best_b}, predicted b = {exponent.b}",
    ))
    if fit.extra_power_criterion is not None and exponent.b in fit.criteria:
        gain = fit.criteria[exponent.b] - fit.extra_power_criterion
        checks.append(CheckResult(
            name="extra_log_power",
            passed=True,
            detail=f"b + 1 = {exponent.b + 1} changes the criterion by {gain:.3g} on B >= {fit.window_start:.6g}",
        ))
    if not exponent.consistent:
        agrees_with = "b_pole" if fit.best_b == exponent.b_pole else "b_theorem" if fit.best_b == exponent.b_theorem else "neither"
        checks.append(CheckResult(
            name="exponent_disagreement",
            passed=True,
            detail=f"b_pole = {exponent.b_pole}, b_theorem = {exponent.b_theorem}; census agrees with {agrees_with}",
        ))

    return Verdict(
        pair_name=pair.name,
        passed=all(c.passed for c in checks),
        checks=tuple(checks),
        empirical_b=fit.best_b,
        relative_error=relative,
        fit=fit,
        predicted_coefficient=predicted,
    )


def _agrees(exact: float, oracle: float, stderr: float, rel: float = 0.02) -> bool:
    return abs(exact - oracle) <= max(rel * abs(exact), 3.0 * stderr)


class PredictionService:
    """Async facade running the exact pipeline and its oracles for one run configuration"""

    def __init__(self, config: Optional[RunConfig] = None, workers: Optional[int] = None, cache_dir: Optional[str] = None):
        self.config = config or RunConfig()
        self.workers = max(1, workers) if workers else None
        self.cache_dir = cache_dir

    async def analyze(self, pair: ToricPair) -> AnalysisReport:
        log_service_call(logger, "analyze", pair_name=pair.name)
        return await asyncio.to_thread(analyze, pair)

    async def predict(self, pair: ToricPair) -> ThetaReport:
        log_service_call(logger, "predict", {"metric": self.config.metric.describe()}, pair.name)
        metric = self.config.metric
        pic, complex_, exponent = await asyncio.to_thread(_prepare, pair)
        logger.warning(PROJECTIVITY_ASSUMPTION, extra={"pair_name": pair.name})
        faces = theta_faces(complex_)
        euler_task = asyncio.to_thread(finite_tamagawa, pair, self.config.prime_bound)
        residue_tasks = [
            asyncio.to_thread(residue_measure, pair, face, metric, self.config.quadrature) for face in faces
        ]
        euler, *residues = await asyncio.gather(euler_task, *residue_tasks)
        return assemble_theta(pair, metric, pic, exponent, euler, dict(zip(faces, residues)))

    async def count(self, pair: ToricPair, grid: Optional[Sequence] = None) -> CensusResult:
        grid = list(grid if grid is not None else self.config.census.grid)
        if not grid:
            raise ErrorHelper.config_invalid("census grid is empty")
        metric = self.config.metric
        log_service_call(logger, "count", {"points": len(grid), "workers": self.workers}, pair.name)
        key = census_cache_key(pair.model_dump_json(), metric.describe(), grid)
        cached = await load_census_cache(key, self.cache_dir)
        if cached is not None:
            logger.info("Census served from cache", extra={"pair_name": pair.name})
            return cached

        parts = self.workers or self.config.census.threads or default_workers(max(Fraction(b) for b in grid))
        if parts > 1:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=parts) as pool:
                results = await asyncio.gather(*[
                    loop.run_in_executor(pool, count_partition_payload, payload)
                    for payload in partition_payloads(pair, metric, grid, parts)
                ])
        else:
            results = [await asyncio.to_thread(count_partition, pair, metric, grid)]
        census = merge_partitions(pair, metric, grid, results)
        await save_census_cache(key, census, self.cache_dir)
        return census

    async def verify(self, pair: ToricPair, grid: Optional[Sequence] = None) -> Tuple[ThetaReport, CensusResult, Verdict]:
        theta, census = await asyncio.gather(self.predict(pair), self.count(pair, grid))
        verdict = verify(pair, theta, census, self.config.tolerances)
        if not verdict.passed:
            logger.warning("Verification failed", extra={"pair_name": pair.name})
        return theta, census, verdict

    async def oracle(self, pair: ToricPair) -> OracleReport:
        """Independent Monte Carlo and counting oracles against the exact pipeline"""
        mc = self.config.mc
        if mc.seed is None:
            raise ErrorHelper.config_invalid("oracle runs need a seed")
        log_service_call(logger, "oracle", {"samples": mc.samples, "seed": mc.seed}, pair.name)
        pic, complex_, _ = await asyncio.to_thread(_prepare, pair)
        faces = theta_faces(complex_)
        comparisons: List[OracleComparison] = []

        for face in faces:
            comparisons.append(await asyncio.to_thread(self._chi_comparison, pair, face, pic))
        residues = await asyncio.gather(*[
            asyncio.to_thread(self._residue_comparison, pair, face) for face in faces
        ])
        comparisons.extend(residues)
        comparisons.extend(await asyncio.to_thread(self._density_comparisons, pair))
        if pair.is_rational_mode:
            alpha = peyre_alpha(pair, pic)
            quotient = chi_quotient(build_chi_query(pair, (), pic))
            comparisons.append(OracleComparison(
                name="peyre_alpha", exact=float(quotient), oracle=float(alpha), agrees=alpha == quotient,
                detail=f"{quotient} vs {alpha}",
            ))
        if pair.dim <= 2:
            comparisons.append(await asyncio.to_thread(self._census_comparison, pair))
        return OracleReport(pair_name=pair.name, seed=mc.seed, comparisons=tuple(comparisons))

    def _chi_comparison(self, pair: ToricPair, face: RaySet, pic: PicData) -> OracleComparison:
        query = build_chi_query(pair, face, pic)
        exact = chi_quotient(query)
        cone, reduced, dropped = quotient_cone(query)
        if cone is None:
            return OracleComparison(name=f"chi{list(face)}", exact=float(exact), oracle=float(exact), agrees=True,
                                    detail="trivial quotient")
        estimate = chi_monte_carlo_oracle(cone, reduced, self.config.mc.samples, self.config.mc.seed,
                                          blocks=self.config.mc.blocks)
        scale = 2.0 ** -dropped
        return OracleComparison(
            name=f"chi{list(face)}",
            exact=float(exact),
            oracle=estimate.estimate * scale,
            stderr=estimate.stderr * scale,
            agrees=_agrees(float(exact), estimate.estimate * scale, estimate.stderr * scale),
        )

    def _residue_comparison(self, pair: ToricPair, face: RaySet) -> OracleComparison:
        metric = self.config.metric
        exact = residue_measure(pair, face, metric, self.config.quadrature)
        tube = tube_oracle(pair, face, metric, TUBE_EPSILONS, self.config.mc)
        return OracleComparison(
            name=f"residue{list(face)}",
            exact=exact.value,
            oracle=tube.extrapolated,
            stderr=tube.stderr,
            agrees=_agrees(exact.value, tube.extrapolated, tube.stderr),
            detail=f"{tube.samples} samples, epsilons {list(tube.epsilons)}",
        )

    def _density_comparisons(self, pair: ToricPair) -> List[OracleComparison]:
        rows = []
        ones = [1] * len(pair.kept)
        for p in ORACLE_PRIMES:
            local = denef_local(pair, p, ones)
            for k in RESIDUE_LEVELS:
                if p ** (k * pair.dim) > RESIDUE_ENUMERATION_LIMIT:
                    continue
                brute = residue_class_density(pair, p, k)
                rows.append(OracleComparison(
                    name=f"denef_p{p}_k{k}",
                    exact=float(local.tamagawa_value),
                    oracle=float(brute),
                    agrees=local.tamagawa_value == brute,
                    detail=f"{local.tamagawa_value} vs #U(Z/{p}^{k}) density {brute}",
                ))
        return rows

    def _census_comparison(self, pair: ToricPair, bound: int = 10) -> OracleComparison:
        exact = merge_partitions(pair, self.config.metric, [bound],
                                 [count_partition(pair, self.config.metric, [bound])]).samples[0].count
        naive = naive_count(pair, bound, self.config.metric)
        return OracleComparison(name=f"census_B{bound}", exact=float(exact), oracle=float(naive), agrees=exact == naive)
