"""
Bounded-height census of integral points on the torus.

Points are walked multiplicatively: an integral point is a sign vector plus,
for each prime p, a valuation vector v_p in the kept support with
phi_rho(v_p) = k_p >= 1. The archimedean factor is at least 1, so the finite
part F = prod p^k_p bounds the walk.

When phi_rho is convex (always the case for the canonical metric on the
catalog pairs) it is the maximum of the characters m_sigma of the maximal
cones and is subadditive. The height of a partial point is then a lower
bound for every extension of it, the height grows with each added prime,
and the points whose last prime can carry no further factor are counted in
closed form per valuation vector by bisection over the prime table.
"""
import bisect
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import combinations, product
from math import gcd
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import isprime, sieve

from app.models.census import (
    CensusResult,
    CensusSample,
    EquidistributionCell,
    EquidistributionReport,
    FitResult,
    TorusPoint,
)
from app.models.fan import ToricPair
from app.models.measures import MetricSpec
from app.services.fan_service import variety_point_count
from app.services.height_service import compare_height, is_integral
from app.services.lattice_service import dot
from app.services.support_function_service import support_functions
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ErrorHelper, ToricError
from app.utils.logger import get_service_logger, log_performance, log_service_call

logger = get_service_logger("census")

BOUNDARY_TOLERANCE = 1e-9
# Subtrees are dealt to partitions at this depth
SPLIT_DEPTH = 2
# Below this bound a census runs in process
PARALLEL_MIN_BOUND = 10 ** 5
FIT_WINDOW_MIN = 10 ** 4
FIT_WINDOW_DECADES = 2

Valuation = Tuple[int, ...]
Visit = Callable[[int, List[float], List[Tuple[int, Valuation]]], None]


def _compositions(k: int, parts: int) -> Iterable[Tuple[int, ...]]:
    """Tuples of `parts` positive integers summing to k"""
    for cuts in combinations(range(1, k), parts - 1):
        bounds = (0,) + cuts + (k,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def valuation_shells(pair: ToricPair, max_k: int) -> Dict[int, Tuple[Valuation, ...]]:
    """Lattice points v of the kept support with phi_rho(v) = k, for 1 <= k <= max_k"""
    fan = pair.fan
    cones = [c for c in pair.kept_subfan() if c]
    shells: Dict[int, Tuple[Valuation, ...]] = {}
    for k in range(1, max_k + 1):
        vectors = []
        for cone in cones:
            if len(cone) > k:
                continue
            for coefficients in _compositions(k, len(cone)):
                vectors.append(tuple(
                    sum(c * fan.rays[a][i] for c, a in zip(coefficients, cone)) for i in range(fan.dim)
                ))
        shells[k] = tuple(vectors)
    return shells


def default_workers(bound) -> int:
    """Every core for a large census, a single process otherwise"""
    if Fraction(bound) < PARALLEL_MIN_BOUND:
        return 1
    return os.cpu_count() or 1


class CensusEnumerator:
    """Walks the integral points of height at most `limit`"""

    def __init__(self, pair: ToricPair, metric: MetricSpec, limit: int):
        support_functions(pair.fan).require_smoothable(metric)
        self.pair = pair
        self.metric = metric
        self.limit = max(int(limit), 0)
        self.log_limit = math.log(self.limit) if self.limit >= 1 else -math.inf
        self.dim = pair.dim
        self.rho = [float(r) for r in pair.rho]
        self.sf = support_functions(pair.fan)
        max_k = max(self.limit.bit_length(), 1)
        self.shells = valuation_shells(pair, max_k)
        self.primes = [int(p) for p in sieve.primerange(2, self.limit + 1)] if self.limit >= 2 else []
        self.logs = [math.log(p) for p in self.primes]
        self.nodes = 0

        self.characters = [self._character(cone) for cone in self.sf.maximal]
        self.convex = metric.is_canonical and all(
            dot(m, ray) <= r for m in self.characters for ray, r in zip(pair.fan.rays, pair.rho)
        )
        self.slopes = {
            v: tuple(dot(m, v) for m in self.characters) for shell in self.shells.values() for v in shell
        }
        # Slopes of two successive k = 1 steps; shells[2] vectors are among these sums
        self.pair_slopes = tuple(sorted({
            tuple(a + b for a, b in zip(self.slopes[v], self.slopes[w]))
            for v in self.shells[1] for w in self.shells[1]
        }))

    def _character(self, cone) -> Tuple[int, ...]:
        """m_sigma with <m_sigma, n_a> = rho_a on the rays of the cone"""
        rows = self.sf.dual_rows[cone]
        return tuple(
            sum(self.pair.rho[a] * rows[j][i] for j, a in enumerate(cone)) for i in range(self.dim)
        )

    def log_height(self, finite: int, weighted: List[float]) -> float:
        """log F + phi_rho(log_inf x), with log_inf x = -sum_p v_p log p"""
        u = [-w for w in weighted]
        return math.log(finite) + self.sf.phi_float(u, self.rho, self.metric)

    def point(self, chosen: Sequence[Tuple[int, Valuation]]) -> TorusPoint:
        return TorusPoint(signs=(1,) * self.dim, exponents={p: v for p, v in chosen})

    # ── generic walk ─────────────────────────────────────────────────────

    def walk(self, visit: Visit, partition: int = 0, parts: int = 1) -> None:
        """Visit every node; the top-level prime index modulo `parts` selects the partition"""
        if self.limit < 1:
            return
        weighted = [0.0] * self.dim
        chosen: List[Tuple[int, Valuation]] = []
        if partition == 0:
            self.nodes += 1
            visit(1, weighted, chosen)
        self._descend(0, 1, weighted, chosen, visit, partition, parts, top=True)

    def _descend(self, start, finite, weighted, chosen, visit, partition, parts, top=False):
        tol = BOUNDARY_TOLERANCE * max(1.0, self.log_limit)
        for j in range(start, len(self.primes)):
            p = self.primes[j]
            if finite * p > self.limit:
                break
            if top and j % parts != partition:
                continue
            log_p = self.logs[j]
            k, power = 1, p
            reachable = False
            while finite * power <= self.limit:
                for v in self.shells[k]:
                    step = [w + x * log_p for w, x in zip(weighted, v)]
                    if self.convex and self.log_height(finite * power, step) > self.log_limit + tol:
                        continue
                    reachable = True
                    chosen.append((p, v))
                    self.nodes += 1
                    visit(finite * power, step, chosen)
                    self._descend(j + 1, finite * power, step, chosen, visit, partition, parts)
                    chosen.pop()
                if self.convex and not reachable:
                    break
                k += 1
                power *= p
            # Heights only grow with the prime, so nothing beyond p fits either
            if self.convex and not reachable:
                break

    # ── counting walk (convex phi_rho) ───────────────────────────────────

    def census(self, grid: Sequence[Fraction], log_grid: Sequence[float],
               partition: int = 0, parts: int = 1) -> List[int]:
        """Histogram of first-admitting grid index over the points of this partition"""
        if not self.convex:
            raise ErrorHelper.invariant("closed-form census needs a convex phi_rho", pair=self.pair.name)
        hist = [0] * (len(grid) + 1)
        if self.limit < 1:
            return hist
        self._grid, self._log_grid, self._hist = grid, log_grid, hist
        self._partition, self._parts, self._task = partition, parts, 0
        offsets = [0.0] * len(self.characters)
        self._node(0, 0, 1, 0.0, offsets, [], partition == 0)
        return hist

    @staticmethod
    def _reach(c: float, offsets: Sequence[float], slopes: Sequence[int], k: int) -> float:
        """Largest t with k t + max_sigma(offset_sigma - t slope_sigma) <= c"""
        top = c / k
        for a, s in zip(offsets, slopes):
            rate = k - s
            if rate > 0:
                top = min(top, (c - a) / rate)
            elif a > c:
                return -math.inf
        return top

    def _node(self, depth, start, finite, log_f, offsets, chosen, owned):
        if owned:
            self.nodes += 1
            log_h = log_f + max(offsets)
            self._hist[_bin_index(self, self._grid, self._log_grid, log_h, chosen)] += 1

        c = self.log_limit - log_f
        tol = BOUNDARY_TOLERANCE * max(1.0, abs(c), max(abs(a) for a in offsets))
        reach = max((self._reach(c + tol, offsets, s, 2) for s in self.pair_slopes), default=-math.inf)
        end = bisect.bisect_right(self.logs, reach + tol, lo=start) if reach > -math.inf else start
        if owned:
            self._count_leaves(end, log_f, offsets, chosen)

        limit_tol = BOUNDARY_TOLERANCE * max(1.0, self.log_limit)
        for j in range(start, end):
            p, t = self.primes[j], self.logs[j]
            k, power = 1, p
            while finite * power <= self.limit:
                for v in self.shells[k]:
                    child = [a - t * s for a, s in zip(offsets, self.slopes[v])]
                    child_log_f = log_f + k * t
                    if child_log_f + max(child) > self.log_limit + limit_tol:
                        continue
                    child_owned = owned
                    if self._parts > 1 and depth < SPLIT_DEPTH:
                        child_owned = self._task % self._parts == self._partition
                        self._task += 1
                        if depth + 1 == SPLIT_DEPTH and not child_owned:
                            continue
                    chosen.append((p, v))
                    self._node(depth + 1, j + 1, finite * power, child_log_f, child, chosen, child_owned)
                    chosen.pop()
                k += 1
                power *= p

    def _count_leaves(self, leaf_start, log_f, offsets, chosen):
        """Points adding one prime p >= primes[leaf_start] at k = 1; none of them extends further"""
        if leaf_start >= len(self.primes):
            return
        scale = max(1.0, max(abs(a) for a in offsets))
        for v in self.shells[1]:
            slopes = self.slopes[v]
            top = self._log_grid[-1] - log_f
            if self._reach(top + BOUNDARY_TOLERANCE * max(scale, abs(top)), offsets, slopes, 1) < self.logs[leaf_start]:
                continue
            previous = 0
            for i, log_b in enumerate(self._log_grid):
                c = log_b - log_f
                tol = BOUNDARY_TOLERANCE * max(scale, abs(c))
                sure = self._reach(c - tol, offsets, slopes, 1)
                maybe = self._reach(c + tol, offsets, slopes, 1)
                sure_end = bisect.bisect_right(self.logs, sure, lo=leaf_start) if sure > -math.inf else leaf_start
                maybe_end = bisect.bisect_right(self.logs, maybe, lo=sure_end) if maybe > -math.inf else sure_end
                count = sure_end - leaf_start
                for j in range(sure_end, maybe_end):
                    point = self.point(list(chosen) + [(self.primes[j], v)])
                    if compare_height(self.pair.fan, point, self.pair.rho, self.metric, self._grid[i]) <= 0:
                        count += 1
                self._hist[i] += count - previous
                previous = count


def _bin_index(enumerator: CensusEnumerator, grid: Sequence[Fraction], log_grid: Sequence[float],
               log_h: float, chosen) -> int:
    """First grid index j with H <= B_j; len(grid) when the point exceeds every bound"""
    tol = BOUNDARY_TOLERANCE * max(1.0, abs(log_h))
    pos = bisect.bisect_left(log_grid, log_h - tol)
    while pos < len(grid) and log_grid[pos] <= log_h + tol:
        point = enumerator.point(chosen)
        if compare_height(enumerator.pair.fan, point, enumerator.pair.rho, enumerator.metric, grid[pos]) <= 0:
            break
        pos += 1
    return pos


def count_partition(pair: ToricPair, metric: MetricSpec, grid: Sequence[Fraction],
                    partition: int = 0, parts: int = 1) -> Tuple[List[int], int]:
    """Histogram of first-admitting grid index for one partition, and nodes visited"""
    grid = sorted(Fraction(b) for b in grid)
    if not grid:
        return [], 0
    enumerator = CensusEnumerator(pair, metric, math.floor(grid[-1]))
    log_grid = [math.log(b) if b > 0 else -math.inf for b in grid]
    signs = 2 ** pair.dim
    if enumerator.convex:
        hist = enumerator.census(grid, log_grid, partition, parts)
        return [c * signs for c in hist], enumerator.nodes

    hist = [0] * (len(grid) + 1)

    def visit(finite, weighted, chosen):
        log_h = enumerator.log_height(finite, weighted)
        hist[_bin_index(enumerator, grid, log_grid, log_h, chosen)] += signs

    enumerator.walk(visit, partition, parts)
    return hist, enumerator.nodes


def count_partition_payload(payload: Tuple[str, str, Tuple[str, ...], int, int]) -> Tuple[List[int], int]:
    pair_json, metric_json, grid, partition, parts = payload
    return count_partition(
        ToricPair.model_validate_json(pair_json),
        MetricSpec.model_validate_json(metric_json),
        [Fraction(b) for b in grid],
        partition,
        parts,
    )


def partition_payloads(pair: ToricPair, metric: MetricSpec, grid: Sequence[Fraction], parts: int):
    grid_strings = tuple(str(Fraction(b)) for b in grid)
    return [
        (pair.model_dump_json(), metric.model_dump_json(), grid_strings, i, parts)
        for i in range(parts)
    ]


def merge_partitions(pair: ToricPair, metric: MetricSpec, grid: Sequence[Fraction],
                     results: Sequence[Tuple[List[int], int]]) -> CensusResult:
    """Sum partition histograms in partition order and accumulate into N(B)"""
    grid = sorted(Fraction(b) for b in grid)
    hist = [0] * (len(grid) + 1)
    nodes = 0
    for part_hist, part_nodes in results:
        for i, c in enumerate(part_hist):
            hist[i] += c
        nodes += part_nodes
    samples, running = [], 0
    for bound, c in zip(grid, hist):
        running += c
        samples.append(CensusSample(bound=bound, count=running))
    return CensusResult(pair_name=pair.name, metric=metric.describe(), samples=tuple(samples), nodes_visited=nodes)


def run_census(pair: ToricPair, grid: Sequence, metric: Optional[MetricSpec] = None,
               workers: Optional[int] = None) -> CensusResult:
    """Exact N(B) for every B of the grid; counts do not depend on `workers` (default: `default_workers`)"""
    metric = metric or MetricSpec.canonical()
    grid = sorted({Fraction(b) for b in grid})
    if workers is None:
        workers = default_workers(grid[-1]) if grid else 1
    log_service_call(logger, "run_census", {"grid_max": str(grid[-1]) if grid else None, "workers": workers}, pair.name)
    started = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(count_partition_payload, partition_payloads(pair, metric, grid, workers)))
    else:
        results = [count_partition(pair, metric, grid)]
    census = merge_partitions(pair, metric, grid, results)
    log_performance(logger, "run_census", (time.perf_counter() - started) * 1000, pair.name)
    return census


def count_points(pair: ToricPair, bound, metric: Optional[MetricSpec] = None) -> CensusSample:
    bound = Fraction(bound)
    if bound < 1:
        return CensusSample(bound=bound, count=0)
    return run_census(pair, [bound], metric).samples[0]




# ── oracle ───────────────────────────────────────────────────────────────────

def naive_count(pair: ToricPair, bound, metric: Optional[MetricSpec] = None) -> int:
    """Brute force over numerators and denominators up to B^kappa, kappa the largest kept ray coordinate"""
    metric = metric or MetricSpec.canonical()
    bound = Fraction(bound)
    if bound < 1:
        return 0
    kappa = max((abs(x) for a in pair.kept for x in pair.fan.rays[a]), default=1)
    top = math.floor(float(bound) ** kappa + 1e-9)
    values = [Fraction(sign * a, b) for a in range(1, top + 1) for b in range(1, top + 1)
              if gcd(a, b) == 1 for sign in (1, -1)]
    count = 0
    for coords in product(values, repeat=pair.dim):
        point = TorusPoint.from_rationals(coords)
        if is_integral(point, pair) and compare_height(pair.fan, point, pair.rho, metric, bound) <= 0:
            count += 1
    return count


# ── asymptotics ──────────────────────────────────────────────────────────────

def _fit_window(samples: Sequence[CensusSample]) -> List[CensusSample]:
    """The upper decades of the grid, from min(10^4, Bmax / 100) on; at least four samples"""
    start = min(Fraction(FIT_WINDOW_MIN), samples[-1].bound / 10 ** FIT_WINDOW_DECADES)
    window = [s for s in samples if s.bound >= start]
    return window if len(window) >= 4 else list(samples[-4:])


def fit_leading(census: CensusResult, b: int, candidates: Optional[Sequence[int]] = None) -> FitResult:
    """
    Weighted least squares of N(B)/B on (log B)^(b-1), ..., 1 over the upper decades of the grid.

    Rows are weighted by sqrt(B / Bmax) since the error of N(B)/B shrinks like
    B^(-1/2). The best exponent is chosen by BIC among `candidates` (b itself
    when none are given); b + 1 is scored on the same window and reported as
    a diagnostic only.
    """
    samples = sorted((s for s in census.samples if s.bound > 1), key=lambda s: s.bound)
    if len(samples) < 4:
        raise ToricError(ErrorCode.DEGENERATE_GRID, details={"points": len(samples)})
    if samples[-1].bound < 10 * samples[0].bound:
        raise ToricError(ErrorCode.DEGENERATE_GRID, "Census grid must span at least a decade")
    window = _fit_window(samples)
    bounds = np.array([float(s.bound) for s in window])
    weights = np.sqrt(bounds / bounds[-1])
    y = np.array([s.count for s in window], dtype=float) / bounds
    logs = np.log(bounds)
    n = len(window)

    def solve(exponent: int):
        design = np.vstack([logs ** (exponent - 1 - i) for i in range(exponent)]).T * weights[:, None]
        coefficients, _, rank, _ = np.linalg.lstsq(design, y * weights, rcond=None)
        residuals = y * weights - design @ coefficients
        return design, coefficients, float(residuals @ residuals), rank

    floor = 1e-12 * n * float(np.mean((y * weights) ** 2) or 1.0)

    def criterion(exponent: int) -> float:
        _, _, rss, _ = solve(exponent)
        return n * math.log(max(rss, floor) / n) + exponent * math.log(n)

    candidates = sorted({c for c in (candidates or ()) if c >= 1} | {b})
    criteria = {e: criterion(e) for e in candidates if e < n}
    if not criteria:
        raise ToricError(ErrorCode.DEGENERATE_GRID, details={"points": n, "candidates": candidates})
    best = min(criteria, key=lambda e: (round(criteria[e], 9), e))

    design, coefficients, rss, rank = solve(b)
    if rank < b:
        raise ToricError(ErrorCode.DEGENERATE_GRID, "Design matrix is rank deficient")
    dof = n - b
    sigma2 = rss / dof if dof > 0 else 0.0
    covariance = sigma2 * np.linalg.inv(design.T @ design)
    return FitResult(
        b=b,
        coefficient=float(coefficients[0]),
        stderr=float(math.sqrt(max(covariance[0, 0], 0.0))),
        coefficients=tuple(float(c) for c in coefficients),
        residual_norm=math.sqrt(rss),
        best_b=best,
        criteria=criteria,
        window_start=float(window[0].bound),
        samples_used=n,
        extra_power_criterion=criterion(b + 1) if b + 1 < n else None,
    )


def equidistribution_histogram(pair: ToricPair, bound, p: int, metric: Optional[MetricSpec] = None) -> EquidistributionReport:
    """
    Sign orthants x (unit / non-unit at p) against the limiting local masses.

    Every signed point is materialized and its own height is compared with the
    bound, so the orthant shares are measured rather than assumed.
    """
    metric = metric or MetricSpec.canonical()
    bound = Fraction(bound)
    if p < 2 or not isprime(p):
        raise ErrorHelper.invalid_prime(p)
    d = pair.dim
    enumerator = CensusEnumerator(pair, metric, math.floor(bound))
    log_bound = math.log(bound) if bound > 0 else -math.inf
    orthants = list(product((1, -1), repeat=d))
    counts = {(signs, unit): 0 for signs in orthants for unit in (True, False)}
    zero = (0,) * d

    def visit(finite, weighted, chosen):
        log_h = enumerator.log_height(finite, weighted)
        if log_h > log_bound + BOUNDARY_TOLERANCE * max(1.0, abs(log_h)):
            return
        exponents = {q: v for q, v in chosen}
        for signs in orthants:
            point = TorusPoint(signs=signs, exponents=exponents)
            if compare_height(pair.fan, point, pair.rho, metric, bound) <= 0:
                counts[(point.signs, point.valuation(p) == zero)] += 1

    enumerator.walk(visit)
    total = sum(counts.values())
    if total == 0:
        raise ToricError(ErrorCode.EMPTY_CENSUS, details={"bound": str(bound)})

    unit_mass = Fraction((p - 1) ** d, variety_point_count(pair.fan, p, pair.kept))
    cells, chi_square = [], 0.0
    for signs in orthants:
        for unit in (True, False):
            predicted = float(unit_mass if unit else 1 - unit_mass) / len(orthants)
            observed = counts[(signs, unit)]
            expected = predicted * total
            if expected > 0:
                chi_square += (observed - expected) ** 2 / expected
            cells.append(EquidistributionCell(
                orthant=signs,
                unit_at_p=unit,
                observed=observed,
                empirical_mass=observed / total,
                predicted_mass=predicted,
            ))
    return EquidistributionReport(
        bound=bound,
        p=p,
        total=total,
        cells=tuple(cells),
        chi_square=chi_square,
        degrees_of_freedom=len(cells) - 1,
    )
