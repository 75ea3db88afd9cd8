"""
Tests for app/services/height_service.py

Covers: height, log_height_interval, compare_height, is_integral, anticanonical_height
"""
import math
import random
from fractions import Fraction

import pytest

from app.models.census import TorusPoint
from app.models.fan import ToricPair
from app.models.measures import MetricSpec
from app.repositories.fans import FanRepository
from app.services.height_service import (
    anticanonical_height,
    compare_height,
    height,
    is_integral,
    log_height,
    log_height_interval,
)
from app.services.lattice_service import dot

repo = FanRepository()


def _pair(name: str) -> ToricPair:
    return repo.load_catalog_pair(name, require_big=False)


def _point(*coords) -> TorusPoint:
    return TorusPoint.from_rationals([Fraction(c) for c in coords])


def _random_rational(rng: random.Random) -> Fraction:
    value = Fraction(rng.randint(1, 60), rng.randint(1, 60))
    return value if rng.random() < 0.5 else -value


class TestHeight:

    @pytest.mark.parametrize("x, expected", [(2, 4), (Fraction(3, 2), 9), (1, 1), (Fraction(-1, 5), 25)])
    def test_projective_line(self, x, expected):
        pair = _pair("p1")
        assert anticanonical_height(pair, _point(x)) == expected

    def test_returns_exact_fraction(self):
        value = anticanonical_height(_pair("p2"), _point(Fraction(2, 3), Fraction(5, 3)))
        assert isinstance(value, Fraction)
        assert value == 125

    def test_homogeneous_max_formula_on_projective_plane(self):
        rng = random.Random(5)
        pair = _pair("p2")
        for _ in range(25):
            a, b, c = (rng.randint(1, 40) * rng.choice((1, -1)) for _ in range(3))
            x = _point(Fraction(a, c), Fraction(b, c))
            reduced = [Fraction(a, c), Fraction(b, c)]
            common = 1
            for f in reduced:
                common = common * f.denominator // math.gcd(common, f.denominator)
            coords = [abs(int(f * common)) for f in reduced] + [common]
            assert anticanonical_height(pair, x) == max(coords) ** 3

    def test_affine_plane_height_is_square_of_max(self):
        assert anticanonical_height(_pair("p2_minus_line"), _point(2, 3)) == 9
        assert anticanonical_height(_pair("p2_minus_line"), _point(-7, 1)) == 49

    def test_product_formula_for_principal_divisors(self):
        rng = random.Random(17)
        fan = _pair("p2").fan
        for _ in range(30):
            m = (rng.randint(-3, 3), rng.randint(-3, 3))
            s = [dot(m, ray) for ray in fan.rays]
            x = _point(_random_rational(rng), _random_rational(rng))
            assert height(fan, x, s) == 1

    def test_smoothed_height_dominates_canonical(self):
        pair = _pair("p2")
        x = _point(Fraction(4, 9), Fraction(-2, 3))
        canonical = float(anticanonical_height(pair, x))
        smoothed = anticanonical_height(pair, x, MetricSpec.smoothed(3.0))
        assert smoothed >= canonical


class TestIntervals:

    def test_enclosure_contains_float_value(self):
        pair = _pair("p2")
        x = _point(Fraction(4, 9), Fraction(-2, 3))
        metric = MetricSpec.smoothed(2.0)
        value = log_height(pair.fan, x, pair.rho, metric)
        enclosure = log_height_interval(pair.fan, x, pair.rho, metric)
        assert enclosure.a <= value + 1e-12
        assert enclosure.b >= value - 1e-12

    def test_compare_at_exact_boundary(self):
        pair = _pair("p1")
        x = _point(2)
        assert compare_height(pair.fan, x, pair.rho, MetricSpec.canonical(), Fraction(4)) == 0
        assert compare_height(pair.fan, x, pair.rho, MetricSpec.canonical(), Fraction(5)) == -1
        assert compare_height(pair.fan, x, pair.rho, MetricSpec.canonical(), Fraction(3)) == 1

    def test_compare_smoothed(self):
        pair = _pair("p1")
        x = _point(2)
        assert compare_height(pair.fan, x, pair.rho, MetricSpec.smoothed(4.0), Fraction(1000)) == -1
        assert compare_height(pair.fan, x, pair.rho, MetricSpec.smoothed(4.0), Fraction(4)) == 1


class TestIntegrality:

    def test_affine_plane_needs_integers(self):
        pair = _pair("p2_minus_line")
        assert is_integral(_point(2, -3), pair)
        assert not is_integral(_point(Fraction(1, 2), 1), pair)

    def test_punctured_line_needs_unit_fractions(self):
        pair = _pair("p1_minus_zero")
        assert is_integral(_point(Fraction(-1, 6)), pair)
        assert not is_integral(_point(2), pair)

    def test_rational_mode_accepts_everything(self):
        assert is_integral(_point(Fraction(7, 3)), _pair("p1"))
