"""
Tests for app/services/local_measure_service.py

Covers: denef_local, residue_class_density, valuation_shell_density,
euler_factor_polynomial, finite_tamagawa, residue_measure, tube_oracle
"""
import math
import warnings
from fractions import Fraction
from unittest.mock import patch

import pytest

from app.models.fan import ToricPair
from app.models.measures import MetricSpec, MonteCarloSpec, QuadratureSpec
from app.repositories.fans import FanRepository
from app.services.clemens_service import build_clemens
from app.services.local_measure_service import (
    IntegrationWarning,
    canonical_residue_volume,
    denef_local,
    euler_factor_polynomial,
    finite_tamagawa,
    residue_class_density,
    residue_measure,
    tube_oracle,
    valuation_shell_density,
)
from app.services.prediction_service import theta_faces
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ToricError

repo = FanRepository()


def _pair(name: str) -> ToricPair:
    return repo.load_catalog_pair(name, require_big=False)


class TestDenefLocal:

    def test_projective_line_at_two(self):
        local = denef_local(_pair("p1"), 2, [2, 2])
        assert local.value == Fraction(5, 3)
        assert local.tamagawa_value == Fraction(5, 6)

    @pytest.mark.parametrize("p", [2, 3, 5, 7])
    def test_affine_plane_has_unit_tamagawa_density(self, p):
        local = denef_local(_pair("p2_minus_line"), p, [1, 1])
        assert local.tamagawa_value == 1

    @pytest.mark.parametrize("name", ["p1", "p2", "p2_minus_line", "p1xp1_minus_fiber", "f1_minus_e"])
    @pytest.mark.parametrize("p", [2, 3])
    def test_matches_residue_class_enumeration(self, name, p):
        pair = _pair(name)
        local = denef_local(pair, p, [1] * len(pair.kept))
        assert local.tamagawa_value == residue_class_density(pair, p, 1)

    def test_fractional_weights_use_floats(self):
        local = denef_local(_pair("p2_minus_line"), 3, [Fraction(3, 2), 1])
        assert local.value is None
        assert local.tamagawa_float > 0

    def test_rejects_composite(self):
        with pytest.raises(ToricError) as e:
            denef_local(_pair("p1"), 4, [1, 1])
        assert e.value.error_code == ErrorCode.INVALID_PRIME

    def test_rejects_wrong_length(self):
        with pytest.raises(ToricError) as e:
            denef_local(_pair("p1"), 2, [1])
        assert e.value.error_code == ErrorCode.INVARIANT_VIOLATION


class TestResidueClassDensity:

    def test_affine_plane(self):
        assert residue_class_density(_pair("p2_minus_line"), 2, 2) == 1

    def test_projective_line(self):
        assert residue_class_density(_pair("p1"), 2, 1) == Fraction(3, 2)

    @pytest.mark.parametrize("name, p, k, expected", [
        ("p1", 2, 3, Fraction(3, 2)),
        ("p2", 2, 2, Fraction(7, 4)),
        ("p1xp1", 3, 2, Fraction(16, 9)),
        ("p1_minus_zero", 3, 3, Fraction(1)),
        ("p2_minus_two_lines", 2, 3, Fraction(1, 2)),
    ])
    def test_hand_counted_densities(self, name, p, k, expected):
        # #U(F_p) p^((k-1)d) points mod p^k on a smooth scheme
        assert residue_class_density(_pair(name), p, k) == expected

    @pytest.mark.parametrize("name", ["p1", "p2", "p2_minus_line", "p2_minus_two_lines", "p1xp1_minus_fiber", "f1", "f1_minus_e"])
    @pytest.mark.parametrize("p, k", [(2, 2), (2, 3), (3, 2), (3, 3)])
    def test_lifts_agree_with_stratum_formula(self, name, p, k):
        pair = _pair(name)
        local = denef_local(pair, p, [1] * len(pair.kept))
        assert residue_class_density(pair, p, k) == local.tamagawa_value

    def test_overlapping_charts_are_counted_once(self):
        # four charts of P1 x P1 cover 16 residues of each 2-adic chart
        total = residue_class_density(_pair("p1xp1"), 2, 2) * 16
        assert total == 36

    def test_too_large(self):
        with pytest.raises(ToricError):
            residue_class_density(_pair("p2"), 101, 2)

    def test_rejects_level_zero(self):
        with pytest.raises(ToricError) as e:
            residue_class_density(_pair("p2"), 2, 0)
        assert e.value.error_code == ErrorCode.INVARIANT_VIOLATION


class TestValuationShellDensity:

    def test_truncated_geometric_series(self):
        radius = 20
        shell = valuation_shell_density(_pair("p2_minus_line"), 2, [1, 1], radius)
        assert shell.exact == Fraction(1, 4) * (2 - Fraction(1, 2 ** radius)) ** 2

    def test_converges_at_fractional_weights(self):
        pair = _pair("p1_minus_zero")
        s = [Fraction(3, 2)]
        shell = valuation_shell_density(pair, 3, s, 40)
        assert shell.value == pytest.approx(denef_local(pair, 3, s).tamagawa_float, rel=1e-9)


class TestEulerProduct:

    def test_factor_polynomial_of_projective_line(self):
        assert euler_factor_polynomial(_pair("p1")) == ([1, 1], 1)

    def test_affine_plane_product_is_one(self):
        result = finite_tamagawa(_pair("p2_minus_line"), 100)
        assert result.value == pytest.approx(1.0)
        assert result.tail_bound == 0

    def test_projective_line_brackets_inverse_zeta_two(self):
        result = finite_tamagawa(_pair("p1"), 10_000)
        low, high = result.interval
        assert low <= 6 / math.pi ** 2 <= high
        assert result.second_order == -1

    def test_factors_kept_on_request(self):
        result = finite_tamagawa(_pair("p1"), 20, keep_factors=True)
        assert sorted(result.factors) == [2, 3, 5, 7, 11, 13, 17, 19]
        assert result.factors[2] == pytest.approx(math.log(1 - 1 / 4))


class TestResidueMeasure:

    @pytest.mark.parametrize("name, face, expected", [
        ("p1_minus_zero", (0,), 2.0),
        ("p2_minus_line", (2,), 8.0),
        ("p1xp1_minus_fiber", (0,), 8.0),
        ("p2", (), 12.0),
        ("p2_minus_two_lines", (0, 1), 4.0),
    ])
    def test_canonical_matches_closed_form(self, name, face, expected):
        pair = _pair(name)
        result = residue_measure(pair, face, MetricSpec.canonical(), QuadratureSpec())
        assert result.value == pytest.approx(expected, rel=1e-6)
        assert result.closed_form == canonical_residue_volume(pair, face) == expected

    def test_smoothed_is_positive(self):
        result = residue_measure(_pair("p2_minus_line"), (2,), MetricSpec.smoothed(4.0), QuadratureSpec())
        assert result.value > 0
        assert result.closed_form is None

    def test_smoothed_needs_convex_boundary_functions(self):
        with pytest.raises(ToricError) as e:
            residue_measure(_pair("f1_minus_e"), (1,), MetricSpec.smoothed(2.0), QuadratureSpec())
        assert e.value.error_code == ErrorCode.METRIC_NOT_SUPPORTED

    def test_face_without_cone(self):
        with pytest.raises(ToricError) as e:
            residue_measure(_pair("p1xp1_minus_two_fibers"), (0, 2), MetricSpec.canonical(), QuadratureSpec())
        assert e.value.error_code == ErrorCode.NO_CONE

    def test_subinterval_limit_reaches_scipy(self):
        with patch("app.services.local_measure_service.integrate.nquad", return_value=(1.0, 0.0)) as mocked:
            residue_measure(_pair("p2_minus_line"), (2,), MetricSpec.canonical(), QuadratureSpec(max_evals=50))
        assert mocked.call_args.kwargs["opts"]["limit"] == 50

    def test_max_evals_is_an_alias(self):
        assert QuadratureSpec(max_evals=75).subinterval_limit == 75
        assert QuadratureSpec(subinterval_limit=75) == QuadratureSpec(max_evals=75)

    def test_nonconvergence_is_reported(self):
        def failing(*args, **kwargs):
            warnings.warn("roundoff", IntegrationWarning)
            return 1.0, 1.0

        with patch("app.services.local_measure_service.integrate.nquad", side_effect=failing):
            with pytest.raises(ToricError) as e:
                residue_measure(_pair("p2_minus_line"), (2,), MetricSpec.canonical(), QuadratureSpec())
        assert e.value.error_code == ErrorCode.QUADRATURE_NONCONVERGENCE


class TestTubeOracle:

    def test_canonical_tube_matches_residue(self):
        mc = MonteCarloSpec(samples=40_000, seed=1, blocks=4)
        result = tube_oracle(_pair("p2_minus_line"), (2,), MetricSpec.canonical(), (0.04, 0.02, 0.01), mc)
        assert result.stderr > 0
        assert abs(result.extrapolated - 8.0) <= 5 * result.stderr

    def test_canonical_estimates_carry_sampling_error(self):
        pair = _pair("p1_minus_zero")
        first = tube_oracle(pair, (0,), MetricSpec.canonical(), (0.2, 0.1), MonteCarloSpec(samples=8_000, seed=5, blocks=4))
        second = tube_oracle(pair, (0,), MetricSpec.canonical(), (0.2, 0.1), MonteCarloSpec(samples=8_000, seed=6, blocks=4))
        assert all(s > 0 for s in first.stderrs)
        assert first.estimates != second.estimates

    @pytest.mark.parametrize("name", [
        "p1", "p1_minus_zero", "p2", "p2_minus_line", "p2_minus_two_lines",
        "p1xp1", "p1xp1_minus_fiber", "f1", "f1_minus_e",
    ])
    def test_every_catalog_face(self, name):
        pair = _pair(name)
        mc = MonteCarloSpec(samples=40_000, seed=11, blocks=4)
        for face in theta_faces(build_clemens(pair)):
            exact = residue_measure(pair, face, MetricSpec.canonical(), QuadratureSpec()).value
            tube = tube_oracle(pair, face, MetricSpec.canonical(), (0.3, 0.2, 0.1), mc)
            assert abs(tube.extrapolated - exact) <= max(5 * tube.stderr, 1e-9 * exact), face

    def test_same_seed_same_estimate(self):
        mc = MonteCarloSpec(samples=2_000, seed=9, blocks=2)
        first = tube_oracle(_pair("p2_minus_line"), (2,), MetricSpec.canonical(), (0.1, 0.05), mc)
        second = tube_oracle(_pair("p2_minus_line"), (2,), MetricSpec.canonical(), (0.1, 0.05), mc)
        assert first == second

    def test_needs_seed(self):
        with pytest.raises(ToricError) as e:
            tube_oracle(_pair("p2_minus_line"), (2,), MetricSpec.canonical(), (0.01,), MonteCarloSpec())
        assert e.value.error_code == ErrorCode.CONFIG_INVALID
