"""
Tests for app/services/divisor_service.py and app/services/clemens_service.py

Covers: divisor_sequence, check_big, effective_cone, build_clemens, compute_b
"""
import pytest

from app.models.fan import ToricPair
from app.models.lattice import IntegerMatrix
from app.repositories.fans import FanRepository
from app.services.clemens_service import build_clemens, compute_b
from app.services.divisor_service import check_big, divisor_sequence, effective_cone
from app.services.lattice_service import cokernel_structure, dot

repo = FanRepository()


def _pair(name: str) -> ToricPair:
    return repo.load_catalog_pair(name, require_big=False)


class TestDivisorSequence:

    @pytest.mark.parametrize("name, pic_x, pic_u, r0", [
        ("p2", 1, 1, 0),
        ("p2_minus_line", 1, 0, 0),
        ("p2_minus_two_lines", 1, 0, 1),
        ("p1xp1", 2, 2, 0),
        ("p1xp1_minus_fiber", 2, 1, 0),
        ("p1_minus_zero", 1, 0, 0),
    ])
    def test_ranks(self, name, pic_x, pic_u, r0):
        pic = divisor_sequence(_pair(name))
        assert pic.rank_pic_X == pic_x
        assert pic.rank_pic_U == pic_u
        assert pic.units_rank_r0 == r0
        assert pic.pic_U_torsion == ()

    def test_rho_marks_kept_rays(self):
        pic = divisor_sequence(_pair("p2_minus_line"))
        assert pic.rho == (1, 1, 0)

    def test_rho_class_of_projective_plane(self):
        pic = divisor_sequence(_pair("p2"))
        assert abs(pic.rho_class[0]) == 3

    @pytest.mark.parametrize("name", [
        "p1", "p2", "p1xp1", "f1", "p1_minus_zero", "p2_minus_line", "p2_minus_two_lines",
        "p1xp1_minus_fiber", "p1xp1_minus_two_fibers", "f1_minus_e",
    ])
    def test_pic_is_torsion_free(self, name):
        pair = _pair(name)
        assert divisor_sequence(pair).pic_U_torsion == ()
        # Pic(U; A) for every face of the Clemens complex, including the empty one
        for face in [()] + list(build_clemens(pair).faces):
            rows = [pair.fan.rays[a] for a in tuple(pair.kept) + tuple(sorted(face))]
            if rows:
                assert cokernel_structure(IntegerMatrix.create(rows)).torsion == ()


class TestCheckBig:

    @pytest.mark.parametrize("name", ["p1", "p1_minus_zero", "p2_minus_line", "p2_minus_two_lines",
                                      "p1xp1_minus_fiber", "f1_minus_e"])
    def test_big_pairs_have_positive_lambda(self, name):
        pair = _pair(name)
        result = check_big(pair)
        assert result.big
        assert all(x > 0 for x in result.lambda_)
        for a, ray in enumerate(pair.fan.rays):
            assert result.lambda_[a] == pair.rho[a] + dot(ray, result.character)

    def test_two_fibers_of_one_ruling_are_not_big(self):
        result = check_big(_pair("p1xp1_minus_two_fibers"))
        assert not result.big
        assert result.lambda_ is None

    def test_effective_cone_of_projective_plane_is_a_ray(self):
        cone = effective_cone(_pair("p2"))
        assert cone.ambient_dim == 1
        assert len(cone.generators) == 1


class TestClemens:

    def test_rational_mode_is_empty(self):
        complex_ = build_clemens(_pair("p2"))
        assert complex_.faces == ()
        assert complex_.dim == -1
        assert complex_.archimedean_contribution == 0

    def test_two_lines_meeting_give_an_edge(self):
        complex_ = build_clemens(_pair("p2_minus_two_lines"))
        assert complex_.faces == ((0,), (1,), (0, 1))
        assert complex_.max_faces == ((0, 1),)
        assert complex_.dim == 1

    def test_disjoint_fibers_give_two_vertices(self):
        complex_ = build_clemens(_pair("p1xp1_minus_two_fibers"))
        assert complex_.max_faces == ((0,), (2,))
        assert complex_.dim == 0


class TestExponent:

    @pytest.mark.parametrize("name, b", [
        ("p1_minus_zero", 1),
        ("p2_minus_line", 1),
        ("p1xp1_minus_fiber", 2),
        ("p1", 1),
        ("p2", 1),
        ("p1xp1", 2),
    ])
    def test_consistent_pairs(self, name, b):
        report = compute_b(_pair(name))
        assert report.consistent
        assert report.b == b
        assert report.warnings == ()

    def test_nonconstant_unit_splits_the_exponents(self):
        report = compute_b(_pair("p2_minus_two_lines"))
        assert report.b_pole == 1
        assert report.b_theorem == 2
        assert not report.consistent
        assert report.units_rank_r0 == 1
        assert report.b == report.b_pole
        assert len(report.warnings) == 1
