"""
Tests for app/services/fan_service.py

Covers: validate, stratum_point_count, variety_point_count (against homogeneous coordinates), star_fan
"""
from itertools import combinations, product

import pytest

from app.models.fan import Fan
from app.repositories.fans import FanRepository
from app.services.fan_service import (
    cone_of_rayset,
    star_fan,
    stratum_point_count,
    validate,
    variety_point_count,
)
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ToricError

repo = FanRepository()

CATALOG = [
    "p1", "p2", "p1xp1", "f1", "p1_minus_zero", "p2_minus_line", "p2_minus_two_lines",
    "p1xp1_minus_fiber", "p1xp1_minus_two_fibers", "f1_minus_e",
]


def _fan(name: str) -> Fan:
    return repo.load_catalog_pair(name, require_big=False).fan


class TestValidate:

    @pytest.mark.parametrize("name", ["p1", "p2", "p1xp1", "f1"])
    def test_catalog_fans_are_smooth_and_complete(self, name):
        diagnostics = validate(_fan(name))
        assert diagnostics.ok

    def test_missing_cone_is_not_complete(self):
        fan = Fan.create(dim=2, rays=[[1, 0], [0, 1], [-1, -1]], maximal_cones=[[0, 1], [1, 2]])
        diagnostics = validate(fan)
        assert diagnostics.smooth
        assert not diagnostics.complete

    def test_singular_cone_is_not_smooth(self):
        fan = Fan.create(dim=2, rays=[[1, 0], [1, 2], [-1, -1]], maximal_cones=[[0, 1], [1, 2], [0, 2]])
        diagnostics = validate(fan)
        assert not diagnostics.smooth
        assert any("not smooth" in m for m in diagnostics.messages)

    def test_non_primitive_ray_reported_with_location(self):
        fan = Fan.create(dim=1, rays=[[2], [-1]], maximal_cones=[[0], [1]])
        diagnostics = validate(fan)
        assert "rays[0]: ray not primitive" in diagnostics.messages


class TestPointCounts:

    def test_projective_plane_over_f2(self):
        assert variety_point_count(_fan("p2"), 2) == 7

    def test_hirzebruch_surface_over_f2(self):
        assert variety_point_count(_fan("f1"), 2) == 9

    def test_affine_plane_subfan(self):
        assert variety_point_count(_fan("p2"), 5, allowed=[0, 1]) == 25

    @pytest.mark.parametrize("name", ["p1", "p2", "p1xp1", "f1"])
    @pytest.mark.parametrize("q", [2, 3, 4, 5])
    def test_orbit_decomposition(self, name, q):
        fan = _fan(name)
        total = sum(
            stratum_point_count(fan, subset, q)
            for k in range(fan.ray_count + 1)
            for subset in combinations(range(fan.ray_count), k)
        )
        assert total == variety_point_count(fan, q)

    @pytest.mark.parametrize("name", CATALOG)
    @pytest.mark.parametrize("p", [2, 3])
    def test_homogeneous_coordinates_over_small_fields(self, name, p):
        pair = repo.load_catalog_pair(name, require_big=False)
        fan = pair.fan
        # y lies outside the irrelevant locus when its zero coordinates span a cone
        cones = [set(c) for c in fan.cones]
        zero_sets = [
            {i for i, y in enumerate(ys) if y == 0}
            for ys in product(range(p), repeat=fan.ray_count)
        ]
        on_x = [z for z in zero_sets if any(z <= c for c in cones)]
        on_u = [z for z in on_x if z <= set(pair.kept)]
        torus = (p - 1) ** (fan.ray_count - fan.dim)
        assert len(on_x) % torus == 0 and len(on_u) % torus == 0
        assert len(on_x) // torus == variety_point_count(fan, p)
        assert len(on_u) // torus == variety_point_count(fan, p, pair.kept)


    def test_stratum_without_cone_is_empty(self):
        fan = _fan("p1xp1")
        assert cone_of_rayset(fan, [0, 2]) is None
        assert stratum_point_count(fan, [0, 2], 3) == 0

    def test_invalid_prime_power(self):
        with pytest.raises(ToricError) as e:
            variety_point_count(_fan("p2"), 6)
        assert e.value.error_code == ErrorCode.INVALID_PRIME


class TestStarFan:

    def test_ray_of_projective_plane_gives_projective_line(self):
        star = star_fan(_fan("p2"), [0])
        assert star.dim == 1
        assert set(star.rays) == {(1,), (-1,)}
        assert validate(star).ok

    def test_fiber_of_product(self):
        star = star_fan(_fan("p1xp1"), [0])
        assert star.dim == 1
        assert set(star.rays) == {(1,), (-1,)}

    def test_empty_set_is_identity(self):
        fan = _fan("p2")
        assert star_fan(fan, []) == fan

    def test_iterated_strata_compose(self):
        fan = _fan("p2")
        once = star_fan(fan, [0])
        twice = star_fan(once, [0])
        direct = star_fan(fan, [0, 1])
        assert twice.dim == direct.dim == 0

    def test_no_cone(self):
        with pytest.raises(ToricError) as e:
            star_fan(_fan("p1xp1"), [0, 2])
        assert e.value.error_code == ErrorCode.NO_CONE
