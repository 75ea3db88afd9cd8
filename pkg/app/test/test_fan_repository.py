"""
Tests for app/repositories/fans/fan_repository.py and fan_mapper.py

Covers: parse_fan_file, parse_fan_dict, serialize_pair, save_pair, list_catalog,
load_catalog_pair, resolve_fan; error codes and locations for malformed input
"""
import json

import pytest

from app.repositories.fans import FanRepository, dict_to_pair, pair_to_dict, parse_fan_file, serialize_pair
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ToricError

repo = FanRepository()

P2_MINUS_LINE = {
    "name": "affine_plane",
    "dim": 2,
    "rays": [[1, 0], [0, 1], [-1, -1]],
    "cones": [[0, 1], [1, 2], [0, 2]],
    "removed": [2],
}


def _write(tmp_path, data, name="fan.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


class TestParseFanFile:

    def test_valid_file(self, tmp_path):
        pair = parse_fan_file(_write(tmp_path, P2_MINUS_LINE))
        assert pair.name == "affine_plane"
        assert pair.removed == (2,)
        assert pair.kept == (0, 1)
        assert len(pair.fan.maximal_cones) == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ToricError) as e:
            parse_fan_file(str(tmp_path / "absent.json"))
        assert e.value.error_code == ErrorCode.FILE_NOT_FOUND

    def test_invalid_json(self, tmp_path):
        with pytest.raises(ToricError) as e:
            parse_fan_file(_write(tmp_path, "{not json"))
        assert e.value.error_code == ErrorCode.SCHEMA_VIOLATION

    def test_missing_field_has_location(self, tmp_path):
        data = {k: v for k, v in P2_MINUS_LINE.items() if k != "cones"}
        with pytest.raises(ToricError) as e:
            parse_fan_file(_write(tmp_path, data))
        assert e.value.error_code == ErrorCode.SCHEMA_VIOLATION
        assert e.value.details["location"] == "cones"

    def test_wrong_ray_length_has_location(self, tmp_path):
        data = dict(P2_MINUS_LINE, rays=[[1, 0], [0, 1], [-1]])
        with pytest.raises(ToricError) as e:
            parse_fan_file(_write(tmp_path, data))
        assert e.value.details["location"] == "rays[2]"

    def test_non_primitive_ray(self, tmp_path):
        data = dict(P2_MINUS_LINE, rays=[[2, 0], [0, 1], [-1, -1]])
        with pytest.raises(ToricError) as e:
            parse_fan_file(_write(tmp_path, data))
        assert e.value.error_code == ErrorCode.RAY_NOT_PRIMITIVE
        assert e.value.details["location"] == "rays[0]"

    def test_not_smooth(self, tmp_path):
        data = dict(P2_MINUS_LINE, rays=[[1, 0], [1, 2], [-1, -1]])
        with pytest.raises(ToricError) as e:
            parse_fan_file(_write(tmp_path, data))
        assert e.value.error_code == ErrorCode.FAN_NOT_SMOOTH

    def test_not_complete(self, tmp_path):
        data = dict(P2_MINUS_LINE, cones=[[0, 1], [1, 2]])
        with pytest.raises(ToricError) as e:
            parse_fan_file(_write(tmp_path, data))
        assert e.value.error_code == ErrorCode.FAN_NOT_COMPLETE

    def test_not_big(self, tmp_path):
        data = {
            "name": "two_fibers",
            "dim": 2,
            "rays": [[1, 0], [0, 1], [-1, 0], [0, -1]],
            "cones": [[0, 1], [1, 2], [2, 3], [0, 3]],
            "removed": [0, 2],
        }
        path = _write(tmp_path, data)
        with pytest.raises(ToricError) as e:
            parse_fan_file(path)
        assert e.value.error_code == ErrorCode.NOT_BIG
        assert parse_fan_file(path, require_big=False).removed == (0, 2)


class TestMapper:

    def test_unknown_field(self):
        with pytest.raises(ToricError) as e:
            dict_to_pair(dict(P2_MINUS_LINE, colour="blue"))
        assert e.value.details["location"] == "colour"

    def test_removed_out_of_range(self):
        with pytest.raises(ToricError) as e:
            dict_to_pair(dict(P2_MINUS_LINE, removed=[5]))
        assert e.value.details["location"] == "removed"

    def test_round_trip(self):
        pair = repo.parse_fan_dict(P2_MINUS_LINE)
        assert repo.parse_fan_dict(serialize_pair(pair)) == pair
        assert pair_to_dict(pair)["removed"] == [2]

    def test_save_pair(self, tmp_path):
        pair = repo.parse_fan_dict(P2_MINUS_LINE)
        path = str(tmp_path / "saved.json")
        repo.save_pair(pair, path)
        assert repo.parse_fan_file(path) == pair


class TestCatalog:

    def test_list_catalog(self):
        names = repo.list_catalog()
        assert len(names) == 10
        assert "p2_minus_line" in names
        assert names == sorted(names)

    @pytest.mark.parametrize("name", [
        "p1", "p1_minus_zero", "p2", "p2_minus_line", "p2_minus_two_lines",
        "p1xp1", "p1xp1_minus_fiber", "f1", "f1_minus_e",
    ])
    def test_big_fixtures_load(self, name):
        assert repo.load_catalog_pair(name).name == name

    def test_resolve_by_name_or_path(self, tmp_path):
        by_name = repo.resolve_fan("p2_minus_line")
        by_path = repo.resolve_fan(str(repo.catalog_path("p2_minus_line")))
        assert by_name == by_path

    def test_resolve_unknown(self):
        with pytest.raises(ToricError) as e:
            repo.resolve_fan("no_such_fan")
        assert e.value.error_code == ErrorCode.FILE_NOT_FOUND

    def test_empty_catalog_directory(self, tmp_path):
        assert FanRepository(catalog_dir=tmp_path / "missing").list_catalog() == []
