"""
Tests for app/main.py, app/commands/ and app/config.py

Covers: subcommand dispatch, exit codes, CSV and JSON emission, grid parsing,
run-config layering and environment settings
"""
import argparse
import json
import os
from fractions import Fraction
from unittest.mock import AsyncMock, MagicMock, patch

import pytest

from app.commands.pipeline_commands import build_run_config, log_spaced_grid, parse_grid
from app.config import get_settings, load_run_config
from app.main import build_parser, main
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ToricError


def _stderr_codes(err: str):
    codes = []
    for line in err.splitlines():
        try:
            codes.append(json.loads(line).get("error_code"))
        except (json.JSONDecodeError, AttributeError):
            continue
    return codes


class TestGrid:

    def test_log_spaced(self):
        assert log_spaced_grid(1000, 4) == [Fraction(b) for b in (10, 46, 215, 1000)]

    def test_small_bmax_starts_at_bmax(self):
        assert log_spaced_grid(5, 3) == [Fraction(5)]

    def test_invalid_bmax(self):
        with pytest.raises(ToricError) as e:
            log_spaced_grid(0.5, 3)
        assert e.value.error_code == ErrorCode.CONFIG_INVALID

    def test_explicit_grid_wins(self):
        args = argparse.Namespace(grid="10, 5/2,100", bmax=1000, points=4)
        assert parse_grid(args) == [Fraction(10), Fraction(5, 2), Fraction(100)]

    def test_bad_grid(self):
        with pytest.raises(ToricError) as e:
            parse_grid(argparse.Namespace(grid="10,abc", bmax=None, points=None))
        assert e.value.error_code == ErrorCode.CONFIG_INVALID

    def test_no_grid(self):
        assert parse_grid(argparse.Namespace()) is None


class TestRunConfig:

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"fan": "p1", "prime_bound": 500, "census": {"grid": [10]}}))
        args = build_parser().parse_args(
            ["verify", "--config", str(path), "--fan", "p2_minus_line", "--grid", "100,10", "--tolerance", "0.2"]
        )
        config = build_run_config(args)
        assert config.fan == "p2_minus_line"
        assert config.prime_bound == 500
        assert config.census.grid == (Fraction(10), Fraction(100))
        assert config.tolerances.theta_rel == 0.2

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ToricError) as e:
            load_run_config(str(tmp_path / "absent.json"))
        assert e.value.error_code == ErrorCode.FILE_NOT_FOUND

    def test_invalid_config_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{oops")
        with pytest.raises(ToricError) as e:
            load_run_config(str(path))
        assert e.value.error_code == ErrorCode.CONFIG_INVALID

    def test_invalid_config_value(self):
        with pytest.raises(ToricError) as e:
            load_run_config(None, {"prime_bound": 1})
        assert e.value.error_code == ErrorCode.CONFIG_INVALID
        assert "prime_bound" in e.value.message


class TestSettings:

    def test_defaults(self):
        with patch.dict(os.environ, {}, clear=True):
            settings = get_settings()
        assert settings.log_level == "WARNING"
        assert settings.cache_dir is None
        assert settings.workers is None

    def test_from_environment(self):
        env = {"TORIC_LOG_LEVEL": "DEBUG", "TORIC_CACHE_DIR": "/tmp/toric", "TORIC_WORKERS": "4"}
        with patch.dict(os.environ, env, clear=True):
            settings = get_settings()
        assert settings.cache_dir == "/tmp/toric"
        assert settings.workers == 4

    def test_bad_worker_count(self):
        with patch.dict(os.environ, {"TORIC_WORKERS": "many"}, clear=True):
            with pytest.raises(ToricError) as e:
                get_settings()
        assert e.value.error_code == ErrorCode.CONFIG_INVALID


class TestMain:

    def test_catalog_listing(self, capsys):
        assert main(["catalog"]) == 0
        entries = json.loads(capsys.readouterr().out)["catalog"]
        assert len(entries) == 10
        by_name = {e["name"]: e for e in entries}
        assert by_name["p2_minus_line"]["big"] is True
        assert by_name["p1xp1_minus_two_fibers"]["big"] is False

    def test_catalog_single_fixture(self, capsys):
        assert main(["catalog", "p1_minus_zero"]) == 0
        assert json.loads(capsys.readouterr().out)["removed"] == [0]

    def test_count_prints_csv(self, capsys):
        with patch.dict(os.environ, {}, clear=True):
            assert main(["count", "--fan", "p1_minus_zero", "--grid", "10,100"]) == 0
        assert capsys.readouterr().out.splitlines() == ["10,20", "100,200"]

    def test_missing_fan(self, capsys):
        assert main(["predict"]) == 1
        assert "CONFIG_INVALID" in _stderr_codes(capsys.readouterr().err)

    def test_predict_not_big(self, capsys):
        assert main(["predict", "--fan", "p1xp1_minus_two_fibers"]) == 1
        assert "NOT_BIG" in _stderr_codes(capsys.readouterr().err)

    def test_analyze_accepts_not_big(self, capsys):
        assert main(["analyze", "--fan", "p1xp1_minus_two_fibers"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pic"]["big"] is False

    def test_verify_failure_exit_code(self, capsys):
        theta, census, verdict = MagicMock(), MagicMock(), MagicMock()
        theta.model_dump.return_value = {}
        verdict.model_dump.return_value = {"passed": False}
        verdict.passed = False
        census.csv_rows.return_value = []
        with patch(
            "app.commands.pipeline_commands.PredictionService.verify",
            new=AsyncMock(return_value=(theta, census, verdict)),
        ):
            code = main(["verify", "--fan", "p2_minus_line", "--grid", "10,100"])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["verdict"]["passed"] is False

    def test_unexpected_error_is_internal(self, capsys):
        with patch(
            "app.commands.pipeline_commands.PredictionService.analyze",
            new=AsyncMock(side_effect=RuntimeError("boom")),
        ):
            assert main(["analyze", "--fan", "p1"]) == 1
        assert "INTERNAL_ERROR" in _stderr_codes(capsys.readouterr().err)
