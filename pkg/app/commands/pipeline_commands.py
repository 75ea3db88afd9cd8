"""
Handlers for analyze, predict, count, verify and oracle.

Each handler receives the parsed arguments and returns the process exit code.
"""
import argparse
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from app.commands.output import emit_json, emit_rows
from app.config import get_settings, load_run_config
from app.models.config import RunConfig
from app.models.fan import ToricPair
from app.repositories.fans import FanRepository
from app.services.prediction_service import PredictionService
from app.utils.error_codes import ErrorCode, get_exit_code
from app.utils.exceptions import ErrorHelper
from app.utils.logger import get_command_logger

logger = get_command_logger("pipeline")

fan_repo = FanRepository()

DEFAULT_GRID_POINTS = 12


def log_spaced_grid(bmax: float, points: int) -> List[Fraction]:
    """Integer bounds spaced evenly in log B from min(10, bmax) to bmax"""
    if bmax < 1 or points < 1:
        raise ErrorHelper.config_invalid("--bmax must be at least 1 and --points positive")
    low = min(10.0, bmax)
    values = np.unique(np.round(np.logspace(math.log10(low), math.log10(bmax), points)).astype(np.int64))
    return [Fraction(int(v)) for v in values]


def parse_grid(args: argparse.Namespace) -> Optional[List[Fraction]]:
    grid_text = getattr(args, "grid", None)
    bmax = getattr(args, "bmax", None)
    if grid_text:
        try:
            return [Fraction(x.strip()) for x in grid_text.split(",") if x.strip()]
        except (ValueError, ZeroDivisionError) as e:
            raise ErrorHelper.config_invalid(f"--grid: {e}") from e
    if bmax is not None:
        return log_spaced_grid(float(bmax), getattr(args, "points", None) or DEFAULT_GRID_POINTS)
    return None


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file values with command-line flags layered on top"""
    overrides: Dict[str, Any] = {"fan": getattr(args, "fan", None), "prime_bound": getattr(args, "prime_bound", None)}
    metric = getattr(args, "metric", None)
    if metric:
        overrides["metric"] = {"mode": metric.upper(), "k": getattr(args, "k", None)}
    mc = {"samples": getattr(args, "samples", None), "seed": getattr(args, "seed", None)}
    if any(v is not None for v in mc.values()):
        overrides["mc"] = mc
    threads = getattr(args, "workers", None)
    if threads:
        overrides["census"] = {"threads": threads}
    if getattr(args, "tolerance", None) is not None:
        overrides["tolerances"] = {"theta_rel": args.tolerance}
    config = load_run_config(getattr(args, "config", None), overrides)
    grid = parse_grid(args)
    return config.with_grid(grid) if grid is not None else config


def _load_pair(config: RunConfig, require_big: bool = True) -> ToricPair:
    if not config.fan:
        raise ErrorHelper.config_invalid("no fan given (--fan or the config file's 'fan')")
    return fan_repo.resolve_fan(config.fan, require_big=require_big)


def _service(config: RunConfig) -> PredictionService:
    settings = get_settings()
    return PredictionService(config, workers=config.census.threads or settings.workers, cache_dir=settings.cache_dir)


async def handle_analyze(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    pair = _load_pair(config, require_big=False)
    report = await _service(config).analyze(pair)
    emit_json(report)
    return 0


async def handle_predict(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    pair = _load_pair(config)
    report = await _service(config).predict(pair)
    emit_json(report)
    return 0


async def handle_count(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    pair = _load_pair(config)
    census = await _service(config).count(pair)
    emit_rows(census.csv_rows())
    return 0


async def handle_verify(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    pair = _load_pair(config)
    theta, census, verdict = await _service(config).verify(pair)
    emit_json({
        "verdict": verdict.model_dump(mode="json"),
        "theta": theta.model_dump(mode="json", by_alias=True),
        "census": [row for row in census.csv_rows()],
    })
    if not verdict.passed:
        logger.warning(f"Verification failed for {pair.name}", extra={"pair_name": pair.name})
        return get_exit_code(ErrorCode.VERIFICATION_FAILED)
    return 0


async def handle_oracle(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    pair = _load_pair(config)
    report = await _service(config).oracle(pair)
    emit_json({"passed": report.passed, **report.model_dump(mode="json")})
    return 0 if report.passed else get_exit_code(ErrorCode.VERIFICATION_FAILED)
