import json
import logging
import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from app.models.config import RunConfig
from app.utils.exceptions import ErrorHelper

# Load environment variables from .env file (for local runs)
BASEDIR = os.path.abspath(os.path.dirname(__file__))
load_dotenv()

logger = logging.getLogger(__name__)


class Settings(BaseModel):
    """Process-wide settings; every variable is optional"""
    log_level: str = Field(default="WARNING")
    cache_dir: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=1)


def get_settings() -> Settings:
    try:
        return Settings(
            log_level=os.getenv("TORIC_LOG_LEVEL", "WARNING"),
            cache_dir=os.getenv("TORIC_CACHE_DIR") or None,
            workers=int(os.getenv("TORIC_WORKERS")) if os.getenv("TORIC_WORKERS") else None,
        )
    except (ValueError, ValidationError) as e:
        raise ErrorHelper.config_invalid(f"invalid environment setting: {e}") from e


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """RunConfig from an optional JSON file with command-line overrides applied on top"""
    data: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise ErrorHelper.file_not_found(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ErrorHelper.config_invalid(f"config is not valid JSON: {e.msg}") from e
    data = _merge(data, overrides or {})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(x) for x in first.get("loc", ()))
        raise ErrorHelper.config_invalid(f"{location}: {first.get('msg')}") from e
