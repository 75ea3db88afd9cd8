import os
import json
from typing import Optional

from app.models.census import CensusResult
from app.utils.cache_keys import cache_filename
from app.utils.logger import get_logger

logger = get_logger(__name__)


async def load_census_cache(key: str, cache_dir: Optional[str]) -> Optional[CensusResult]:
    if not cache_dir:
        return None
    path = os.path.join(cache_dir, cache_filename(key))
    if not os.path.exists(path):
        return None
    try:
        with open(path, "r", encoding="utf-8") as f:
            return CensusResult.model_validate(json.load(f))
    except (json.JSONDecodeError, ValueError) as e:
        # Corrupt entries are recomputed
        logger.warning(f"Ignoring unreadable census cache {path}: {e}")
        return None


async def save_census_cache(key: str, census: CensusResult, cache_dir: Optional[str]) -> None:
    if not cache_dir:
        return
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, cache_filename(key))
    with open(path, "w", encoding="utf-8") as f:
        json.dump(census.model_dump(mode="json"), f, indent=2)
