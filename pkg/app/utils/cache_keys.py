import hashlib
import json
from fractions import Fraction
from typing import Sequence

CENSUS_CACHE_PREFIX = "toric:census"


def census_cache_key(pair_json: str, metric: str, grid: Sequence[Fraction]) -> str:
    payload = json.dumps(
        {"pair": json.loads(pair_json), "metric": metric, "grid": [str(Fraction(b)) for b in sorted(grid)]},
        sort_keys=True,
    )
    digest = hashlib.sha256(payload.encode()).hexdigest()[:16]
    return f"{CENSUS_CACHE_PREFIX}:{digest}"


def cache_filename(key: str) -> str:
    return key.replace(":", "_") + ".json"
