import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.models.fan import ToricPair
from app.repositories.fans.fan_mapper import dict_to_pair, pair_to_dict
from app.services.divisor_service import check_big
from app.services.fan_service import validate
from app.utils.error_codes import ErrorCode
from app.utils.exceptions import ErrorHelper, ToricError
from app.utils.logger import get_repository_logger

CATALOG_DIR = Path(__file__).resolve().parents[2] / "data" / "catalog"


class FanRepository:
    """Repository for fan files on disk and the bundled catalog."""

    def __init__(self, catalog_dir: Optional[Path] = None):
        self.catalog_dir = Path(catalog_dir) if catalog_dir is not None else CATALOG_DIR
        self.logger = get_repository_logger(__name__)

    # ─── Validation ───────────────────────────────────────────────────────────

    def _check_geometry(self, pair: ToricPair, require_big: bool) -> None:
        diagnostics = validate(pair.fan)
        for message in diagnostics.messages:
            location, _, text = message.partition(": ")
            if "not primitive" in message:
                index = int(location[len("rays["):-1])
                raise ErrorHelper.ray_not_primitive(index, pair.fan.rays[index])
            if "not smooth" in message or "more rays than" in message:
                raise ToricError(ErrorCode.FAN_NOT_SMOOTH, details={"location": location, "reason": text})
            if "not complete" in message:
                raise ToricError(ErrorCode.FAN_NOT_COMPLETE, details={"location": "cones"})
            raise ErrorHelper.schema_violation(text or message, location)
        if require_big and not check_big(pair).big:
            raise ErrorHelper.not_big(pair.name)

    # ─── Files ────────────────────────────────────────────────────────────────

    def parse_fan_file(self, path: str, require_big: bool = True) -> ToricPair:
        if not os.path.exists(path):
            raise ErrorHelper.file_not_found(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ErrorHelper.schema_violation(f"invalid JSON: {e.msg}", f"line {e.lineno}") from e
        pair = dict_to_pair(data, source=path)
        self._check_geometry(pair, require_big)
        self.logger.debug(f"Parsed fan file {path}", extra={"pair_name": pair.name})
        return pair

    def parse_fan_dict(self, data: Dict[str, Any], require_big: bool = True) -> ToricPair:
        pair = dict_to_pair(data)
        self._check_geometry(pair, require_big)
        return pair

    def save_pair(self, pair: ToricPair, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(pair_to_dict(pair), f, indent=2)
            f.write("\n")

    # ─── Catalog ──────────────────────────────────────────────────────────────

    def list_catalog(self) -> List[str]:
        if not self.catalog_dir.is_dir():
            return []
        return sorted(p.stem for p in self.catalog_dir.glob("*.json"))

    def catalog_path(self, name: str) -> Path:
        return self.catalog_dir / f"{Path(name).stem}.json"

    def load_catalog_pair(self, name: str, require_big: bool = True) -> ToricPair:
        path = self.catalog_path(name)
        if not path.exists():
            raise ErrorHelper.file_not_found(str(path))
        return self.parse_fan_file(str(path), require_big)

    def resolve_fan(self, reference: str, require_big: bool = True) -> ToricPair:
        """A path on disk, or else the name of a bundled fixture"""
        if os.path.exists(reference):
            return self.parse_fan_file(reference, require_big)
        if self.catalog_path(reference).exists():
            return self.load_catalog_pair(reference, require_big)
        raise ErrorHelper.file_not_found(reference)


def serialize_pair(pair: ToricPair) -> Dict[str, Any]:
    return pair_to_dict(pair)


def parse_fan_file(path: str, require_big: bool = True) -> ToricPair:
    return FanRepository().parse_fan_file(path, require_big)
