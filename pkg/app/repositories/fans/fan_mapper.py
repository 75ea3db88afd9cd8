"""
Helpers for converting fan file JSON objects <-> ToricPair models.
"""
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.models.fan import Fan, ToricPair
from app.utils.exceptions import ErrorHelper

REQUIRED_FIELDS = ("name", "dim", "rays", "cones")


def _int_list(value: Any, location: str) -> List[int]:
    if not isinstance(value, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in value):
        raise ErrorHelper.schema_violation("expected a list of integers", location)
    return value


def dict_to_pair(data: Dict[str, Any], source: Optional[str] = None) -> ToricPair:
    """Build a ToricPair from the fan file object; structural problems carry their location"""
    if not isinstance(data, dict):
        raise ErrorHelper.schema_violation("fan file must hold a JSON object", source)
    for field in REQUIRED_FIELDS:
        if field not in data:
            raise ErrorHelper.schema_violation(f"missing field '{field}'", field)
    unknown = set(data) - set(REQUIRED_FIELDS) - {"removed", "labels", "description"}
    if unknown:
        raise ErrorHelper.schema_violation(f"unknown fields {sorted(unknown)}", sorted(unknown)[0])

    dim = data["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ErrorHelper.schema_violation("dim must be a positive integer", "dim")
    if not isinstance(data["rays"], list) or not data["rays"]:
        raise ErrorHelper.schema_violation("rays must be a nonempty list", "rays")
    rays = [_int_list(r, f"rays[{i}]") for i, r in enumerate(data["rays"])]
    for i, r in enumerate(rays):
        if len(r) != dim:
            raise ErrorHelper.schema_violation(f"ray has {len(r)} coordinates, expected {dim}", f"rays[{i}]")
    if not isinstance(data["cones"], list):
        raise ErrorHelper.schema_violation("cones must be a list", "cones")
    cones = [_int_list(c, f"cones[{i}]") for i, c in enumerate(data["cones"])]
    for i, c in enumerate(cones):
        if any(j < 0 or j >= len(rays) for j in c):
            raise ErrorHelper.schema_violation("ray index out of range", f"cones[{i}]")
    removed = _int_list(data.get("removed", []), "removed")
    for j in removed:
        if j < 0 or j >= len(rays):
            raise ErrorHelper.schema_violation("ray index out of range", "removed")
    labels = data.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(rays)):
        raise ErrorHelper.schema_violation("labels must name every ray", "labels")

    try:
        fan = Fan.create(dim=dim, rays=rays, maximal_cones=cones, labels=labels)
        return ToricPair(name=str(data["name"]), fan=fan, removed=tuple(removed))
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(x) for x in first.get("loc", ())) or source
        raise ErrorHelper.schema_violation(first.get("msg", str(e)), location) from e


def pair_to_dict(pair: ToricPair) -> Dict[str, Any]:
    """Inverse of dict_to_pair, listing maximal cones only"""
    data: Dict[str, Any] = {
        "name": pair.name,
        "dim": pair.dim,
        "rays": [list(r) for r in pair.fan.rays],
        "cones": [list(c) for c in pair.fan.maximal_cones],
        "removed": list(pair.removed),
    }
    if pair.fan.labels is not None:
        data["labels"] = list(pair.fan.labels)
    return data
