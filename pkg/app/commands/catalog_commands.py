import argparse

from app.commands.output import emit_json
from app.repositories.fans import FanRepository, serialize_pair
from app.services.divisor_service import check_big

fan_repo = FanRepository()


async def handle_catalog(args: argparse.Namespace) -> int:
    """List the bundled fixtures with their removed divisors and bigness"""
    if getattr(args, "name", None):
        pair = fan_repo.load_catalog_pair(args.name, require_big=False)
        emit_json(serialize_pair(pair))
        return 0
    entries = []
    for name in fan_repo.list_catalog():
        pair = fan_repo.load_catalog_pair(name, require_big=False)
        entries.append({
            "name": name,
            "dim": pair.dim,
            "removed": list(pair.summary()["removed"]),
            "big": check_big(pair).big,
            "path": str(fan_repo.catalog_path(name)),
        })
    emit_json({"catalog": entries})
    return 0
