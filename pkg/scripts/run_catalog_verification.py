"""
Script to run predict + census + verify over every big fixture in the bundled catalog
and print one summary line per fixture.
"""
import asyncio
import sys

from dotenv import load_dotenv

load_dotenv()

from app.commands.pipeline_commands import log_spaced_grid
from app.models.config import RunConfig
from app.repositories.fans import FanRepository
from app.services.divisor_service import check_big
from app.services.prediction_service import PredictionService
from app.utils.exceptions import ToricError
from app.utils.logger import setup_logging

BMAX = 10_000
POINTS = 8


async def main() -> int:
    setup_logging("WARNING")
    repo = FanRepository()
    service = PredictionService(RunConfig(prime_bound=20_000))
    grid = log_spaced_grid(BMAX, POINTS)
    failures = 0
    for name in repo.list_catalog():
        pair = repo.load_catalog_pair(name, require_big=False)
        if not check_big(pair).big:
            print(f"{name:28s} skipped (not big)")
            continue
        try:
            theta, census, verdict = await service.verify(pair, grid)
        except ToricError as e:
            failures += 1
            print(f"{name:28s} error {e.error_code.value}: {e.message}")
            continue
        status = "ok" if verdict.passed else "FAILED"
        failures += 0 if verdict.passed else 1
        print(
            f"{name:28s} {status:6s} b={theta.exponent.b} theta={theta.leading_constant:.6f} "
            f"fit={verdict.fit.coefficient:.6f} N({BMAX})={census.count_at(BMAX)}"
        )
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
