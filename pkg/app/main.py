"""
Command-line entry point: toric integral-point predictions, censuses and checks.

    python -m app.main predict --fan p2_minus_line
    python -m app.main count --fan p1_minus_zero --grid 10,100,1000
"""
import argparse
import asyncio
import sys
from typing import List, Optional

from dotenv import load_dotenv
load_dotenv()

from app.commands import HANDLERS
from app.commands.output import emit_error
from app.config import get_settings
from app.utils.error_codes import ErrorCode, get_exit_code
from app.utils.exceptions import ToricError
from app.utils.logger import get_command_logger, log_error_with_context, setup_logging

logger = get_command_logger("main")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fan", help="fan JSON file or catalog name")
    parser.add_argument("--config", help="run configuration JSON")
    parser.add_argument("--metric", choices=["canonical", "smoothed"], type=str.lower)
    parser.add_argument("--k", type=float, help="smoothing parameter for --metric smoothed")
    parser.add_argument("--prime-bound", dest="prime_bound", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--log-level", dest="log_level")


def _add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", help="comma separated height bounds")
    parser.add_argument("--bmax", type=float, help="largest bound of a log-spaced grid")
    parser.add_argument("--points", type=int, help="number of log-spaced bounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toric-points", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="divisor classes, Clemens complex and obstruction checks")
    _add_common(analyze)

    predict = sub.add_parser("predict", help="predicted leading constant and exponent")
    _add_common(predict)

    count = sub.add_parser("count", help="exact census N(B) as CSV rows 'B,count'")
    _add_common(count)
    _add_grid(count)

    verify = sub.add_parser("verify", help="compare the prediction with a census fit")
    _add_common(verify)
    _add_grid(verify)
    verify.add_argument("--tolerance", type=float, help="relative tolerance on the leading constant")

    oracle = sub.add_parser("oracle", help="cross-check the pipeline pieces against independent oracles")
    _add_common(oracle)
    oracle.add_argument("--samples", type=int)
    oracle.add_argument("--seed", type=int)

    catalog = sub.add_parser("catalog", help="list the bundled fixtures")
    catalog.add_argument("name", nargs="?", help="print one fixture")
    catalog.add_argument("--log-level", dest="log_level")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
        setup_logging(args.log_level or settings.log_level)
        return asyncio.run(HANDLERS[args.command](args))
    except ToricError as e:
        logger.debug(f"{args.command} failed: {e.error_code.value}")
        emit_error(e)
        return get_exit_code(e.error_code)
    except Exception as e:
        log_error_with_context(logger, e, {"command": args.command})
        emit_error(ToricError(ErrorCode.INTERNAL_ERROR, str(e)))
        return get_exit_code(ErrorCode.INTERNAL_ERROR)


if __name__ == "__main__":
    sys.exit(main())
