import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from app.commands import compare_commands, run_commands, scenario_commands  # noqa: E402
from app.utils.errors import FrontLabError, RunHalted  # noqa: E402
from app.utils.logger import logger  # noqa: E402

EXIT_OK = 0
EXIT_UNEXPECTED = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontlab",
        description="Pseudo-spectral QG / 2D Euler simulator with front and modulus diagnostics",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Register verbs
    run_commands.register(subparsers)
    scenario_commands.register(subparsers)
    compare_commands.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except FrontLabError as e:
        # ConfigError -> 2, SolverAbort -> 3, FrontTrackingError -> 4
        logging.getLogger("main").error("%s: %s", type(e).__name__, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except RunHalted as e:
        logger.warning("run halted outside an experiment: %s", e)
        return EXIT_OK
    except Exception as e:
        logging.getLogger("main").error(f"Unhandled Exception: {e}", exc_info=True)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
