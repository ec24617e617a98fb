"""
Command-line entry point: ``axivort run <config.json>`` and ``axivort list``.
"""
import argparse
import sys
from typing import List, Optional

from axivort.core.config import settings
from axivort.core.logging import logger, setup_logging
from axivort.services.run_service import run_service
from axivort.utils.exceptions import AxivortError, ConfigurationError

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_BOUND_FAILURE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Axisymmetric vortex engine and velocity-inequality harness",
    )
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment named in a JSON config")
    run.add_argument("config", help="path of the run configuration")
    run.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, default=None, help="corpus seed (overrides corpus_seed)")
    run.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging verbosity",
    )

    sub.add_parser("list", help="list registered experiments")
    return parser


def cmd_list() -> int:
    for name, description in run_service.list_experiments():
        print(f"{name:<20} {description}")
    return EXIT_PASS


def cmd_run(config: str, out: Optional[str], seed: Optional[int]) -> int:
    try:
        outcome = run_service.run(config, out_dir=out, seed=seed)
    except ConfigurationError as exc:
        logger.error(f"❌ Configuration error: {exc}")
        return EXIT_ERROR
    except AxivortError as exc:
        logger.error(f"❌ Run failed: {exc}")
        return EXIT_ERROR
    except OSError as exc:
        logger.error(f"❌ I/O error: {exc}")
        return EXIT_ERROR
    return EXIT_PASS if outcome.passed else EXIT_BOUND_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return cmd_list()
    setup_logging(args.log_level)
    return cmd_run(args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
