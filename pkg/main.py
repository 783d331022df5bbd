import argparse
import argcomplete
import logging
import sys
from pathlib import Path

from src.cli import run
from src.conf.config import settings
from src.domain.errors import CheckFailure, NeutralTwistorError
from src.io.config_loader import load_config
from src.io.storage import ResultsStore, write_report

COMMAND_HELP = {
    "so-check": "Check one matrix for SO(2n, 2n) membership and the P / P^x determinants.",
    "group-sample": "Sample the W-preserving families and their products.",
    "structure-check": "Check nilpotent and paracomplex invariants on random admissible frames.",
    "factorize": "Factor nabla J = alpha (x) N for a connection form.",
    "walker-check": "Check that a light-like distribution is parallel (Walker).",
    "norm": "Square norm of nabla J and the isotropic paraKahler flag.",
    "flat-gen": "Build a flat connection family and certify it.",
    "pair-gen": "Build connections with both time-like sections fully light-like.",
    "classify": "Classify a connection form into branch A or B.",
    "gauss-verify": "Conformal Gauss map of a time-like minimal surface and its lifts.",
}


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="NeutralTwistor: checks on twistor structures of neutral vector bundles."
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Enable debug logging for troubleshooting.",
    )

    subparsers = parser.add_subparsers(
        dest="command", required=True, help="Command to execute"
    )

    for command, help_text in COMMAND_HELP.items():
        sub = subparsers.add_parser(command, help=help_text)
        sub.add_argument(
            "--config",
            required=True,
            type=Path,
            help="Path to the JSON run configuration (Required).",
        )
        sub.add_argument(
            "--out",
            type=Path,
            default=None,
            help="Write the report here instead of stdout.",
        )
        sub.add_argument(
            "--seed",
            type=int,
            default=None,
            help="Override the seed of the configuration.",
        )
        sub.add_argument(
            "--tol",
            type=float,
            default=None,
            help="Override the tolerance of the configuration.",
        )
        sub.add_argument(
            "--results-csv",
            type=Path,
            default=settings.RESULTS_CSV,
            help="Append a summary row to this CSV (default: NT_RESULTS_CSV).",
        )
        sub.add_argument(
            "--workers",
            type=int,
            default=settings.WORKERS,
            help=f"Number of concurrent worker threads (default: {settings.WORKERS}).",
        )

    argcomplete.autocomplete(parser)
    return parser.parse_args(argv)


def setup_logging(verbose: bool) -> None:
    # Setup colored logging
    class ColoredFormatter(logging.Formatter):
        """Custom formatter with colors for different log levels."""

        COLORS = {
            "DEBUG": "\033[36m",  # Cyan
            "INFO": "\033[32m",  # Green
            "WARNING": "\033[33m",  # Yellow
            "ERROR": "\033[31m",  # Red
            "CRITICAL": "\033[35m",  # Magenta
        }
        RESET = "\033[0m"

        def format(self, record):
            color = self.COLORS.get(record.levelname, self.RESET)
            record.levelname = f"{color}{record.levelname}{self.RESET}"
            record.name = f"\033[34m{record.name}{self.RESET}"  # Blue for logger name
            return super().format(record)

    # Reports go to stdout, logs to stderr
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(ColoredFormatter("%(levelname)s %(name)s: %(message)s"))

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    root_logger.addHandler(handler)


def main(argv=None) -> int:
    args = parse_args(argv)
    setup_logging(args.verbose)
    logger = logging.getLogger("main")

    try:
        config = load_config(args.config, args.command, args.seed, args.tol)
        report = run(config, workers=args.workers)
        payload = write_report(report, args.out)
        if args.out is None:
            sys.stdout.buffer.write(payload)
            sys.stdout.flush()
        if args.results_csv:
            ResultsStore(Path(args.results_csv)).record(report, config.seed)
        if not report.passed:
            raise CheckFailure(f"failing stages: {', '.join(report.failing_stages())}")
    except NeutralTwistorError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
