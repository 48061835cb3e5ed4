"""
Command-line entry point

Parses the command, configures logging and kernel threads, and routes to
the handler of the same name. Exit codes: 0 on completion, 1 on usage,
config or I/O errors, 2 when the solver stopped a run early.
"""

import argparse
import logging
import sys
from typing import Any, Dict, NoReturn, Optional, Sequence, TextIO

import structlog

from . import __version__
from .config import CFL_POLICIES, LINE_CHOICES, PRECISIONS, RuntimeConfig
from .core.stencils import configure_threads
from .handlers import (
    EXIT_ERROR,
    CommandResult,
    handle_compare,
    handle_duffing,
    handle_presets,
    handle_radial,
    handle_resume,
    handle_run,
)
from .presets import PRESET_NAMES
from .utils import ValidationError

logger = structlog.get_logger(__name__)


class UsageError(Exception):
    """Raised for malformed command lines"""
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--preset", choices=PRESET_NAMES, help="Experiment preset")
    source.add_argument("--config", dest="config_path", help="Experiment config file (YAML)")
    parser.add_argument("--n", type=int, help="Grid intervals per axis")
    parser.add_argument("--t-end", dest="t_end", type=float, help="Final time")
    parser.add_argument("--dt", type=float, help="Time step (default dx/20)")
    parser.add_argument("--precision", choices=PRECISIONS)
    parser.add_argument("--sample-every", dest="sample_every", type=int)
    parser.add_argument("--cfl-policy", dest="cfl_policy", choices=CFL_POLICIES)
    parser.add_argument("--output-dir", dest="output_dir", help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="higgs-solver",
        description="Klein-Gordon/Higgs solver on an expanding de Sitter background",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    run = commands.add_parser("run", help="Run an experiment")
    _add_experiment_arguments(run)

    radial = commands.add_parser("radial", help="Run an experiment in radial geometry")
    _add_experiment_arguments(radial)
    radial.add_argument(
        "--compare-3d",
        dest="compare_3d",
        action="store_true",
        help="Also run on the cube and report the mid-line discrepancy",
    )

    compare = commands.add_parser("compare", help="Grid-convergence or precision study")
    source = compare.add_mutually_exclusive_group()
    source.add_argument("--preset", choices=PRESET_NAMES)
    source.add_argument("--config", dest="config_path")
    compare.add_argument("--resolutions", type=int, nargs="+")
    compare.add_argument("--reference", type=int)
    compare.add_argument("--time", type=float)
    compare.add_argument("--line", choices=LINE_CHOICES)
    compare.add_argument("--precision-study", dest="precision_study", action="store_true")
    compare.add_argument("--n", type=int, help="Resolution of the precision study")
    compare.add_argument("--output-dir", dest="output_dir")

    duffing = commands.add_parser("duffing", help="Duffing reference system")
    duffing.add_argument("--mu2", type=float)
    duffing.add_argument("--lambda", dest="lambda", type=float)
    duffing.add_argument("--equilibria", action="store_true")
    duffing.add_argument("--trajectory", type=float, nargs=2, metavar=("PHI", "PHI_T"))
    duffing.add_argument("--portrait", metavar="CSV", help="Write basin labels to CSV")
    duffing.add_argument("--range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    duffing.add_argument("--samples", type=int, help="Portrait samples per axis")
    duffing.add_argument("--t-max", dest="t_max", type=float)
    duffing.add_argument("--curve", choices=PRESET_NAMES, help="Classify a preset's mid-line")
    duffing.add_argument("--predicate", choices=PRESET_NAMES, help="Check the bubble condition")

    presets = commands.add_parser("presets", help="List experiment presets")
    presets.add_argument("--show", choices=PRESET_NAMES, help="Print a preset as config text")

    resume = commands.add_parser("resume", help="Continue a run from its checkpoint")
    resume.add_argument("run_dir")
    resume.add_argument("--checkpoint")
    resume.add_argument("--t-end", dest="t_end", type=float)

    return parser


class _StderrStream:
    """Writes to whatever sys.stderr is at the time of each call"""

    def write(self, message: str) -> int:
        return sys.stderr.write(message)

    def flush(self) -> None:
        sys.stderr.flush()

    def isatty(self) -> bool:
        return sys.stderr.isatty()


def configure_logging(config: RuntimeConfig, stream: Optional[TextIO] = None) -> None:
    """Set up structlog for the process"""
    level = logging.getLevelName(config.log_level.upper())
    if not isinstance(level, int):
        raise ValidationError(f"Unknown log level: {config.log_level}")

    target: Any = stream
    if config.log_file:
        target = open(config.log_file, "a", encoding="utf-8")
    elif target is None:
        target = _StderrStream()

    if config.log_format == "json":
        renderer: Any = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=target.isatty())

    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(file=target),
        cache_logger_on_first_use=False,
    )


def dispatch(command: str, arguments: Dict[str, Any], config: RuntimeConfig) -> CommandResult:
    """Route a command to its handler"""
    if command == "run":
        return handle_run(arguments, config)
    elif command == "radial":
        return handle_radial(arguments, config)
    elif command == "compare":
        return handle_compare(arguments, config)
    elif command == "duffing":
        return handle_duffing(arguments, config)
    elif command == "presets":
        return handle_presets(arguments, config)
    elif command == "resume":
        return handle_resume(arguments, config)
    raise UsageError(f"Unknown command: {command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point"""
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_ERROR

    arguments = {key: value for key, value in vars(args).items() if key != "command"}
    try:
        config = RuntimeConfig.from_env()
        configure_logging(config)
        configure_threads(config.threads)
        logger.info("command_started", command=args.command)

        result = dispatch(args.command, arguments, config)

        logger.info("command_finished", command=args.command, exit_code=result.exit_code)
        print(result.text)
        return result.exit_code
    except KeyboardInterrupt:
        logger.warning("command_interrupted", command=args.command)
        print("❌ Interrupted", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"❌ Error executing {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
