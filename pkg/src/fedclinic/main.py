# PYTHON_ARGCOMPLETE_OK

"""The command line interface to fedclinic"""

import argparse
import logging
import logging.config
import math
import os
import sys
import textwrap
import time
from pathlib import Path
from typing import List, Optional

import argcomplete  # type: ignore
import platformdirs

import fedclinic.constants
from fedclinic import commands, constants
from fedclinic.colors import bold, green
from fedclinic.constants import (
    DATASET_URL,
    DEFAULT_BACKDOOR_OUTPUT_PATH,
    DEFAULT_CLIP_BOUND,
    DEFAULT_DELTA_TOTAL,
    EXIT_CODE_OK,
    MAX_LOGS,
    ExitCode,
)
from fedclinic.util import FedclinicError, fedclinic_wrap
from fedclinic.version import __version__

logger = logging.getLogger(__name__)


def print_version() -> None:
    print(__version__)


def prog_name() -> str:
    try:
        prog = os.path.basename(sys.argv[0])
        if prog == "__main__.py":
            return f"{sys.executable} -m fedclinic"
        else:
            return prog
    except Exception:
        pass
    return "fedclinic"


FEDCLINIC_DESCRIPTION = textwrap.dedent(
    f"""
    Simulate federated linear-SVM training across virtual clinics with
    distributed differential privacy, on the Breast Cancer Wisconsin dataset.

    Logs are written to {str(constants.FEDCLINIC_LOG_DIR)}.

    """
)
FEDCLINIC_DESCRIPTION += fedclinic_wrap(
    """
    optional environment variables:
      FEDCLINIC_DATASET     Dataset path used when --dataset is not given. Overrides dataset_path in the config.
      FEDCLINIC_LOG_DIR     Overrides the log directory.
      FEDCLINIC_DATA_DIR    Overrides where `fedclinic fetch` stores the dataset.
    """,
    subsequent_indent=" " * 24,  # match the indent of argparse options
    keep_newlines=True,
)

RUN_DESCRIPTION = textwrap.dedent(
    """
    Run the privacy-utility sweep described by a JSON config file.

    For every (epsilon, n_clients, seed) point of the config grids the
    federation is trained from the zero model and every round is recorded.
    One non-private reference run per (n_clients, seed) is added with
    epsilon written as "inf".

    Output is a CSV with the columns
    epsilon,n_clients,seed,round,test_accuracy,test_hinge_loss,spent_epsilon,asr,topup_events

    Exit codes: 0 success, 1 config error, 2 data error, 3 run error.
    """
)

BACKDOOR_DESCRIPTION = textwrap.dedent(
    f"""
    Run the backdoor study: for every (n_clients, seed) of the config the
    federation is trained three times, without attack ("clean"), with the
    configured poisoning attack ("attacked") and with the attack plus
    adversarial augmentation by the honest clients ("defended").

    Output is a CSV with the columns n_clients,seed,arm,test_accuracy,asr,
    written to backdoor_output_path of the config (default
    {DEFAULT_BACKDOOR_OUTPUT_PATH}) unless --output is given.
    """
)


class LineWrapRawTextHelpFormatter(argparse.RawDescriptionHelpFormatter):
    def _split_lines(self, text: str, width: int) -> List[str]:
        text = self._whitespace_matcher.sub(" ", text).strip()
        return textwrap.wrap(text, width)


def _epsilon(value: str) -> float:
    try:
        epsilon = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid epsilon {value!r}")
    if math.isnan(epsilon) or epsilon <= 0:
        raise argparse.ArgumentTypeError(f"epsilon must be positive, got {value}")
    return epsilon


def run_fedclinic_command(args: argparse.Namespace) -> ExitCode:
    if args.command == "run":
        return commands.run(args.config, args.output, args.dataset, args.seed_offset)
    elif args.command == "backdoor":
        return commands.backdoor(
            args.config, args.epsilon, args.output, args.dataset, args.seed_offset
        )
    elif args.command == "budget":
        return commands.budget(args.epsilon, args.rounds, args.clients, args.delta, args.clip)
    elif args.command == "fetch":
        return commands.fetch(args.dest, args.url)
    elif args.command == "environment":
        return commands.environment(value=args.value)
    elif args.command == "completions":
        print(constants.completion_instructions)
        return EXIT_CODE_OK
    else:
        raise FedclinicError(f"Unknown command {args.command}")


def add_experiment_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config", required=True, type=Path, help="JSON experiment config file"
    )
    parser.add_argument("--output", type=Path, help="CSV file to write")
    parser.add_argument(
        "--dataset",
        type=Path,
        help=(
            "Path to breast-cancer-wisconsin.data. Takes precedence over "
            "$FEDCLINIC_DATASET and the dataset_path of the config."
        ),
    )
    parser.add_argument(
        "--seed-offset",
        type=int,
        default=0,
        help="Added to every seed of the config",
    )
    parser.add_argument("--verbose", action="store_true")


def _add_run(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "run",
        help="Run the privacy-utility sweep",
        formatter_class=LineWrapRawTextHelpFormatter,
        description=RUN_DESCRIPTION,
    )
    add_experiment_args(p)


def _add_backdoor(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "backdoor",
        help="Compare clean, attacked and defended federations",
        formatter_class=LineWrapRawTextHelpFormatter,
        description=BACKDOOR_DESCRIPTION,
    )
    add_experiment_args(p)
    p.add_argument(
        "--epsilon",
        type=_epsilon,
        default=math.inf,
        help="Total privacy budget of every arm (default: inf, no noise)",
    )


def _add_budget(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "budget",
        help="Print the privacy budget and noise calibration of a configuration",
        formatter_class=LineWrapRawTextHelpFormatter,
        description=textwrap.dedent(
            """
            Prints the per-round budget, the sensitivity of the averaged update,
            the noise the aggregate needs and each client's share of it.
            Rounds compose by basic composition.
            """
        ),
    )
    p.add_argument("--epsilon", type=_epsilon, required=True, help="Total budget")
    p.add_argument("--rounds", type=int, required=True, help="Number of rounds")
    p.add_argument("--clients", type=int, required=True, help="Number of clients")
    p.add_argument(
        "--delta", type=float, default=DEFAULT_DELTA_TOTAL, help="Total delta"
    )
    p.add_argument(
        "--clip", type=float, default=DEFAULT_CLIP_BOUND, help="L2 clip bound of updates"
    )
    p.add_argument("--verbose", action="store_true")


def _add_fetch(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "fetch",
        help="Download the Breast Cancer Wisconsin dataset",
        formatter_class=LineWrapRawTextHelpFormatter,
        description=textwrap.dedent(
            f"""
            Downloads breast-cancer-wisconsin.data from the UCI repository
            into {str(constants.FEDCLINIC_DATA_DIR)} (or --dest).
            """
        ),
    )
    p.add_argument("--dest", type=Path, help="Directory to save the dataset in")
    p.add_argument("--url", default=DATASET_URL, help="Where to download from")
    p.add_argument("--verbose", action="store_true")


def _add_environment(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "environment",
        formatter_class=LineWrapRawTextHelpFormatter,
        help="Print a list of environment variables and paths used by fedclinic.",
        description=textwrap.dedent(
            """
            Prints the names and current values of environment variables used by
            fedclinic, followed by the values derived from them and from platform
            specific defaults.

            Available variables:
            FEDCLINIC_DATASET, FEDCLINIC_LOG_DIR, FEDCLINIC_DATA_DIR
            """
        ),
    )
    p.add_argument(
        "--value", "-v", metavar="VARIABLE", help="Print the value of the variable."
    )


def get_command_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=prog_name(),
        formatter_class=LineWrapRawTextHelpFormatter,
        description=FEDCLINIC_DESCRIPTION,
    )
    parser.man_short_description = FEDCLINIC_DESCRIPTION.splitlines()[1]  # type: ignore

    subparsers = parser.add_subparsers(
        dest="command",
        description="Get help for commands with fedclinic COMMAND --help",
    )

    _add_run(subparsers)
    _add_backdoor(subparsers)
    _add_budget(subparsers)
    _add_fetch(subparsers)
    _add_environment(subparsers)

    parser.add_argument("--version", action="store_true", help="Print version and exit")
    subparsers.add_parser(
        "completions",
        help="Print instructions on enabling shell completions for fedclinic",
        description="Print instructions on enabling shell completions for fedclinic",
    )
    return parser


def delete_oldest_logs(file_list: List[Path], keep_number: int) -> None:
    file_list = sorted(file_list)
    if len(file_list) > keep_number:
        for existing_file in file_list[:-keep_number]:
            try:
                existing_file.unlink()
            except FileNotFoundError:
                pass


def _setup_log_file(log_dir: Optional[Path] = None) -> Path:
    log_dir = log_dir or constants.FEDCLINIC_LOG_DIR
    # not util.mkdir, it would log before logging is configured
    log_dir.mkdir(parents=True, exist_ok=True)

    delete_oldest_logs(list(log_dir.glob("cmd_*[0-9].log")), MAX_LOGS)

    datetime_str = time.strftime("%Y-%m-%d_%H.%M.%S")
    log_file = log_dir / f"cmd_{datetime_str}.log"
    counter = 1
    while log_file.exists() and counter < 10:
        log_file = log_dir / f"cmd_{datetime_str}_{counter}.log"
        counter += 1

    log_file.touch()

    return log_file


def setup_log_file() -> Path:
    try:
        return _setup_log_file()
    except PermissionError:
        return _setup_log_file(platformdirs.user_log_path("fedclinic"))


def setup_logging(verbose: bool) -> None:
    fedclinic_str = bold(green("fedclinic >")) if sys.stdout.isatty() else "fedclinic >"
    fedclinic.constants.fedclinic_log_file = setup_log_file()

    # "incremental" is False so previous pytest tests don't accumulate handlers
    logging_config = {
        "version": 1,
        "formatters": {
            "stream_nonverbose": {
                "class": "logging.Formatter",
                "format": "{message}",
                "style": "{",
            },
            "stream_verbose": {
                "class": "logging.Formatter",
                "format": fedclinic_str + "({funcName}:{lineno}): {message}",
                "style": "{",
            },
            "file": {
                "class": "logging.Formatter",
                "format": "{relativeCreated: >8.1f}ms ({name}.{funcName}:{lineno}): {message}",
                "style": "{",
            },
        },
        "handlers": {
            "stream": {
                "class": "logging.StreamHandler",
                "formatter": "stream_verbose" if verbose else "stream_nonverbose",
                "level": "INFO" if verbose else "WARNING",
            },
            "file": {
                "class": "logging.FileHandler",
                "formatter": "file",
                "filename": str(fedclinic.constants.fedclinic_log_file),
                "encoding": "utf-8",
                "level": "DEBUG",
            },
        },
        "loggers": {"fedclinic": {"handlers": ["stream", "file"], "level": "DEBUG"}},
        "incremental": False,
    }
    logging.config.dictConfig(logging_config)


def setup(args: argparse.Namespace) -> None:
    if "version" in args and args.version:
        print_version()
        sys.exit(0)

    setup_logging("verbose" in args and args.verbose)

    logger.debug(f"{time.strftime('%Y-%m-%d %H:%M:%S')}")
    logger.debug(f"{' '.join(sys.argv)}")
    logger.info(f"fedclinic version is {__version__}")


def cli() -> ExitCode:
    """Entry point from command line"""
    try:
        parser = get_command_parser()
        argcomplete.autocomplete(parser)
        parsed_fedclinic_args = parser.parse_args()
        setup(parsed_fedclinic_args)
        if not parsed_fedclinic_args.command:
            parser.print_help()
            return ExitCode(1)
        return run_fedclinic_command(parsed_fedclinic_args)
    except FedclinicError as e:
        print(str(e), file=sys.stderr)
        logger.debug(f"{type(e).__name__}: {e}", exc_info=True)
        return e.exit_code
    except KeyboardInterrupt:
        return ExitCode(1)
    except Exception:
        logger.debug("Uncaught Exception:", exc_info=True)
        raise
    finally:
        logger.debug("fedclinic finished.")


if __name__ == "__main__":
    sys.exit(cli())
