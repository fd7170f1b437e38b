import logging
import shutil
import textwrap
from pathlib import Path

import numpy as np

from fedclinic.constants import (
    EXIT_CODE_CONFIG_ERROR,
    EXIT_CODE_DATA_ERROR,
    EXIT_CODE_RUN_ERROR,
    ExitCode,
)

logger = logging.getLogger(__name__)


class FedclinicError(Exception):
    exit_code: ExitCode = EXIT_CODE_RUN_ERROR

    def __init__(self, message: str, wrap_message: bool = True):
        if wrap_message:
            super().__init__(fedclinic_wrap(message))
        else:
            super().__init__(message)


class ConfigError(FedclinicError):
    exit_code = EXIT_CODE_CONFIG_ERROR


class DataError(FedclinicError):
    exit_code = EXIT_CODE_DATA_ERROR


class ParseError(DataError):
    def __init__(self, path: Path, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {reason}")


class RunError(FedclinicError):
    exit_code = EXIT_CODE_RUN_ERROR


class NumericError(RunError):
    """Non-finite values appeared during training"""


class BudgetError(RunError):
    """The privacy accountant has no rounds left to charge"""


class OutputError(RunError):
    pass


def mkdir(path: Path) -> None:
    if path.is_dir():
        return
    logger.info(f"creating directory {path}")
    path.mkdir(parents=True, exist_ok=True)


def format_real(value: float) -> str:
    """Fixed six-digit rendering used by every CSV and report"""
    if value == float("inf"):
        return "inf"
    return f"{value:.6f}"


def fedclinic_wrap(
    text: str, subsequent_indent: str = "", keep_newlines: bool = False
) -> str:
    """Dedent, strip, wrap to shell width. Don't break on hyphens, only spaces"""
    minimum_width = 40
    width = max(shutil.get_terminal_size((80, 40)).columns, minimum_width) - 2

    text = textwrap.dedent(text).strip()
    if keep_newlines:
        return "\n".join(
            [
                textwrap.fill(
                    line,
                    width=width,
                    subsequent_indent=subsequent_indent,
                    break_on_hyphens=False,
                )
                for line in text.splitlines()
            ]
        )
    else:
        return textwrap.fill(
            text,
            width=width,
            subsequent_indent=subsequent_indent,
            break_on_hyphens=False,
        )


# seed streams for derive_seed
STREAM_TRAIN = 0
STREAM_NOISE = 1
STREAM_DROPOUT = 2
STREAM_TOPUP = 3
STREAM_POISON = 4
STREAM_AUGMENT = 5


def derive_seed(master_seed: int, *keys: int) -> int:
    """Positionally derived child seed.

    seed = first 32-bit word of SeedSequence(master_seed, spawn_key=keys), so
    the seed of (client, round) never depends on the order work is scheduled.
    """
    sequence = np.random.SeedSequence(master_seed, spawn_key=tuple(keys))
    return int(sequence.generate_state(1)[0])
