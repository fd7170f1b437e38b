"""ANSI styling for terminal output; plain text when stdout is not a terminal."""

import os
import sys
from enum import Enum

try:
    import colorama  # type: ignore
except ImportError:  # Colorama is Windows only package
    colorama = None

if colorama and sys.stdout.isatty():
    colorama.init()


class Style(str, Enum):
    BOLD = "\033[1m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    RESET = "\033[0m"


def color_enabled() -> bool:
    # https://no-color.org
    return sys.stdout.isatty() and "NO_COLOR" not in os.environ


def stylize(text: str, *styles: Style) -> str:
    if not styles or not color_enabled():
        return text
    return "".join(s.value for s in styles) + text + Style.RESET.value


def bold(text: str) -> str:
    """Paths and counts in command summaries"""
    return stylize(text, Style.BOLD)


def green(text: str) -> str:
    return stylize(text, Style.GREEN)


def yellow(text: str) -> str:
    """Budget warnings"""
    return stylize(text, Style.YELLOW)
