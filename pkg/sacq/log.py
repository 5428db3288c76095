"""Logging setup backed by rich."""

import logging

from rich.console import Console
from rich.logging import RichHandler

ROOT_LOGGER = "sacq"

_stderr = Console(stderr=True)


def get_logger(name: str) -> logging.Logger:
    """Return a logger inside the sacq namespace."""
    if name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")


def configure_logging(verbose: bool = False) -> None:
    """Install a single RichHandler on the sacq root logger."""
    root = logging.getLogger(ROOT_LOGGER)
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = RichHandler(console=_stderr, show_path=False, rich_tracebacks=True)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)
    root.propagate = False
