"""Logging setup using loguru."""

import sys

from loguru import logger

from src.config import settings

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name} - {message}"


def setup_logging(level: str | None = None) -> None:
    """Route all log records to a single stderr sink."""
    logger.remove()
    logger.add(sys.stderr, level=(level or settings.log_level).upper(), format=LOG_FORMAT)
