"""Structured logging setup for the dubbing toolkit.

Every module obtains its logger with ``get_logger(__name__)`` and logs short
snake_case event names with keyword context. Logs go to stderr so that data
written to stdout or artifact files is never interleaved with log lines.
"""

from __future__ import annotations

import logging
import sys
from typing import Any

import structlog

_configured = False


def configure_logging(level: str = "INFO", json_logs: bool = False) -> None:
    """Configure structlog processors and the stdlib root level.

    Args:
        level: Minimum log level name (DEBUG, INFO, WARNING, ERROR).
        json_logs: Render one JSON object per line instead of the console format.
    """
    global _configured

    log_level = logging.getLevelName(level.upper())
    if not isinstance(log_level, int):
        log_level = logging.INFO

    renderer: Any = structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(log_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
    _configured = True


def get_logger(name: str) -> Any:
    """Return a bound structlog logger for the given module name.

    Args:
        name: Usually ``__name__`` of the calling module.

    Returns:
        A lazy structlog logger carrying ``logger_name=name`` as context. It
        resolves the configuration on every call, so a later
        ``configure_logging`` also applies to module-level loggers.
    """
    if not _configured:
        configure_logging()
    return structlog.get_logger(logger_name=name)
