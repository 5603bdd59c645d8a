"""
Structured Logging — Rich console for interactive runs, JSON lines on file.

Usage:
    from vita_rx.core.logging import setup_logging

    setup_logging("INFO", log_file="runs/train.log")
    log = logging.getLogger(__name__)
    log.info("Epoch %d done", epoch)
"""

from __future__ import annotations

import json
import logging

from rich.console import Console
from rich.logging import RichHandler

_CONFIGURED = False


class JsonLineFormatter(logging.Formatter):
    """One JSON object per record; the message is escaped properly."""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "time": self.formatTime(record, "%Y-%m-%dT%H:%M:%S"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info:
            payload["exc"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)


def setup_logging(level: str | int = logging.INFO, log_file: str | None = None) -> None:
    """Configure application-wide logging once per process.

    Args:
        level: Level name or number.
        log_file: Optional path for JSON-lines file logging.
    """
    global _CONFIGURED
    if _CONFIGURED:
        return

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())

    root = logging.getLogger()
    root.setLevel(level)

    console_handler = RichHandler(
        console=Console(stderr=True),
        rich_tracebacks=True,
        show_time=True,
        show_path=False,
        markup=False,
    )
    console_handler.setFormatter(logging.Formatter("%(message)s"))
    console_handler.setLevel(level)
    root.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(JsonLineFormatter())
        file_handler.setLevel(level)
        root.addHandler(file_handler)

    _CONFIGURED = True
