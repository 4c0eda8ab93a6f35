import json
import logging
import sys
from typing import Any, Dict

ROOT_LOGGER = "rdlab"


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        base: Dict[str, Any] = {
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if hasattr(record, "extra"):
            base.update(record.extra)
        if record.exc_info:
            base["exception"] = self.formatException(record.exc_info)
        return json.dumps(base, default=str)


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    root = logging.getLogger(ROOT_LOGGER)
    if not root.handlers:
        # stdout carries CLI data rows, so logs go to stderr
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JsonFormatter())
        root.addHandler(handler)
        root.setLevel(logging.WARNING)
        root.propagate = False
    if name == ROOT_LOGGER:
        return root
    return root.getChild(name)


def configure_logging(level: str) -> None:
    """Set the level shared by every laboratory logger."""
    get_logger().setLevel(level.upper())
