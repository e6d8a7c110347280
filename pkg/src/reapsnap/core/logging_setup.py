from __future__ import annotations

import json
import logging
import logging.handlers
import os
from datetime import datetime, timezone
from typing import Any

_RESERVED = frozenset(
    (
        "name", "msg", "args", "levelname", "levelno", "pathname", "filename", "module",
        "lineno", "funcName", "exc_info", "exc_text", "stack_info", "created", "msecs",
        "relativeCreated", "thread", "threadName", "processName", "process", "taskName",
    )
)


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        # extra fields and run context
        for k, v in record.__dict__.items():
            if k in _RESERVED:
                continue
            try:
                json.dumps(v)
                payload[k] = v
            except (TypeError, ValueError):
                payload[k] = repr(v)

        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)

        return json.dumps(payload, ensure_ascii=False)


class ContextFilter(logging.Filter):
    """Inject run context into every log record.

    Known keys: `run_id`, `experiment`, `profile` (function preset) and `mode`.
    """

    def __init__(self, context: dict[str, Any] | None = None):
        super().__init__()
        self.context = dict(context or {})

    def set_context(self, context: dict[str, Any]) -> None:
        self.context = dict(context or {})

    def update(self, **fields: Any) -> None:
        for key, value in fields.items():
            if value is None:
                self.context.pop(key, None)
            else:
                self.context[key] = value

    def filter(self, record: logging.LogRecord) -> bool:
        for k, v in self.context.items():
            setattr(record, k, v)
        return True


def setup_logging(config: dict[str, Any] | None = None) -> ContextFilter:
    """Install the rotating JSON-lines file handler and the console handler.

    Args:
        config: optional dict with keys `log_dir`, `log_file`, `level`, `backup_count`,
            `console_level`, `file_enabled` and `context`.

    Returns:
        The `ContextFilter` attached to the managed handlers so callers can update run fields.
    """
    cfg = config or {}
    level_name = (cfg.get("level") or "INFO").upper()
    console_level_name = (cfg.get("console_level") or level_name).upper()
    backup_count = int(cfg.get("backup_count", 5))

    root = logging.getLogger()
    root.setLevel(getattr(logging, level_name, logging.INFO))

    existing = next(
        (h for h in root.filters if isinstance(h, ContextFilter) and getattr(h, "_reapsnap_managed", False)),
        None,
    )
    context_filter = existing or ContextFilter()
    context_filter.set_context(cfg.get("context", {}))
    setattr(context_filter, "_reapsnap_managed", True)

    if cfg.get("file_enabled", True) and not any(
        isinstance(h, logging.handlers.RotatingFileHandler) and getattr(h, "_reapsnap_managed", False)
        for h in root.handlers
    ):
        log_dir = cfg.get("log_dir", os.path.join(os.getcwd(), "logs"))
        os.makedirs(log_dir, exist_ok=True)
        log_file = cfg.get("log_file", os.path.join(log_dir, "reapsnap.log"))
        file_handler = logging.handlers.RotatingFileHandler(
            log_file, maxBytes=10 * 1024 * 1024, backupCount=backup_count
        )
        file_handler.setLevel(getattr(logging, level_name, logging.INFO))
        file_handler.setFormatter(JsonFormatter())
        file_handler.addFilter(context_filter)
        setattr(file_handler, "_reapsnap_managed", True)
        root.addHandler(file_handler)

    if not any(
        isinstance(h, logging.StreamHandler) and getattr(h, "_reapsnap_console", False)
        for h in root.handlers
    ):
        console = logging.StreamHandler()
        console.setLevel(getattr(logging, console_level_name, logging.INFO))
        console.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        console.addFilter(context_filter)
        setattr(console, "_reapsnap_console", True)
        root.addHandler(console)

    if context_filter not in root.filters:
        root.addFilter(context_filter)

    return context_filter


__all__ = ["ContextFilter", "JsonFormatter", "setup_logging"]
