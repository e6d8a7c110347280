from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from reapsnap.core.runtime import RuntimeContext


logger = logging.getLogger(__name__)


@dataclass
class ExperimentStatus:
    enabled: bool
    required: bool
    started: bool = False
    finished: bool = False
    disabled_reason: str | None = None
    # Wall-clock seconds spent in run().
    duration_s: float | None = None
    last_error: str | None = None

    def to_dict(self) -> dict[str, object]:
        return {
            "enabled": self.enabled,
            "required": self.required,
            "started": self.started,
            "finished": self.finished,
            "disabled_reason": self.disabled_reason,
            "duration_s": self.duration_s,
            "last_error": self.last_error,
        }


class Experiment:
    """One step of a benchmark suite with start/run/stop hooks."""

    name: str

    def __init__(self, name: str, enabled: bool = True, required: bool = False) -> None:
        self.name = name
        self.status = ExperimentStatus(enabled=enabled, required=required)

    def start(self, context: "RuntimeContext") -> None:
        self.status.started = True

    def run(self, context: "RuntimeContext") -> None:
        return None

    def stop(self, context: "RuntimeContext") -> None:
        self.status.started = False

    def disable(self, reason: str) -> None:
        self.status.enabled = False
        self.status.started = False
        self.status.disabled_reason = reason
        self.status.last_error = reason
        logger.warning("Experiment %s disabled: %s", self.name, reason)


__all__ = ["Experiment", "ExperimentStatus"]
