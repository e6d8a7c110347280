from __future__ import annotations

import logging
import time
import uuid
from dataclasses import dataclass, field

from reapsnap.core.config import Config
from reapsnap.core.errors import ExperimentError
from reapsnap.core.experiment import Experiment
from reapsnap.core.logging_setup import ContextFilter

logger = logging.getLogger(__name__)


@dataclass
class RuntimeContext:
    data: dict[str, object] = field(default_factory=dict)

    def set(self, key: str, value: object) -> None:
        self.data[key] = value

    def get(self, key: str, default: object | None = None) -> object | None:
        return self.data.get(key, default)


class BenchRuntime:
    """Runs enabled experiments in order against one shared context."""

    def __init__(
        self,
        config: Config,
        experiments: list[Experiment],
        *,
        log_context: ContextFilter | None = None,
        run_id: str | None = None,
    ) -> None:
        self.config = config
        self.experiments = experiments
        self.log_context = log_context
        self.context = RuntimeContext()
        self.context.set("config", config)
        self.context.set("settings", config.settings)
        self.context.set("experiment_names", [e.name for e in experiments])
        self.run_id = run_id or uuid.uuid4().hex[:12]
        self.context.set("run_id", self.run_id)
        if log_context is not None:
            log_context.update(run_id=self.run_id)

    def _enter(self, experiment: Experiment | None) -> None:
        if self.log_context is not None:
            self.log_context.update(experiment=experiment.name if experiment else None)

    def _fail(self, experiment: Experiment, exc: Exception, stage: str) -> None:
        experiment.status.last_error = str(exc)
        if experiment.status.required:
            raise ExperimentError(f"Required experiment failed during {stage}: {experiment.name}") from exc
        experiment.disable(str(exc))

    def start(self) -> None:
        for experiment in self.experiments:
            if not experiment.status.enabled:
                continue
            self._enter(experiment)
            try:
                experiment.start(self.context)
                experiment.status.started = True
                logger.info("Started experiment: %s", experiment.name)
            except Exception as exc:  # noqa: BLE001
                logger.exception("Failed to start experiment: %s", experiment.name)
                self._fail(experiment, exc, "start")
        self._enter(None)

    def run_all(self) -> None:
        for experiment in self.experiments:
            if not experiment.status.started:
                continue
            self._enter(experiment)
            began = time.perf_counter()
            try:
                experiment.run(self.context)
                experiment.status.finished = True
            except Exception as exc:  # noqa: BLE001
                logger.exception("Experiment failed: %s", experiment.name)
                self._fail(experiment, exc, "run")
            finally:
                experiment.status.duration_s = time.perf_counter() - began
                logger.info(
                    "Experiment %s took %.2fs", experiment.name, experiment.status.duration_s
                )
            self.publish_status()
        self._enter(None)

    def stop(self) -> None:
        for experiment in self.experiments:
            if experiment.status.started:
                try:
                    experiment.stop(self.context)
                except Exception:  # noqa: BLE001
                    logger.exception("Failed to stop experiment %s", experiment.name)

    def publish_status(self) -> dict[str, dict[str, object]]:
        snapshot = {e.name: e.status.to_dict() for e in self.experiments}
        self.context.set("experiment_statuses", snapshot)
        return snapshot

    def run(self) -> dict[str, dict[str, object]]:
        self.start()
        try:
            self.run_all()
        finally:
            self.stop()
        return self.publish_status()


__all__ = ["BenchRuntime", "RuntimeContext"]
