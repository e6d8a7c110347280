"""Suite experiments run by ``reapsnap suite`` through BenchRuntime."""

from __future__ import annotations

import logging
from typing import Any

from reapsnap.analysis.speedup import speedup_report
from reapsnap.bench.coldstart import cmd_coldstart
from reapsnap.bench.opt_steps import OPT_STEP_COLUMNS, cmd_opt_steps
from reapsnap.bench.results import ResultsWriter
from reapsnap.bench.sweep import SWEEP_COLUMNS, cmd_sweep_concurrency
from reapsnap.bench.workspace import BenchWorkspace
from reapsnap.core.config import Config
from reapsnap.core.errors import ExperimentError
from reapsnap.core.experiment import Experiment
from reapsnap.core.runtime import RuntimeContext
from reapsnap.engine.report import RestoreMode

logger = logging.getLogger(__name__)

SPEEDUP_COLUMNS = (
    "function",
    "baseline_us",
    "reap_us",
    "speedup",
    "baseline_faults",
    "residual_faults",
    "fault_elimination",
    "record_overhead",
)
DEFAULT_FOCUS_FUNCTION = "helloworld"


def _suite_settings(context: RuntimeContext) -> dict[str, Any]:
    settings = context.get("settings") or {}
    return settings.get("suite", {}) if isinstance(settings, dict) else {}


def _workspace(context: RuntimeContext) -> BenchWorkspace:
    workspace = context.get("workspace")
    if not isinstance(workspace, BenchWorkspace):
        raise ExperimentError("workspace not initialized; the snapshot experiment must run first")
    return workspace


def _writer(context: RuntimeContext) -> ResultsWriter:
    writer = context.get("results")
    assert isinstance(writer, ResultsWriter)
    return writer


class SnapshotExperiment(Experiment):
    """Builds the shared workspace and makes sure the snapshot image exists."""

    def start(self, context: RuntimeContext) -> None:
        super().start(context)
        if context.get("workspace") is None:
            config = context.get("config")
            assert isinstance(config, Config)
            workspace = BenchWorkspace(config)
            context.set("workspace", workspace)
            context.set("storage", workspace.storage)
            context.set("results", ResultsWriter(workspace.out_dir))

    def run(self, context: RuntimeContext) -> None:
        image = _workspace(context).image()
        context.set("image", image)
        logger.info("Snapshot %s ready (%d pages)", image.image_id, image.num_pages)


class ColdStartSuiteExperiment(Experiment):
    """Lazy vs prefetch cold starts over every selected preset."""

    def run(self, context: RuntimeContext) -> None:
        workspace = _workspace(context)
        writer = _writer(context)
        config = workspace.config
        pairs = []
        overheads: dict[str, float | None] = {}
        for function in workspace.selected_functions():
            lazy = cmd_coldstart(workspace, function, RestoreMode.LAZY, config.experiments.repeats)
            prefetch = cmd_coldstart(workspace, function, RestoreMode.PREFETCH, config.experiments.repeats)
            for result in (lazy, prefetch):
                writer.write_run(result.mode.value, function, result.to_dict())
                writer.add(result.reports[0])
            assert prefetch.record is not None
            writer.write_run(RestoreMode.RECORD.value, function, {"record": prefetch.record.to_dict()})
            writer.add(prefetch.record)
            pairs.append((lazy.reports[0], prefetch.reports[0]))
            overheads[function] = prefetch.record_overhead

        summary = speedup_report(pairs)
        rows = [{**row.to_dict(), "record_overhead": overheads[row.function]} for row in summary.rows]
        writer.write_table("speedup", rows, SPEEDUP_COLUMNS, config.experiments.format)
        context.set("speedup_summary", summary)
        logger.info(
            "Suite speedup %.2fx (geomean %.2fx), pooled fault elimination %.3f",
            summary.arithmetic_mean,
            summary.geometric_mean,
            summary.pooled_fault_elimination,
        )


class OptStepsExperiment(Experiment):
    def run(self, context: RuntimeContext) -> None:
        workspace = _workspace(context)
        function = _suite_settings(context).get("opt_steps_function", DEFAULT_FOCUS_FUNCTION)
        rows = cmd_opt_steps(workspace, function)
        _writer(context).write_table(
            f"opt_steps_{function}",
            [row.to_dict() for row in rows],
            OPT_STEP_COLUMNS,
            workspace.config.experiments.format,
        )
        context.set("opt_steps", rows)


class SweepExperiment(Experiment):
    def run(self, context: RuntimeContext) -> None:
        workspace = _workspace(context)
        function = _suite_settings(context).get("sweep_function", DEFAULT_FOCUS_FUNCTION)
        curves = cmd_sweep_concurrency(workspace, function, workspace.config.experiments.concurrency)
        rows = [point.to_dict() for points in curves.values() for point in points]
        _writer(context).write_table(
            f"sweep_{function}", rows, SWEEP_COLUMNS, workspace.config.experiments.format
        )
        context.set("sweep", curves)


class ResultsExperiment(Experiment):
    """Flushes the aggregated results tables when the suite stops."""

    def stop(self, context: RuntimeContext) -> None:
        writer = context.get("results")
        if isinstance(writer, ResultsWriter) and writer.rows:
            writer.flush()
        super().stop(context)


def build_experiments(config: Config) -> list[Experiment]:
    def make(cls: type[Experiment], name: str, required: bool = False) -> Experiment:
        module = config.modules.get(name)
        if module is None:
            return cls(name, enabled=True, required=required)
        return cls(name, enabled=module.enabled, required=module.required or required)

    return [
        make(SnapshotExperiment, "snapshot", required=True),
        make(ColdStartSuiteExperiment, "coldstart"),
        make(OptStepsExperiment, "opt_steps"),
        make(SweepExperiment, "sweep"),
        make(ResultsExperiment, "results"),
    ]


__all__ = [
    "ColdStartSuiteExperiment",
    "OptStepsExperiment",
    "ResultsExperiment",
    "SPEEDUP_COLUMNS",
    "SnapshotExperiment",
    "SweepExperiment",
    "build_experiments",
]
