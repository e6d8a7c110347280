from __future__ import annotations

import logging
from dataclasses import dataclass

from reapsnap.bench.workspace import BenchWorkspace
from reapsnap.engine.report import FetchStrategy, RestoreMode, RestoreReport
from reapsnap.engine.session import cold_invocation

logger = logging.getLogger(__name__)

OPT_STEP_COLUMNS = (
    "step",
    "total_us",
    "processing_us",
    "fetch_us",
    "install_us",
    "fault_us",
    "bandwidth_mbps",
    "speedup",
)

# (label, mode, fetch strategy) in ablation order.
OPT_STEPS = (
    ("vanilla", RestoreMode.LAZY, None),
    ("parallel_pfs", RestoreMode.PREFETCH, FetchStrategy.PARALLEL),
    ("ws_file", RestoreMode.PREFETCH, FetchStrategy.BULK),
    ("reap", RestoreMode.PREFETCH, FetchStrategy.BULK_BYPASS),
)


@dataclass(frozen=True)
class OptStepRow:
    step: str
    report: RestoreReport
    baseline_us: float

    @property
    def speedup(self) -> float:
        return self.baseline_us / self.report.total_us

    def to_dict(self) -> dict:
        r = self.report
        return {
            "step": self.step,
            "total_us": r.total_us,
            "processing_us": r.processing_us,
            "fetch_us": r.ws_fetch_us,
            "install_us": r.ws_install_us,
            "fault_us": r.fault_service_us,
            "bandwidth_mbps": r.effective_read_bandwidth_mbps,
            "speedup": self.speedup,
        }


def cmd_opt_steps(
    workspace: BenchWorkspace, function: str, *, input_seed: int | None = None
) -> list[OptStepRow]:
    """Replay one cold invocation under each design point of the optimization ablation."""
    image = workspace.image()
    recorded = workspace.record(function)
    seq = workspace.input_sequence(function, input_seed)
    rows: list[OptStepRow] = []
    baseline_us = 0.0
    for label, mode, fetch in OPT_STEPS:
        if mode is RestoreMode.LAZY:
            _, report = cold_invocation(
                image, mode, workspace.storage, workspace.params, seq, function=function
            )
            baseline_us = report.total_us
        else:
            _, report = cold_invocation(
                image,
                mode,
                workspace.storage,
                workspace.params,
                seq,
                recorded.trace,
                recorded.ws,
                fetch=fetch,
                function=function,
            )
        rows.append(OptStepRow(label, report, baseline_us))
        logger.info("opt-steps %s/%s: %.1f ms", function, label, report.total_us / 1000)
    return rows


__all__ = ["OPT_STEPS", "OPT_STEP_COLUMNS", "OptStepRow", "cmd_opt_steps"]
