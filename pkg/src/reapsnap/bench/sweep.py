from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from reapsnap.bench.workspace import BenchWorkspace
from reapsnap.core.errors import ConfigError
from reapsnap.engine.concurrent import run_concurrent
from reapsnap.engine.report import RestoreMode

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "function",
    "mode",
    "instances",
    "mean_latency_us",
    "min_latency_us",
    "max_latency_us",
    "makespan_us",
    "aggregate_bandwidth_mbps",
)


@dataclass(frozen=True)
class SweepPoint:
    function: str
    mode: RestoreMode
    instances: int
    mean_latency_us: float
    min_latency_us: float
    max_latency_us: float
    makespan_us: float
    aggregate_bandwidth_mbps: float

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "mode": self.mode.value,
            "instances": self.instances,
            "mean_latency_us": self.mean_latency_us,
            "min_latency_us": self.min_latency_us,
            "max_latency_us": self.max_latency_us,
            "makespan_us": self.makespan_us,
            "aggregate_bandwidth_mbps": self.aggregate_bandwidth_mbps,
        }


def cmd_sweep_concurrency(
    workspace: BenchWorkspace,
    function: str,
    counts: Sequence[int] = (1, 2, 4, 8, 16, 32, 64),
    modes: Sequence[RestoreMode | str] = (RestoreMode.LAZY, RestoreMode.PREFETCH),
) -> dict[RestoreMode, list[SweepPoint]]:
    """Start N instances at once for each count; every instance gets its own input."""
    if not counts or any(int(c) < 1 for c in counts):
        raise ConfigError("sweep counts must be >= 1")
    image = workspace.image()
    base_seed = workspace.config.experiments.input_seed
    curves: dict[RestoreMode, list[SweepPoint]] = {}
    for raw_mode in modes:
        mode = RestoreMode(raw_mode)
        if mode is RestoreMode.RECORD:
            raise ConfigError("sweep supports lazy and prefetch modes only")
        trace = ws = None
        if mode is RestoreMode.PREFETCH:
            recorded = workspace.record(function)
            trace, ws = recorded.trace, recorded.ws
        points: list[SweepPoint] = []
        for count in counts:
            sequences = [
                workspace.input_sequence(function, base_seed + index) for index in range(int(count))
            ]
            result = run_concurrent(
                image,
                workspace.storage,
                workspace.params,
                mode,
                sequences,
                trace,
                ws,
                function=function,
            )
            totals = [r.total_us for r in result.reports]
            points.append(
                SweepPoint(
                    function=function,
                    mode=mode,
                    instances=int(count),
                    mean_latency_us=result.mean_latency_us,
                    min_latency_us=min(totals),
                    max_latency_us=max(totals),
                    makespan_us=result.makespan_us,
                    aggregate_bandwidth_mbps=result.aggregate_bandwidth_mbps,
                )
            )
        curves[mode] = points
    return curves


__all__ = ["SWEEP_COLUMNS", "SweepPoint", "cmd_sweep_concurrency"]
