from __future__ import annotations

import logging
from dataclasses import dataclass

from reapsnap.bench.workspace import BenchWorkspace
from reapsnap.core.errors import ConfigError
from reapsnap.engine.policy import WorkingSetVerdict, assess_working_set
from reapsnap.engine.report import RestoreMode, RestoreReport
from reapsnap.engine.session import cold_invocation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColdStartResult:
    function: str
    mode: RestoreMode
    reports: list[RestoreReport]
    record: RestoreReport | None = None
    record_baseline: RestoreReport | None = None
    verdict: WorkingSetVerdict | None = None

    @property
    def totals_us(self) -> list[float]:
        return [r.total_us for r in self.reports]

    @property
    def mean_us(self) -> float:
        return sum(self.totals_us) / len(self.reports)

    @property
    def record_overhead(self) -> float | None:
        """Record invocation time over lazy time on the same sequence, minus one."""
        if self.record is None or self.record_baseline is None:
            return None
        return self.record.total_us / self.record_baseline.total_us - 1.0

    def summary(self) -> dict:
        totals = self.totals_us
        data: dict = {
            "function": self.function,
            "mode": self.mode.value,
            "repeats": len(totals),
            "mean_us": self.mean_us,
            "min_us": min(totals),
            "max_us": max(totals),
        }
        if self.record is not None:
            data["record_total_us"] = self.record.total_us
            data["record_overhead"] = self.record_overhead
        if self.verdict is not None:
            data["working_set_stale"] = self.verdict.stale
            data["working_set_usage"] = self.verdict.usage
            data["residual_ratio"] = self.verdict.residual_ratio
            data["rerecord_reason"] = self.verdict.reason
        return data

    def to_dict(self) -> dict:
        payload = {"summary": self.summary(), "reports": [r.to_dict() for r in self.reports]}
        if self.record is not None:
            payload["record"] = self.record.to_dict()
        return payload


def cmd_coldstart(
    workspace: BenchWorkspace,
    function: str,
    mode: RestoreMode | str,
    repeats: int,
    *,
    input_seed: int | None = None,
) -> ColdStartResult:
    """Run ``repeats`` cold invocations, each from an empty residency map."""
    mode = RestoreMode(mode)
    if repeats < 1:
        raise ConfigError("experiments.repeats should be >= 1")
    image = workspace.image()
    storage, params = workspace.storage, workspace.params

    recorded = None
    record_baseline = None
    if mode is not RestoreMode.LAZY:
        recorded = workspace.record(function)
        _, record_baseline = cold_invocation(
            image, RestoreMode.LAZY, storage, params, recorded.sequence, function=function
        )

    if mode is RestoreMode.RECORD:
        assert recorded is not None
        return ColdStartResult(
            function, mode, [recorded.report], recorded.report, record_baseline
        )

    seq = workspace.input_sequence(function, input_seed)
    reports: list[RestoreReport] = []
    for _ in range(repeats):
        if mode is RestoreMode.PREFETCH:
            assert recorded is not None
            _, report = cold_invocation(
                image, mode, storage, params, seq, recorded.trace, recorded.ws, function=function
            )
        else:
            _, report = cold_invocation(image, mode, storage, params, seq, function=function)
        reports.append(report)

    verdict = None
    if mode is RestoreMode.PREFETCH:
        verdict = assess_working_set(reports[-1], workspace.config.rerecord)
        if verdict.stale:
            logger.warning("Working set of %s should be re-recorded: %s", function, verdict.reason)

    result = ColdStartResult(
        function,
        mode,
        reports,
        recorded.report if recorded else None,
        record_baseline,
        verdict,
    )
    logger.info(
        "coldstart %s/%s: mean %.1f ms over %d repeats",
        function,
        mode.value,
        result.mean_us / 1000,
        repeats,
    )
    return result


__all__ = ["ColdStartResult", "cmd_coldstart"]
