from __future__ import annotations

from dataclasses import dataclass

from reapsnap.engine.report import RestoreMode, RestoreReport


@dataclass(frozen=True)
class WorkingSetPolicy:
    """When a recorded working set no longer pays for itself."""

    max_residual_ratio: float = 0.5
    min_usage: float = 0.5

    def validate(self) -> list[str]:
        problems = []
        if self.max_residual_ratio < 0:
            problems.append("engine.rerecord.max_residual_ratio should be >= 0")
        if not 0.0 <= self.min_usage <= 1.0:
            problems.append("engine.rerecord.min_usage should be within [0, 1]")
        return problems


@dataclass(frozen=True)
class WorkingSetVerdict:
    stale: bool
    residual_ratio: float
    usage: float
    reason: str = ""


def assess_working_set(
    report: RestoreReport, policy: WorkingSetPolicy | None = None
) -> WorkingSetVerdict:
    """Decide from a prefetch report whether the function should be re-recorded."""
    policy = policy or WorkingSetPolicy()
    if report.mode is not RestoreMode.PREFETCH:
        raise ValueError(f"working-set assessment needs a prefetch report, got {report.mode.value}")
    prefetched = report.prefetched_pages
    if prefetched == 0:
        return WorkingSetVerdict(
            stale=report.faults_served > 0,
            residual_ratio=float("inf") if report.faults_served else 0.0,
            usage=0.0,
            reason="empty working set" if report.faults_served else "",
        )
    residual_ratio = report.faults_served / prefetched
    usage = 1.0 - report.prefetched_unused / prefetched
    reasons = []
    if residual_ratio > policy.max_residual_ratio:
        reasons.append(f"residual faults at {residual_ratio:.0%} of the working set")
    if usage < policy.min_usage:
        reasons.append(f"only {usage:.0%} of prefetched pages used")
    return WorkingSetVerdict(
        stale=bool(reasons),
        residual_ratio=residual_ratio,
        usage=usage,
        reason="; ".join(reasons),
    )


__all__ = ["WorkingSetPolicy", "WorkingSetVerdict", "assess_working_set"]
