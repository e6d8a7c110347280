from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from reapsnap.core.errors import AnalysisError
from reapsnap.engine.report import RestoreMode, RestoreReport


@dataclass(frozen=True)
class SpeedupRow:
    function: str
    baseline_us: float
    prefetch_us: float
    baseline_faults: int
    residual_faults: int

    @property
    def speedup(self) -> float:
        return self.baseline_us / self.prefetch_us if self.prefetch_us else math.inf

    @property
    def fault_elimination(self) -> float:
        if self.baseline_faults == 0:
            return 1.0 if self.residual_faults == 0 else 0.0
        return 1.0 - self.residual_faults / self.baseline_faults

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "baseline_us": self.baseline_us,
            "reap_us": self.prefetch_us,
            "speedup": self.speedup,
            "baseline_faults": self.baseline_faults,
            "residual_faults": self.residual_faults,
            "fault_elimination": self.fault_elimination,
        }


@dataclass(frozen=True)
class SpeedupSummary:
    rows: tuple[SpeedupRow, ...]

    @property
    def arithmetic_mean(self) -> float:
        return sum(r.speedup for r in self.rows) / len(self.rows) if self.rows else 0.0

    @property
    def geometric_mean(self) -> float:
        if not self.rows:
            return 0.0
        return math.exp(sum(math.log(r.speedup) for r in self.rows) / len(self.rows))

    @property
    def mean_fault_elimination(self) -> float:
        return sum(r.fault_elimination for r in self.rows) / len(self.rows) if self.rows else 0.0

    @property
    def pooled_fault_elimination(self) -> float:
        """1 - total residual faults / total baseline faults across functions."""
        baseline = sum(r.baseline_faults for r in self.rows)
        residual = sum(r.residual_faults for r in self.rows)
        return 1.0 - residual / baseline if baseline else 1.0

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "arithmetic_mean": self.arithmetic_mean,
            "geometric_mean": self.geometric_mean,
            "mean_fault_elimination": self.mean_fault_elimination,
            "pooled_fault_elimination": self.pooled_fault_elimination,
        }


def speedup_report(pairs: Sequence[tuple[RestoreReport, RestoreReport]]) -> SpeedupSummary:
    """Summarize (baseline, prefetch) report pairs, one pair per function."""
    rows: list[SpeedupRow] = []
    seen: set[str] = set()
    for baseline, prefetch in pairs:
        if baseline.function != prefetch.function:
            raise AnalysisError(
                f"unpaired reports: {baseline.function!r} vs {prefetch.function!r}"
            )
        if baseline.mode is not RestoreMode.LAZY or prefetch.mode is not RestoreMode.PREFETCH:
            raise AnalysisError(
                f"{baseline.function}: expected a (lazy, prefetch) pair, got "
                f"({baseline.mode.value}, {prefetch.mode.value})"
            )
        if baseline.function in seen:
            raise AnalysisError(f"{baseline.function}: more than one pair")
        seen.add(baseline.function)
        rows.append(
            SpeedupRow(
                function=baseline.function,
                baseline_us=baseline.total_us,
                prefetch_us=prefetch.total_us,
                baseline_faults=baseline.faults_served,
                residual_faults=prefetch.faults_served,
            )
        )
    return SpeedupSummary(tuple(rows))


__all__ = ["SpeedupRow", "SpeedupSummary", "speedup_report"]
