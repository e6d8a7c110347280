from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any


@dataclass(frozen=True)
class EngineParams:
    """Fixed CPU-side costs of the restore path, in microseconds."""

    vmm_fixed_overhead_us: float = 45_000.0
    fault_forwarding_us: float = 25.0
    per_page_install_us: float = 1.0
    install_call_us: float = 5.0
    resident_access_us: float = 0.0
    connection_rtt_us: float = 4_000.0
    parallel_fetch_concurrency: int = 16

    @classmethod
    def from_dict(cls, raw: dict[str, Any] | None) -> EngineParams:
        raw = raw or {}
        known = {f.name for f in fields(cls)}
        values: dict[str, Any] = {}
        for key, value in raw.items():
            if key not in known:
                continue
            values[key] = int(value) if key == "parallel_fetch_concurrency" else float(value)
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def validate(self) -> list[str]:
        problems = [
            f"engine.{name} should be >= 0"
            for name, value in self.to_dict().items()
            if isinstance(value, float) and value < 0
        ]
        if self.parallel_fetch_concurrency < 1:
            problems.append("engine.parallel_fetch_concurrency should be >= 1")
        return problems


__all__ = ["EngineParams"]
