from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any

COMPONENTS = (
    "load_vmm",
    "connection_restore",
    "ws_fetch",
    "ws_install",
    "fault_service",
    "compute",
)


class RestoreMode(str, Enum):
    LAZY = "lazy"
    RECORD = "record"
    PREFETCH = "prefetch"


class FetchStrategy(str, Enum):
    """How a prefetch session brings its working set in."""

    PARALLEL = "parallel"
    BULK = "bulk"
    BULK_BYPASS = "bulk_bypass"


@dataclass(frozen=True)
class RestoreReport:
    function: str
    mode: RestoreMode
    load_vmm_us: float
    connection_restore_us: float
    ws_fetch_us: float
    ws_install_us: float
    fault_service_us: float
    compute_us: float
    faults_served: int
    prefetched_pages: int
    prefetched_unused: int
    pages_touched: int
    effective_read_bandwidth_mbps: float
    monitor_overhead_us: float = 0.0
    bytes_read: int = 0
    fetch: FetchStrategy | None = None

    @property
    def total_us(self) -> float:
        return (
            self.load_vmm_us
            + self.connection_restore_us
            + self.ws_fetch_us
            + self.ws_install_us
            + self.fault_service_us
            + self.compute_us
        )

    @property
    def processing_us(self) -> float:
        """Everything after Load VMM."""
        return self.total_us - self.load_vmm_us

    def breakdown(self) -> dict[str, float]:
        return {name: getattr(self, f"{name}_us") for name in COMPONENTS}

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["fetch"] = self.fetch.value if self.fetch else None
        data["total_us"] = self.total_us
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RestoreReport:
        values = {k: v for k, v in data.items() if k not in {"total_us"}}
        values["mode"] = RestoreMode(values["mode"])
        if values.get("fetch"):
            values["fetch"] = FetchStrategy(values["fetch"])
        return cls(**values)


__all__ = ["COMPONENTS", "FetchStrategy", "RestoreMode", "RestoreReport"]
