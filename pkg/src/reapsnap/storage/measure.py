"""Real-device read harness mirroring the calibration access patterns."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from reapsnap.core.errors import CalibrationError
from reapsnap.storage.calibration import MIB, Calibration, CalibrationPoint
from reapsnap.storage.direct_io import DIRECT_ALIGNMENT, drop_cache, read_direct

logger = logging.getLogger(__name__)

MIN_TARGET_BYTES = 64 * MIB


class DiskPattern(str, Enum):
    SERIAL_4K = "serial-4k"
    PARALLEL_4K = "parallel-4k"
    BULK = "bulk"
    BULK_BYPASS = "bulk-bypass"


@dataclass(frozen=True)
class Measurement:
    pattern: DiskPattern
    bytes_read: int
    seconds: float
    request_size: int
    concurrency: int

    @property
    def mbps(self) -> float:
        if self.seconds <= 0:
            return float("inf")
        return self.bytes_read / MIB / self.seconds


def _random_offsets(size: int, block: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    slots = size // block
    picks = rng.choice(slots, size=min(count, slots), replace=False)
    return picks.astype(np.int64) * block


def measure_real(
    path: str | Path,
    pattern: DiskPattern | str,
    *,
    parallelism: int = 16,
    block_size: int = 4096,
    requests: int = 2048,
    bulk_bytes: int = 8 * MIB,
    seed: int = 0,
) -> Measurement:
    """Time one access pattern against ``path`` with a cold page cache."""
    pattern = DiskPattern(pattern)
    target = Path(path)
    if not target.exists():
        raise FileNotFoundError(f"measurement target {target} does not exist")
    size = target.stat().st_size
    if size < MIN_TARGET_BYTES:
        raise CalibrationError(
            f"measurement target {target} holds {size} bytes; need at least {MIN_TARGET_BYTES}"
        )

    drop_cache(target)
    if pattern is DiskPattern.BULK_BYPASS:
        length = -(-bulk_bytes // DIRECT_ALIGNMENT) * DIRECT_ALIGNMENT
        started = time.perf_counter()
        data = read_direct(target, 0, length)
        elapsed = time.perf_counter() - started
        return Measurement(pattern, len(data), elapsed, length, 1)

    fd = os.open(target, os.O_RDONLY)
    try:
        if pattern is DiskPattern.BULK:
            started = time.perf_counter()
            got = len(os.pread(fd, bulk_bytes, 0))
            elapsed = time.perf_counter() - started
            return Measurement(pattern, got, elapsed, bulk_bytes, 1)

        offsets = _random_offsets(size, block_size, requests, seed)
        workers = 1 if pattern is DiskPattern.SERIAL_4K else max(1, parallelism)
        started = time.perf_counter()
        if workers == 1:
            got = sum(len(os.pread(fd, block_size, int(off))) for off in offsets)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                got = sum(pool.map(lambda off: len(os.pread(fd, block_size, int(off))), offsets))
        elapsed = time.perf_counter() - started
        return Measurement(pattern, got, elapsed, block_size, workers)
    finally:
        os.close(fd)


def calibration_from_measurements(
    measurements: list[Measurement], *, base: Calibration
) -> Calibration:
    """Overlay measured patterns on ``base``, keeping its limits and unmeasured points.

    A measured point replaces the base point with the same
    ``(size, concurrency, bypass)`` key.
    """
    merged = {(p.size_bytes, p.concurrency, p.bypass): p for p in base.points}
    for m in measurements:
        point = CalibrationPoint(
            size_bytes=m.request_size,
            concurrency=m.concurrency,
            bypass=m.pattern is DiskPattern.BULK_BYPASS,
            mbps=round(m.mbps, 1),
        )
        merged[(point.size_bytes, point.concurrency, point.bypass)] = point
    points = tuple(merged[key] for key in sorted(merged))
    peak = max([base.peak_mbps, *(p.mbps for p in points)])
    serial = next((m.mbps for m in measurements if m.pattern is DiskPattern.SERIAL_4K), None)
    calibration = Calibration(
        points=points,
        peak_mbps=peak,
        min_latency_us=base.min_latency_us,
        serial_fault_mbps=round(serial, 1) if serial is not None else base.serial_fault_mbps,
        fault_peak_mbps=base.fault_peak_mbps,
        source="measured",
    )
    problems = calibration.validate()
    if problems:
        raise CalibrationError("measured calibration is invalid: " + "; ".join(problems))
    return calibration


__all__ = [
    "DiskPattern",
    "MIN_TARGET_BYTES",
    "Measurement",
    "calibration_from_measurements",
    "measure_real",
]
