from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np

from reapsnap.storage.calibration import DEFAULT_CALIBRATION, MIB, Calibration

logger = logging.getLogger(__name__)

US_PER_S = 1_000_000.0


def mbps_to_bytes_per_us(mbps: float) -> float:
    return mbps * MIB / US_PER_S


class StorageModel:
    """Calibrated read-timing model.

    Throughput is interpolated linearly in log2(concurrency) within each
    calibrated request size (constant past the last calibrated concurrency),
    then linearly in log2(size) between calibrated sizes, clamped outside the
    table and capped at the peak bandwidth. Each curve is made monotone in
    concurrency before interpolation.
    """

    def __init__(self, calibration: Calibration = DEFAULT_CALIBRATION) -> None:
        self.calibration = calibration
        self._curves = {
            False: self._build_curves([p for p in calibration.points if not p.bypass]),
            True: self._build_curves([p for p in calibration.points if p.bypass]),
        }
        self._throughput = lru_cache(maxsize=4096)(self._interpolate)

    @property
    def peak_mbps(self) -> float:
        return self.calibration.peak_mbps

    @property
    def min_latency_us(self) -> float:
        return self.calibration.min_latency_us

    @property
    def fault_rate_mbps(self) -> float:
        """Effective rate of one serial page fault stream."""
        return min(self.calibration.serial_fault_mbps, self.peak_mbps)

    @property
    def fault_peak_mbps(self) -> float:
        return min(self.calibration.fault_peak_mbps, self.peak_mbps)

    @property
    def bulk_rate_mbps(self) -> float:
        """Single-request rate of the largest calibrated bulk read, bypass preferred."""
        curves = self._curves[True] or self._curves[False]
        largest = max(curves)
        return self.throughput(largest, 1, bool(self._curves[True]))

    def throughput(self, size: int, concurrency: int = 1, bypass: bool = False) -> float:
        return self._throughput(int(size), max(1, int(concurrency)), bool(bypass))

    def transfer_us(self, nbytes: int, mbps: float) -> float:
        """Duration of moving ``nbytes`` at ``mbps``, floored at the minimum latency."""
        return max(self.min_latency_us, nbytes / mbps_to_bytes_per_us(mbps))

    def service_read(self, size: int, concurrency: int = 1, bypass: bool = False) -> float:
        if size <= 0:
            raise ValueError(f"read size must be > 0, got {size}")
        if concurrency < 1:
            raise ValueError(f"concurrency must be >= 1, got {concurrency}")
        return self.transfer_us(size, self.throughput(size, concurrency, bypass))

    @staticmethod
    def _build_curves(points) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        grouped: dict[int, dict[int, float]] = {}
        for point in points:
            grouped.setdefault(point.size_bytes, {})[point.concurrency] = point.mbps
        curves: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for size, table in grouped.items():
            levels = sorted(table)
            rates = np.array([table[c] for c in levels], dtype=float)
            monotone = np.maximum.accumulate(rates)
            if not np.array_equal(monotone, rates):
                logger.warning(
                    "Calibration curve for %d-byte requests is not monotone in concurrency; "
                    "using its running maximum",
                    size,
                )
            curves[size] = (np.log2(np.array(levels, dtype=float)), monotone)
        return curves

    def _interpolate(self, size: int, concurrency: int, bypass: bool) -> float:
        curves = self._curves[False]
        if bypass and self._curves[True] and size >= min(self._curves[True]):
            curves = self._curves[True]
        sizes = sorted(curves)
        log_c = math.log2(concurrency)
        per_size = [float(np.interp(log_c, *curves[s])) for s in sizes]
        value = float(np.interp(math.log2(max(size, 1)), np.log2(sizes), per_size))
        return min(value, self.peak_mbps)


__all__ = ["StorageModel", "US_PER_S", "mbps_to_bytes_per_us"]
