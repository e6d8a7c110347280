"""Storage calibration tables.

File format, one entry per line::

    # size_bytes,concurrency,bypass,MBps
    4096,1,0,32
    8388608,1,1,533
    peak=850
    min_latency_us=80

``serial_fault`` and ``fault_peak`` lines are optional and default to 43 and 81.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from reapsnap.core.errors import CalibrationError

logger = logging.getLogger(__name__)

MIB = 1 << 20

_TRUE = {"1", "true", "yes", "y", "on"}
_FALSE = {"0", "false", "no", "n", "off"}


class CalibrationPoint(NamedTuple):
    size_bytes: int
    concurrency: int
    bypass: bool
    mbps: float


@dataclass(frozen=True)
class Calibration:
    points: tuple[CalibrationPoint, ...]
    peak_mbps: float = 850.0
    min_latency_us: float = 80.0
    serial_fault_mbps: float = 43.0
    fault_peak_mbps: float = 81.0
    source: str = field(default="builtin", compare=False)

    def validate(self) -> list[str]:
        problems: list[str] = []
        if not self.points:
            problems.append("calibration needs at least one table point")
        if not any(not p.bypass for p in self.points):
            problems.append("calibration needs at least one page-cache (bypass=0) point")
        for point in self.points:
            if point.size_bytes <= 0:
                problems.append(f"size_bytes must be > 0 (got {point.size_bytes})")
            if point.concurrency < 1:
                problems.append(f"concurrency must be >= 1 (got {point.concurrency})")
            if point.mbps <= 0:
                problems.append(f"MBps must be > 0 (got {point.mbps})")
        if self.peak_mbps <= 0:
            problems.append("peak must be > 0")
        if self.min_latency_us < 0:
            problems.append("min_latency_us must be >= 0")
        if self.serial_fault_mbps <= 0:
            problems.append("serial_fault must be > 0")
        if self.fault_peak_mbps <= 0:
            problems.append("fault_peak must be > 0")
        return problems


DEFAULT_CALIBRATION = Calibration(
    points=(
        CalibrationPoint(4096, 1, False, 32.0),
        CalibrationPoint(4096, 16, False, 360.0),
        CalibrationPoint(8 * MIB, 1, False, 275.0),
        CalibrationPoint(8 * MIB, 1, True, 533.0),
    ),
)


def _parse_bool(raw: str, where: str) -> bool:
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise CalibrationError(f"{where}: bypass flag {raw!r} is not a boolean")


def parse_calibration(text: str, source: str = "<string>") -> Calibration:
    points: list[CalibrationPoint] = []
    settings: dict[str, float] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{number}"
        if "=" in line:
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in {"peak", "min_latency_us", "serial_fault", "fault_peak"}:
                raise CalibrationError(f"{where}: unknown setting {key!r}")
            try:
                settings[key] = float(value)
            except ValueError as exc:
                raise CalibrationError(f"{where}: {key} value {value!r} is not a number") from exc
            continue
        fields = [part.strip() for part in line.split(",")]
        if fields[0].lower() == "size_bytes":
            continue
        if len(fields) != 4:
            raise CalibrationError(f"{where}: expected size_bytes,concurrency,bypass,MBps")
        try:
            points.append(
                CalibrationPoint(
                    size_bytes=int(fields[0]),
                    concurrency=int(fields[1]),
                    bypass=_parse_bool(fields[2], where),
                    mbps=float(fields[3]),
                )
            )
        except ValueError as exc:
            raise CalibrationError(f"{where}: {exc}") from exc

    calibration = Calibration(
        points=tuple(points),
        peak_mbps=settings.get("peak", DEFAULT_CALIBRATION.peak_mbps),
        min_latency_us=settings.get("min_latency_us", DEFAULT_CALIBRATION.min_latency_us),
        serial_fault_mbps=settings.get("serial_fault", DEFAULT_CALIBRATION.serial_fault_mbps),
        fault_peak_mbps=settings.get("fault_peak", DEFAULT_CALIBRATION.fault_peak_mbps),
        source=source,
    )
    problems = calibration.validate()
    if problems:
        raise CalibrationError(f"{source}: " + "; ".join(problems))
    return calibration


def load_calibration(path: str | Path) -> Calibration:
    target = Path(path)
    try:
        text = target.read_text(encoding="utf-8")
    except OSError as exc:
        raise CalibrationError(f"cannot read calibration file {target}: {exc}") from exc
    calibration = parse_calibration(text, source=str(target))
    logger.info("Loaded %d calibration points from %s", len(calibration.points), target)
    return calibration


def format_calibration(calibration: Calibration) -> str:
    lines = ["# size_bytes,concurrency,bypass,MBps"]
    for point in sorted(calibration.points, key=lambda p: (p.bypass, p.size_bytes, p.concurrency)):
        lines.append(f"{point.size_bytes},{point.concurrency},{int(point.bypass)},{point.mbps:g}")
    lines.append(f"peak={calibration.peak_mbps:g}")
    lines.append(f"min_latency_us={calibration.min_latency_us:g}")
    lines.append(f"serial_fault={calibration.serial_fault_mbps:g}")
    lines.append(f"fault_peak={calibration.fault_peak_mbps:g}")
    return "\n".join(lines) + "\n"


def write_calibration(calibration: Calibration, path: str | Path) -> Path:
    """Write ``calibration`` in the file format; tables ``load_calibration`` would reject are refused."""
    problems = calibration.validate()
    if problems:
        raise CalibrationError(f"refusing to write calibration: {'; '.join(problems)}")
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(format_calibration(calibration), encoding="utf-8")
    os.replace(tmp, target)
    return target


__all__ = [
    "Calibration",
    "CalibrationPoint",
    "DEFAULT_CALIBRATION",
    "MIB",
    "format_calibration",
    "load_calibration",
    "parse_calibration",
    "write_calibration",
]
