"""CSV/JSON emitters for restore reports and derived tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from pathlib import Path
from typing import Any, Iterable, Sequence

from reapsnap.engine.report import RestoreReport

logger = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "function",
    "mode",
    "total_us",
    "load_vmm_us",
    "conn_us",
    "fetch_us",
    "install_us",
    "fault_us",
    "compute_us",
    "faults",
    "prefetched",
    "mispredicted",
)


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.3f}"
    return value


def result_row(report: RestoreReport, mode: str | None = None) -> dict[str, Any]:
    return {
        "function": report.function,
        "mode": mode or report.mode.value,
        "total_us": report.total_us,
        "load_vmm_us": report.load_vmm_us,
        "conn_us": report.connection_restore_us,
        "fetch_us": report.ws_fetch_us,
        "install_us": report.ws_install_us,
        "fault_us": report.fault_service_us,
        "compute_us": report.compute_us,
        "faults": report.faults_served,
        "prefetched": report.prefetched_pages,
        "mispredicted": report.prefetched_unused,
    }


def format_csv(rows: Iterable[dict[str, Any]], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _fmt(row.get(key)) for key in columns})
    return buffer.getvalue()


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    logger.debug("Wrote %s", path)
    return path


def write_csv(path: str | Path, rows: Iterable[dict[str, Any]], columns: Sequence[str]) -> Path:
    return _atomic_write(Path(path), format_csv(rows, columns))


def write_json(path: str | Path, payload: Any) -> Path:
    return _atomic_write(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_results_csv(path: str | Path, rows: Iterable[dict[str, Any]]) -> Path:
    return write_csv(path, rows, RESULT_COLUMNS)


__all__ = [
    "RESULT_COLUMNS",
    "format_csv",
    "result_row",
    "write_csv",
    "write_json",
    "write_results_csv",
]
