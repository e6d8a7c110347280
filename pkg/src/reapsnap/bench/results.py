from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from reapsnap.analysis.export import RESULT_COLUMNS, result_row, write_csv, write_json
from reapsnap.engine.report import RestoreReport

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ResultsWriter:
    """Collects result rows in memory and writes the aggregated tables on flush.

    Per-run payloads go to ``<out>/<mode>/<function>/report.json`` immediately;
    ``results.csv`` and ``results.json`` are rewritten whole on every flush so a
    rerun with the same inputs produces identical files.
    """

    def __init__(self, out_dir: str | Path) -> None:
        self.out_dir = Path(out_dir)
        self._rows: list[dict[str, Any]] = []
        self._reports: list[dict[str, Any]] = []

    @property
    def rows(self) -> list[dict[str, Any]]:
        return list(self._rows)

    def add(self, report: RestoreReport, mode: str | None = None) -> None:
        self._rows.append(result_row(report, mode))
        self._reports.append({**report.to_dict(), "label": mode or report.mode.value})

    def write_run(self, mode: str, function: str, payload: dict[str, Any]) -> Path:
        path = self.out_dir / mode / function / "report.json"
        write_json(path, {"schema_version": SCHEMA_VERSION, **payload})
        logger.info("Wrote %s", path)
        return path

    def write_table(
        self, stem: str, rows: list[dict[str, Any]], columns: tuple[str, ...], fmt: str = "csv"
    ) -> Path:
        """Write ``<out>/<stem>.csv`` or ``<out>/<stem>.json`` depending on ``fmt``."""
        if fmt == "json":
            path = write_json(self.out_dir / f"{stem}.json", {"schema_version": SCHEMA_VERSION, "rows": rows})
        else:
            path = write_csv(self.out_dir / f"{stem}.csv", rows, columns)
        logger.info("Wrote %s", path)
        return path

    def flush(self) -> tuple[Path, Path]:
        csv_path = write_csv(self.out_dir / "results.csv", self._rows, RESULT_COLUMNS)
        json_path = write_json(
            self.out_dir / "results.json",
            {"schema_version": SCHEMA_VERSION, "results": self._reports},
        )
        logger.info("Wrote %d result rows to %s", len(self._rows), csv_path)
        return csv_path, json_path


__all__ = ["ResultsWriter", "SCHEMA_VERSION"]
