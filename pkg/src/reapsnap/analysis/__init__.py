from reapsnap.analysis.export import RESULT_COLUMNS, result_row, write_csv, write_json
from reapsnap.analysis.metrics import (
    ContiguityStats,
    ReuseStats,
    contiguity_stats,
    footprint,
    page_set,
    reuse_stats,
)
from reapsnap.analysis.speedup import SpeedupRow, SpeedupSummary, speedup_report

__all__ = [
    "ContiguityStats",
    "RESULT_COLUMNS",
    "ReuseStats",
    "SpeedupRow",
    "SpeedupSummary",
    "contiguity_stats",
    "footprint",
    "page_set",
    "result_row",
    "reuse_stats",
    "speedup_report",
    "write_csv",
    "write_json",
]
