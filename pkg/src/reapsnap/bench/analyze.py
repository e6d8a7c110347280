from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from reapsnap.analysis.metrics import (
    ContiguityStats,
    ReuseStats,
    contiguity_stats,
    footprint,
    reuse_stats,
)
from reapsnap.core.errors import AnalysisError, ConfigError
from reapsnap.snapshot.trace import TRACE_MAGIC, PageTrace, read_trace
from reapsnap.workload.sequence import AccessSequence, read_sequence

logger = logging.getLogger(__name__)

ANALYZE_COLUMNS = (
    "source",
    "pages",
    "footprint_mb",
    "run_count",
    "mean_run_length",
    "max_run_length",
    "reuse_fraction",
    "jaccard",
)


@dataclass(frozen=True)
class AnalyzedInput:
    source: str
    pages: int
    footprint_mb: float
    contiguity: ContiguityStats
    # Reuse against the first input; None for the first input itself.
    reuse: ReuseStats | None = None

    def row(self) -> dict:
        return {
            "source": self.source,
            "pages": self.pages,
            "footprint_mb": self.footprint_mb,
            "run_count": self.contiguity.run_count,
            "mean_run_length": self.contiguity.mean_run_length,
            "max_run_length": self.contiguity.max_run_length,
            "reuse_fraction": self.reuse.reuse_fraction if self.reuse else None,
            "jaccard": self.reuse.jaccard if self.reuse else None,
        }

    def to_dict(self) -> dict:
        data = {
            "source": self.source,
            "pages": self.pages,
            "footprint_mb": self.footprint_mb,
            "contiguity": self.contiguity.to_dict(),
        }
        if self.reuse is not None:
            data["reuse"] = self.reuse.to_dict()
        return data


def load_page_source(path: str | Path) -> PageTrace | AccessSequence:
    """A trace file is recognized by its magic; anything else parses as a sequence."""
    target = Path(path)
    with open(target, "rb") as handle:
        magic = handle.read(len(TRACE_MAGIC))
    if magic == TRACE_MAGIC:
        return read_trace(target)
    return read_sequence(target)


def _page_size(source: PageTrace | AccessSequence, default: int) -> int:
    return source.page_size if isinstance(source, PageTrace) else default


def cmd_analyze(paths: Sequence[str | Path], page_size: int = 4096) -> list[AnalyzedInput]:
    """Contiguity and footprint per input, reuse of each later input against the first."""
    if not paths:
        raise ConfigError("analyze needs at least one trace or sequence file")
    sources = [load_page_source(p) for p in paths]
    first = sources[0]
    first_size = _page_size(first, page_size)
    results: list[AnalyzedInput] = []
    for index, (path, source) in enumerate(zip(paths, sources)):
        size = _page_size(source, page_size)
        if index and size != first_size:
            raise AnalysisError(
                f"{path} uses {size}-byte pages but {paths[0]} uses {first_size}-byte pages"
            )
        stats = contiguity_stats(source)
        results.append(
            AnalyzedInput(
                source=str(path),
                pages=stats.total_pages,
                footprint_mb=footprint(source, size),
                contiguity=stats,
                reuse=reuse_stats(first, source) if index else None,
            )
        )
    logger.info("Analyzed %d inputs", len(results))
    return results


__all__ = ["ANALYZE_COLUMNS", "AnalyzedInput", "cmd_analyze", "load_page_source"]
