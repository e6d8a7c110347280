"""Working-set characterization: contiguity, reuse and footprint."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from reapsnap.core.errors import AnalysisError
from reapsnap.snapshot.trace import PageTrace
from reapsnap.storage.calibration import MIB
from reapsnap.workload.sequence import AccessSequence

PageSource = Union[PageTrace, AccessSequence, np.ndarray, list, set, tuple]


def page_set(source: PageSource) -> np.ndarray:
    """Sorted distinct page indices of a trace, sequence or plain collection."""
    if isinstance(source, PageTrace):
        pages = source.pages
    elif isinstance(source, AccessSequence):
        pages = source.page_array()
    else:
        pages = np.fromiter((int(p) for p in source), dtype=np.int64)
    return np.unique(pages.astype(np.int64))


@dataclass(frozen=True)
class ContiguityStats:
    run_count: int
    mean_run_length: float | None
    max_run_length: int
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def total_pages(self) -> int:
        return sum(length * count for length, count in self.histogram.items())

    def to_dict(self) -> dict:
        return {
            "run_count": self.run_count,
            "mean_run_length": self.mean_run_length,
            "max_run_length": self.max_run_length,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def run_lengths(pages: np.ndarray) -> np.ndarray:
    """Lengths of maximal runs of adjacent indices in a sorted distinct array."""
    if pages.size == 0:
        return np.empty(0, dtype=np.int64)
    breaks = np.flatnonzero(np.diff(pages) != 1) + 1
    edges = np.concatenate([[0], breaks, [pages.size]])
    return np.diff(edges)


def contiguity_stats(source: PageSource) -> ContiguityStats:
    """Runs over guest-physical adjacency; fault order is irrelevant."""
    lengths = run_lengths(page_set(source))
    if lengths.size == 0:
        return ContiguityStats(run_count=0, mean_run_length=None, max_run_length=0)
    values, counts = np.unique(lengths, return_counts=True)
    return ContiguityStats(
        run_count=int(lengths.size),
        mean_run_length=float(lengths.sum()) / int(lengths.size),
        max_run_length=int(lengths.max()),
        histogram={int(v): int(c) for v, c in zip(values, counts)},
    )


@dataclass(frozen=True)
class ReuseStats:
    same: int
    unique_a: int
    unique_b: int

    @property
    def reuse_fraction(self) -> float:
        """Share of B's pages already present in A."""
        total = self.same + self.unique_b
        return self.same / total if total else 1.0

    @property
    def jaccard(self) -> float:
        union = self.same + self.unique_a + self.unique_b
        return self.same / union if union else 1.0

    def to_dict(self) -> dict:
        return {
            "same": self.same,
            "unique_a": self.unique_a,
            "unique_b": self.unique_b,
            "reuse_fraction": self.reuse_fraction,
            "jaccard": self.jaccard,
        }


def reuse_stats(a: PageSource, b: PageSource) -> ReuseStats:
    if isinstance(a, PageTrace) and isinstance(b, PageTrace) and a.page_size != b.page_size:
        raise AnalysisError(f"page sizes differ: {a.page_size} vs {b.page_size}")
    pages_a = page_set(a)
    pages_b = page_set(b)
    same = int(np.intersect1d(pages_a, pages_b, assume_unique=True).size)
    return ReuseStats(same=same, unique_a=int(pages_a.size) - same, unique_b=int(pages_b.size) - same)


def footprint(source: PageSource, page_size: int | None = None) -> float:
    """Working-set size in MB (2^20 bytes)."""
    if page_size is None:
        if not isinstance(source, PageTrace):
            raise AnalysisError("page_size is required unless a trace is given")
        page_size = source.page_size
    return int(page_set(source).size) * page_size / MIB


__all__ = [
    "ContiguityStats",
    "ReuseStats",
    "contiguity_stats",
    "footprint",
    "page_set",
    "reuse_stats",
    "run_lengths",
]
