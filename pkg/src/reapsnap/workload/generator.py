"""Synthetic working-set layouts and per-invocation access sequences."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from reapsnap.core.errors import WorkloadError
from reapsnap.snapshot.trace import TRACE_MAGIC, read_trace
from reapsnap.workload.profile import FunctionProfile
from reapsnap.workload.sequence import (
    Access,
    AccessKind,
    AccessSequence,
    Phase,
    read_sequence,
)

logger = logging.getLogger(__name__)

FIRST_WORKLOAD_PAGE = 1
_PLACEMENT_ATTEMPTS = 8
_UNIQUE_STREAM = 0x75AE


@dataclass(frozen=True)
class Layout:
    """Ordered stable pages of one function: runs in touch order, each ascending."""

    function: str
    num_pages: int
    pages: np.ndarray
    run_lengths: np.ndarray

    def __len__(self) -> int:
        return int(self.pages.shape[0])


def _draw_run_lengths(rng: np.random.Generator, total: int, mean: float) -> np.ndarray:
    if total == 0:
        return np.empty(0, dtype=np.int64)
    p = 1.0 / mean
    lengths = np.empty(0, dtype=np.int64)
    while lengths.sum() < total:
        batch = rng.geometric(p, size=int(total / mean * 1.25) + 16).astype(np.int64)
        lengths = np.concatenate([lengths, batch])
    cumulative = np.cumsum(lengths)
    last = int(np.searchsorted(cumulative, total))
    lengths = lengths[: last + 1].copy()
    lengths[-1] -= int(cumulative[last]) - total
    return lengths


def synthesize_layout(profile: FunctionProfile, num_pages: int) -> Layout:
    """Place the profile's stable pages as non-adjacent runs scattered over guest memory.

    Runs never touch each other, so every drawn run stays a maximal run. Page 0
    is reserved for base-offset calibration and never placed.
    """
    problems = profile.validate()
    if problems:
        raise WorkloadError("; ".join(problems))
    cells = num_pages - FIRST_WORKLOAD_PAGE
    if profile.ws_pages > cells:
        raise WorkloadError(
            f"{profile.name}: {profile.ws_pages} pages do not fit in {cells} usable pages"
        )
    stable = profile.stable_pages
    rng = np.random.default_rng([profile.layout_seed, profile.ws_pages, num_pages])

    for _attempt in range(_PLACEMENT_ATTEMPTS):
        lengths = _draw_run_lengths(rng, stable, profile.mean_run_length)
        runs = int(lengths.shape[0])
        spare = cells - stable - max(runs - 1, 0)
        if spare >= 0:
            break
    else:
        raise WorkloadError(
            f"{profile.name}: cannot place {stable} pages as separated runs in {cells} pages"
        )

    if runs == 0:
        empty = np.empty(0, dtype=np.int64)
        return Layout(profile.name, num_pages, empty, empty)

    picks = np.sort(rng.choice(spare + runs, size=runs, replace=False))
    gaps_before = picks - np.arange(runs)
    prefix = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    starts = FIRST_WORKLOAD_PAGE + gaps_before + prefix + np.arange(runs)

    order = rng.permutation(runs)
    ordered_starts = starts[order]
    ordered_lengths = lengths[order]
    run_origin = np.repeat(np.cumsum(ordered_lengths) - ordered_lengths, ordered_lengths)
    pages = np.repeat(ordered_starts, ordered_lengths) + (np.arange(stable) - run_origin)
    return Layout(profile.name, num_pages, pages.astype(np.int64), ordered_lengths)


def derive_invocation(
    profile: FunctionProfile,
    layout: Layout,
    input_seed: int,
    *,
    exclude: Iterable[int] | np.ndarray | None = None,
) -> AccessSequence:
    """Build one invocation: infra pages, the rest of the stable set, then fresh input pages.

    ``exclude`` keeps the fresh pages away from pages touched by earlier
    invocations (for example a recorded working set).
    """
    if input_seed < 0:
        raise WorkloadError(f"input_seed must be >= 0, got {input_seed}")
    unique = profile.unique_pages
    stable_pages = layout.pages
    infra = min(profile.infra_pages, len(layout))

    candidates = np.setdiff1d(
        np.arange(FIRST_WORKLOAD_PAGE, layout.num_pages, dtype=np.int64), stable_pages
    )
    if exclude is not None:
        excluded = np.fromiter(exclude, dtype=np.int64) if not isinstance(exclude, np.ndarray) else exclude
        candidates = np.setdiff1d(candidates, excluded.astype(np.int64))
    if candidates.shape[0] < unique:
        raise WorkloadError(
            f"{profile.name}: need {unique} input pages but only {candidates.shape[0]} are free"
        )
    rng = np.random.default_rng([profile.layout_seed, input_seed, _UNIQUE_STREAM])
    fresh = rng.choice(candidates, size=unique, replace=False) if unique else candidates[:0]

    accesses = [Access(Phase.CONN, int(p), AccessKind.READ) for p in stable_pages[:infra]]
    accesses += [Access(Phase.BODY, int(p), AccessKind.READ) for p in stable_pages[infra:]]
    accesses += [Access(Phase.BODY, int(p), AccessKind.WRITE) for p in fresh]
    return AccessSequence(accesses, profile.compute_us)


def import_trace(path: str | Path, page_size: int) -> AccessSequence:
    """Read an externally captured trace file or access-sequence file."""
    target = Path(path)
    with open(target, "rb") as handle:
        magic = handle.read(len(TRACE_MAGIC))
    if magic == TRACE_MAGIC:
        trace = read_trace(target, expected_page_size=page_size)
        return AccessSequence.from_pages(trace.pages.tolist())
    seq = read_sequence(target)
    logger.debug("Imported %d accesses from %s", len(seq), target)
    return seq


__all__ = [
    "FIRST_WORKLOAD_PAGE",
    "Layout",
    "derive_invocation",
    "import_trace",
    "synthesize_layout",
]
