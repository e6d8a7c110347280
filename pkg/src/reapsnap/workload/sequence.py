"""Per-invocation page access sequences and their text format.

    compute_us=1000
    conn,17,read
    body,42,write
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from reapsnap.core.errors import OffsetOutOfBoundsError, WorkloadError


class Phase(str, Enum):
    CONN = "conn"
    BODY = "body"


class AccessKind(str, Enum):
    READ = "read"
    WRITE = "write"


class Access(NamedTuple):
    phase: Phase
    page: int
    kind: AccessKind


@dataclass
class AccessSequence:
    accesses: list[Access] = field(default_factory=list)
    compute_us: float = 0.0

    @classmethod
    def from_pages(
        cls,
        pages: Iterable[int],
        *,
        phase: Phase = Phase.BODY,
        kind: AccessKind = AccessKind.READ,
        compute_us: float = 0.0,
    ) -> AccessSequence:
        return cls([Access(phase, int(p), kind) for p in pages], compute_us)

    def __len__(self) -> int:
        return len(self.accesses)

    def page_array(self) -> np.ndarray:
        return np.fromiter((a.page for a in self.accesses), dtype=np.int64, count=len(self.accesses))

    def first_touch_pages(self) -> np.ndarray:
        """Distinct pages in the order they are first touched."""
        pages = self.page_array()
        _, first = np.unique(pages, return_index=True)
        return pages[np.sort(first)]

    def page_set(self) -> set[int]:
        return {a.page for a in self.accesses}

    @property
    def conn_count(self) -> int:
        return sum(1 for a in self.accesses if a.phase is Phase.CONN)

    def validate(self, num_pages: int | None = None) -> None:
        seen_body = False
        for position, access in enumerate(self.accesses):
            if access.phase is Phase.BODY:
                seen_body = True
            elif seen_body:
                raise WorkloadError(f"conn access at position {position} follows body accesses")
            if access.page < 0 or (num_pages is not None and access.page >= num_pages):
                raise OffsetOutOfBoundsError(
                    f"access {position} touches page {access.page} outside 0..{num_pages}"
                )
        if self.compute_us < 0:
            raise WorkloadError(f"compute_us must be >= 0, got {self.compute_us}")


def format_sequence(seq: AccessSequence) -> str:
    compute = seq.compute_us
    text = str(int(compute)) if float(compute).is_integer() else repr(float(compute))
    lines = [f"compute_us={text}"]
    lines.extend(f"{a.phase.value},{a.page},{a.kind.value}" for a in seq.accesses)
    return "\n".join(lines) + "\n"


def parse_sequence(text: str, source: str = "<string>") -> AccessSequence:
    compute_us: float | None = None
    accesses: list[Access] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{number}"
        if line.startswith("compute_us="):
            if compute_us is not None:
                raise WorkloadError(f"{where}: duplicate compute_us header")
            try:
                compute_us = float(line.split("=", 1)[1])
            except ValueError as exc:
                raise WorkloadError(f"{where}: bad compute_us value") from exc
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise WorkloadError(f"{where}: expected phase,page_index,kind")
        try:
            accesses.append(Access(Phase(parts[0]), int(parts[1]), AccessKind(parts[2])))
        except ValueError as exc:
            raise WorkloadError(f"{where}: {exc}") from exc
    if compute_us is None:
        raise WorkloadError(f"{source}: missing compute_us header")
    seq = AccessSequence(accesses, compute_us)
    seq.validate()
    return seq


def write_sequence(seq: AccessSequence, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(format_sequence(seq), encoding="utf-8")
    return target


def read_sequence(path: str | Path) -> AccessSequence:
    target = Path(path)
    return parse_sequence(target.read_text(encoding="utf-8"), source=str(target))


__all__ = [
    "Access",
    "AccessKind",
    "AccessSequence",
    "Phase",
    "format_sequence",
    "parse_sequence",
    "read_sequence",
    "write_sequence",
]
