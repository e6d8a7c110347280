"""Trace file: the ordered first-touch offsets recorded for one function.

Layout (little-endian): magic ``RPTR`` | u16 version | u16 reserved | u32 page_size
| u64 count | count x u64 offsets.
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from reapsnap.core.errors import (
    BadMagicError,
    DuplicateOffsetError,
    HeaderFieldError,
    OffsetOutOfBoundsError,
    TruncatedFileError,
    UnalignedOffsetError,
    VersionMismatchError,
)

logger = logging.getLogger(__name__)

TRACE_MAGIC = b"RPTR"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHHIQ")


@dataclass(frozen=True)
class FileHeader:
    magic: bytes
    page_size: int
    count: int

    def pack(self) -> bytes:
        return HEADER.pack(self.magic, FORMAT_VERSION, 0, self.page_size, self.count)


def parse_header(
    data: bytes, magic: bytes, *, expected_page_size: int | None = None
) -> FileHeader:
    """Decode and check the common header shared by trace and WS files."""
    if len(data) < HEADER.size:
        raise TruncatedFileError(f"header needs {HEADER.size} bytes, file has {len(data)}")
    found, version, reserved, page_size, count = HEADER.unpack_from(data)
    if found != magic:
        raise BadMagicError(f"expected magic {magic!r}, found {found!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"unsupported format version {version}")
    if reserved != 0:
        raise HeaderFieldError(f"reserved header field is {reserved}, expected 0")
    if page_size < 512 or page_size & (page_size - 1):
        raise HeaderFieldError(f"page_size {page_size} is not a power of two >= 512")
    if expected_page_size is not None and page_size != expected_page_size:
        raise HeaderFieldError(
            f"page_size {page_size} does not match expected {expected_page_size}"
        )
    return FileHeader(magic=found, page_size=page_size, count=count)


@dataclass(eq=False)
class PageTrace:
    page_size: int
    offsets: np.ndarray
    image_id: str = ""

    def __post_init__(self) -> None:
        self.offsets = np.ascontiguousarray(self.offsets, dtype=np.uint64).reshape(-1)

    @classmethod
    def from_pages(
        cls, pages: Iterable[int] | np.ndarray, page_size: int, image_id: str = ""
    ) -> PageTrace:
        indices = np.asarray(list(pages) if not isinstance(pages, np.ndarray) else pages)
        return cls(page_size, indices.astype(np.uint64) * np.uint64(page_size), image_id)

    def __len__(self) -> int:
        return int(self.offsets.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PageTrace):
            return NotImplemented
        return self.page_size == other.page_size and np.array_equal(self.offsets, other.offsets)

    @property
    def pages(self) -> np.ndarray:
        return (self.offsets // np.uint64(self.page_size)).astype(np.int64)

    @property
    def footprint_bytes(self) -> int:
        return len(self) * self.page_size

    def validate(self, num_pages: int | None = None) -> None:
        if np.any(self.offsets % np.uint64(self.page_size)):
            bad = int(self.offsets[np.argmax(self.offsets % np.uint64(self.page_size) != 0)])
            raise UnalignedOffsetError(f"offset {bad} is not a multiple of {self.page_size}")
        if np.unique(self.offsets).shape[0] != len(self):
            raise DuplicateOffsetError("trace contains duplicate offsets")
        if num_pages is not None and len(self):
            limit = num_pages * self.page_size
            if int(self.offsets.max()) >= limit:
                raise OffsetOutOfBoundsError(
                    f"offset {int(self.offsets.max())} beyond image of {limit} bytes"
                )

    def to_bytes(self) -> bytes:
        self.validate()
        header = FileHeader(TRACE_MAGIC, self.page_size, len(self))
        return header.pack() + self.offsets.astype("<u8").tobytes()

    @classmethod
    def from_bytes(
        cls, data: bytes, *, expected_page_size: int | None = None, image_id: str = ""
    ) -> PageTrace:
        header = parse_header(data, TRACE_MAGIC, expected_page_size=expected_page_size)
        payload = len(data) - HEADER.size
        if payload < header.count * 8:
            raise TruncatedFileError(
                f"trace declares {header.count} offsets but holds {payload // 8}"
            )
        if payload > header.count * 8:
            raise HeaderFieldError(
                f"trace declares {header.count} offsets but carries {payload} payload bytes"
            )
        offsets = np.frombuffer(data, dtype="<u8", count=header.count, offset=HEADER.size)
        trace = cls(header.page_size, offsets.astype(np.uint64), image_id)
        trace.validate()
        return trace


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    """Write ``data`` next to ``path`` and rename it into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, target)
    return target


def write_trace(trace: PageTrace, path: str | Path) -> Path:
    target = atomic_write_bytes(path, trace.to_bytes())
    logger.debug("Wrote trace of %d offsets to %s", len(trace), target)
    return target


def read_trace(
    path: str | Path, *, expected_page_size: int | None = None, image_id: str = ""
) -> PageTrace:
    return PageTrace.from_bytes(
        Path(path).read_bytes(), expected_page_size=expected_page_size, image_id=image_id
    )


__all__ = [
    "FORMAT_VERSION",
    "FileHeader",
    "HEADER",
    "PageTrace",
    "TRACE_MAGIC",
    "atomic_write_bytes",
    "parse_header",
    "read_trace",
    "write_trace",
]
