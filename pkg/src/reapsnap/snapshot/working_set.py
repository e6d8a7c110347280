"""WS file: traced pages copied into one compact, page-aligned chunk.

Layout: magic ``RPWS`` | u16 version | u16 reserved | u32 page_size | u64 count
| zero padding up to page_size | count x page_size page bytes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from reapsnap.core.errors import HeaderFieldError, TruncatedFileError
from reapsnap.snapshot.image import SnapshotImage
from reapsnap.snapshot.trace import HEADER, FileHeader, PageTrace, atomic_write_bytes, parse_header

logger = logging.getLogger(__name__)

WS_MAGIC = b"RPWS"


def payload_offset(page_size: int) -> int:
    return -(-HEADER.size // page_size) * page_size


@dataclass(eq=False)
class WorkingSetFile:
    trace: PageTrace
    pages: np.ndarray

    @property
    def page_size(self) -> int:
        return self.trace.page_size

    @property
    def count(self) -> int:
        return int(self.pages.shape[0])

    @property
    def payload_bytes(self) -> int:
        return int(self.pages.size)

    def to_bytes(self) -> bytes:
        header = FileHeader(WS_MAGIC, self.page_size, self.count).pack()
        padding = b"\0" * (payload_offset(self.page_size) - len(header))
        return header + padding + np.ascontiguousarray(self.pages, dtype=np.uint8).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, trace: PageTrace) -> WorkingSetFile:
        header = parse_header(data, WS_MAGIC, expected_page_size=trace.page_size)
        start = payload_offset(header.page_size)
        if len(data) < start:
            raise TruncatedFileError(f"WS header padding needs {start} bytes, file has {len(data)}")
        if any(data[HEADER.size:start]):
            raise HeaderFieldError("WS header padding is not zeroed")
        expected = header.count * header.page_size
        payload = len(data) - start
        if payload < expected:
            raise TruncatedFileError(f"WS declares {expected} payload bytes, file holds {payload}")
        if payload > expected:
            raise HeaderFieldError(f"WS declares {expected} payload bytes, file holds {payload}")
        if header.count != len(trace):
            raise HeaderFieldError(
                f"WS holds {header.count} pages but its trace has {len(trace)} offsets"
            )
        pages = np.frombuffer(data, dtype=np.uint8, offset=start).reshape(
            header.count, header.page_size
        )
        return cls(trace=trace, pages=pages)


@dataclass(frozen=True)
class WsValidation:
    ok: bool
    first_mismatch_index: int | None = None
    structural_error: str | None = None


def build_working_set(image: SnapshotImage, trace: PageTrace) -> WorkingSetFile:
    """Copy the traced pages out of the image, in trace order."""
    if trace.page_size != image.page_size:
        raise HeaderFieldError(
            f"trace page_size {trace.page_size} does not match image page_size {image.page_size}"
        )
    trace.validate(image.num_pages)
    image.verify()
    pages = np.array(image.pages[trace.pages], dtype=np.uint8, copy=True).reshape(
        len(trace), image.page_size
    )
    return WorkingSetFile(trace=trace, pages=pages)


def validate_working_set(
    image: SnapshotImage, trace: PageTrace, ws: WorkingSetFile
) -> WsValidation:
    if ws.pages.ndim != 2 or ws.pages.shape[1] != image.page_size:
        return WsValidation(ok=False, structural_error="WS page size does not match image")
    if ws.count != len(trace):
        return WsValidation(
            ok=False,
            structural_error=f"WS holds {ws.count} pages, trace lists {len(trace)}",
        )
    trace.validate(image.num_pages)
    if not len(trace):
        return WsValidation(ok=True)
    differs = np.any(ws.pages != image.pages[trace.pages], axis=1)
    if differs.any():
        return WsValidation(ok=False, first_mismatch_index=int(np.argmax(differs)))
    return WsValidation(ok=True)


def write_working_set(ws: WorkingSetFile, path: str | Path) -> Path:
    target = atomic_write_bytes(path, ws.to_bytes())
    logger.debug("Wrote WS file of %d pages to %s", ws.count, target)
    return target


def read_working_set(path: str | Path, trace: PageTrace, *, bypass: bool = False) -> WorkingSetFile:
    """Load a WS file paired with its trace; ``bypass`` reads around the page cache."""
    if bypass:
        from reapsnap.storage.direct_io import read_direct

        data = read_direct(path)
    else:
        data = Path(path).read_bytes()
    return WorkingSetFile.from_bytes(data, trace)


__all__ = [
    "WS_MAGIC",
    "WorkingSetFile",
    "WsValidation",
    "build_working_set",
    "payload_offset",
    "read_working_set",
    "validate_working_set",
    "write_working_set",
]
