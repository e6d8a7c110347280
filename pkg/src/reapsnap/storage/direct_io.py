"""Page-cache bypass reads (O_DIRECT) and cache eviction helpers."""

from __future__ import annotations

import errno
import logging
import mmap
import os
from pathlib import Path

from reapsnap.core.errors import UnsupportedPatternError

logger = logging.getLogger(__name__)

DIRECT_ALIGNMENT = 4096


def bypass_supported() -> bool:
    return hasattr(os, "O_DIRECT")


def _open_direct(path: Path) -> int:
    if not bypass_supported():
        raise UnsupportedPatternError("cache-bypass reads are unsupported: no O_DIRECT on this platform")
    try:
        return os.open(path, os.O_RDONLY | os.O_DIRECT)
    except OSError as exc:
        if exc.errno == errno.EINVAL:
            raise UnsupportedPatternError(
                f"filesystem holding {path} rejects O_DIRECT"
            ) from exc
        raise


def read_direct(path: str | Path, offset: int = 0, length: int | None = None) -> bytes:
    """Read ``length`` bytes at ``offset`` without going through the page cache.

    The offset must be aligned; the length is rounded up internally and the
    result trimmed to what the file actually holds.
    """
    target = Path(path)
    if offset % DIRECT_ALIGNMENT:
        raise ValueError(f"direct read offset {offset} is not {DIRECT_ALIGNMENT}-aligned")
    size = target.stat().st_size
    if length is None:
        length = max(0, size - offset)
    if length == 0:
        return b""
    aligned = -(-length // DIRECT_ALIGNMENT) * DIRECT_ALIGNMENT
    fd = _open_direct(target)
    try:
        with mmap.mmap(-1, aligned) as buffer:
            try:
                got = os.preadv(fd, [buffer], offset)
            except OSError as exc:
                if exc.errno == errno.EINVAL:
                    raise UnsupportedPatternError(
                        f"O_DIRECT read of {target} rejected by the kernel"
                    ) from exc
                raise
            return bytes(buffer[: min(got, length)])
    finally:
        os.close(fd)


def drop_cache(path: str | Path) -> bool:
    """Ask the kernel to evict ``path`` from the page cache; False when unsupported."""
    if not hasattr(os, "posix_fadvise"):
        logger.debug("posix_fadvise unavailable; page cache for %s left as is", path)
        return False
    fd = os.open(path, os.O_RDONLY)
    try:
        os.posix_fadvise(fd, 0, 0, os.POSIX_FADV_DONTNEED)
    finally:
        os.close(fd)
    return True


__all__ = ["DIRECT_ALIGNMENT", "bypass_supported", "drop_cache", "read_direct"]
