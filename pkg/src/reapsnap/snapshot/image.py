from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from reapsnap.core.errors import ImageError, OffsetOutOfBoundsError
from reapsnap.snapshot.content import generate_pages, vmm_state_bytes

logger = logging.getLogger(__name__)

GUEST_MEM_FILE = "guest_mem.bin"
VMM_STATE_FILE = "vmm_state.bin"
META_FILE = "meta.txt"

MIN_PAGE_SIZE = 512
MAX_IMAGE_BYTES = 1 << 40
_WRITE_CHUNK_PAGES = 1024
_HASH_CHUNK_BYTES = 16 << 20


def is_valid_page_size(page_size: int) -> bool:
    return page_size >= MIN_PAGE_SIZE and page_size & (page_size - 1) == 0


@dataclass
class SnapshotImage:
    """A guest-memory file plus its opaque VMM-state blob, stored as a directory."""

    directory: Path
    page_size: int
    num_pages: int
    content_seed: int
    vmm_state_len: int
    checksum: int
    _verified: bool = field(default=False, repr=False, compare=False)
    _pages: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def image_id(self) -> str:
        return f"{self.checksum:016x}"

    @property
    def size_bytes(self) -> int:
        return self.num_pages * self.page_size

    @property
    def guest_mem_path(self) -> Path:
        return self.directory / GUEST_MEM_FILE

    @property
    def vmm_state_path(self) -> Path:
        return self.directory / VMM_STATE_FILE

    @property
    def pages(self) -> np.ndarray:
        """Read-only (num_pages, page_size) view over guest_mem.bin."""
        if self._pages is None:
            self._pages = np.memmap(
                self.guest_mem_path,
                dtype=np.uint8,
                mode="r",
                shape=(self.num_pages, self.page_size),
            )
        return self._pages

    def page(self, index: int) -> np.ndarray:
        if not 0 <= index < self.num_pages:
            raise OffsetOutOfBoundsError(
                f"page {index} outside image of {self.num_pages} pages"
            )
        return self.pages[index]

    def compute_checksum(self) -> int:
        return checksum_file(self.guest_mem_path)

    def verify(self) -> None:
        """Raise ImageError unless guest_mem matches the recorded checksum."""
        if self._verified:
            return
        actual = self.compute_checksum()
        if actual != self.checksum:
            raise ImageError(
                f"checksum mismatch for {self.guest_mem_path}: "
                f"expected {self.checksum:016x}, got {actual:016x}"
            )
        self._verified = True


def checksum_file(path: Path) -> int:
    digest = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as handle:
        while chunk := handle.read(_HASH_CHUNK_BYTES):
            digest.update(chunk)
    return int.from_bytes(digest.digest(), "little")


def create_synthetic_image(
    directory: str | Path,
    num_pages: int,
    page_size: int = 4096,
    content_seed: int = 0,
    vmm_state_len: int = 0,
) -> SnapshotImage:
    """Write a deterministic snapshot image and return its handle."""
    if num_pages < 1:
        raise ImageError(f"num_pages must be >= 1, got {num_pages}")
    if not is_valid_page_size(page_size):
        raise ImageError(f"page_size must be a power of two >= {MIN_PAGE_SIZE}, got {page_size}")
    if num_pages * page_size > MAX_IMAGE_BYTES:
        raise ImageError(f"image of {num_pages} x {page_size} bytes exceeds {MAX_IMAGE_BYTES}")
    if vmm_state_len < 0:
        raise ImageError(f"vmm_state_len must be >= 0, got {vmm_state_len}")

    root = Path(directory)
    digest = hashlib.blake2b(digest_size=8)
    try:
        root.mkdir(parents=True, exist_ok=True)
        with open(root / GUEST_MEM_FILE, "wb") as handle:
            for start in range(0, num_pages, _WRITE_CHUNK_PAGES):
                count = min(_WRITE_CHUNK_PAGES, num_pages - start)
                chunk = generate_pages(content_seed, start, count, page_size).tobytes()
                digest.update(chunk)
                handle.write(chunk)
        (root / VMM_STATE_FILE).write_bytes(vmm_state_bytes(content_seed, vmm_state_len))
        checksum = int.from_bytes(digest.digest(), "little")
        _write_meta(root / META_FILE, page_size, num_pages, content_seed, checksum)
    except OSError as exc:
        raise ImageError(f"failed to write snapshot image to {root}: {exc}") from exc

    logger.info(
        "Created snapshot image %s (%d pages x %d bytes, seed=%d)",
        root,
        num_pages,
        page_size,
        content_seed,
    )
    return SnapshotImage(
        directory=root,
        page_size=page_size,
        num_pages=num_pages,
        content_seed=content_seed,
        vmm_state_len=vmm_state_len,
        checksum=checksum,
        _verified=True,
    )


def load_image(directory: str | Path) -> SnapshotImage:
    root = Path(directory)
    meta_path = root / META_FILE
    if not meta_path.exists():
        raise ImageError(f"missing {META_FILE} in {root}")
    meta = _read_meta(meta_path)
    try:
        page_size = int(meta["page_size"])
        num_pages = int(meta["num_pages"])
        content_seed = int(meta["content_seed"])
        checksum = int(meta["checksum"], 16)
    except (KeyError, ValueError) as exc:
        raise ImageError(f"invalid metadata in {meta_path}: {exc}") from exc
    if num_pages < 1 or not is_valid_page_size(page_size):
        raise ImageError(f"invalid geometry in {meta_path}: {num_pages} x {page_size}")

    guest_mem = root / GUEST_MEM_FILE
    vmm_state = root / VMM_STATE_FILE
    if not guest_mem.exists() or not vmm_state.exists():
        raise ImageError(f"incomplete snapshot image in {root}")
    actual_size = guest_mem.stat().st_size
    if actual_size != num_pages * page_size:
        raise ImageError(
            f"{guest_mem} holds {actual_size} bytes, expected {num_pages * page_size}"
        )
    return SnapshotImage(
        directory=root,
        page_size=page_size,
        num_pages=num_pages,
        content_seed=content_seed,
        vmm_state_len=vmm_state.stat().st_size,
        checksum=checksum,
    )


def _write_meta(path: Path, page_size: int, num_pages: int, seed: int, checksum: int) -> None:
    lines = [
        f"page_size={page_size}",
        f"num_pages={num_pages}",
        f"content_seed={seed}",
        f"checksum={checksum:016x}",
    ]
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _read_meta(path: Path) -> dict[str, str]:
    meta: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    return meta


__all__ = [
    "SnapshotImage",
    "checksum_file",
    "create_synthetic_image",
    "is_valid_page_size",
    "load_image",
]
