"""Deterministic synthetic guest-memory content.

Every 8-byte lane of a page is a keyed 64-bit mix of (seed, page index, lane),
so any page can be regenerated on its own for verification.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_VMM_KEY = 0x564D4D5F53544154


def _mix64(values: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 array arithmetic wraps silently.
    x = values + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _MUL1
    x = (x ^ (x >> np.uint64(27))) * _MUL2
    return x ^ (x >> np.uint64(31))


def _seed_key(seed: int) -> np.uint64:
    return _mix64(np.array([seed & _MASK64], dtype=np.uint64))[0]


def generate_pages(seed: int, start: int, count: int, page_size: int) -> np.ndarray:
    """Return a (count, page_size) uint8 array holding pages start..start+count-1."""
    if count <= 0:
        return np.empty((0, page_size), dtype=np.uint8)
    lanes = page_size // 8
    key = _seed_key(seed)
    page_keys = _mix64(np.arange(start, start + count, dtype=np.uint64) ^ key)
    lane_salt = np.arange(lanes, dtype=np.uint64) * _GOLDEN
    words = _mix64(page_keys[:, None] ^ lane_salt[None, :])
    return words.astype("<u8", copy=False).view(np.uint8).reshape(count, page_size)


def regenerate_page(seed: int, index: int, page_size: int) -> bytes:
    return generate_pages(seed, index, 1, page_size)[0].tobytes()


def vmm_state_bytes(seed: int, length: int) -> bytes:
    """Opaque VMM-state filler; only its length matters to the engine."""
    if length <= 0:
        return b""
    pages = -(-length // 4096)
    blob = generate_pages(seed ^ _VMM_KEY, 0, pages, 4096)
    return blob.tobytes()[:length]


__all__ = ["generate_pages", "regenerate_page", "vmm_state_bytes"]
