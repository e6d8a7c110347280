import numpy as np
import pytest

from reapsnap.core.errors import (
    HeaderFieldError,
    ImageError,
    OffsetOutOfBoundsError,
    SnapshotFormatError,
    TruncatedFileError,
)
from reapsnap.snapshot.content import regenerate_page
from reapsnap.snapshot.trace import HEADER, PageTrace
from reapsnap.snapshot.working_set import (
    WorkingSetFile,
    build_working_set,
    payload_offset,
    read_working_set,
    validate_working_set,
    write_working_set,
)


def test_ws_bytes_match_regenerated_pages(small_image):
    trace = PageTrace.from_pages([0, 2], 4096)
    ws = build_working_set(small_image, trace)
    expected = regenerate_page(42, 0, 4096) + regenerate_page(42, 2, 4096)
    assert ws.pages.tobytes() == expected


def test_ws_follows_trace_order(small_image):
    trace = PageTrace.from_pages([9, 3, 30], 4096)
    ws = build_working_set(small_image, trace)
    assert ws.pages[0].tobytes() == regenerate_page(42, 9, 4096)
    assert ws.pages[2].tobytes() == regenerate_page(42, 30, 4096)


def test_empty_trace_gives_empty_payload(small_image, tmp_path):
    trace = PageTrace.from_pages([], 4096)
    ws = build_working_set(small_image, trace)
    assert ws.payload_bytes == 0
    path = write_working_set(ws, tmp_path / "ws.rpws")
    assert path.stat().st_size == payload_offset(4096)
    assert validate_working_set(small_image, trace, ws).ok


def test_ws_file_layout_is_page_aligned(small_image, tmp_path):
    trace = PageTrace.from_pages([1, 5, 6], 4096)
    ws = build_working_set(small_image, trace)
    path = write_working_set(ws, tmp_path / "ws.rpws")
    data = path.read_bytes()
    assert data[:4] == b"RPWS"
    assert len(data) == 4096 + 3 * 4096
    assert not any(data[HEADER.size:4096])
    assert data[4096:8192] == regenerate_page(42, 1, 4096)
    assert ws.payload_bytes == trace.footprint_bytes


def test_round_trip_is_byte_exact(small_image, tmp_path):
    rng = np.random.default_rng(5)
    for _ in range(1000):
        pages = rng.choice(64, size=int(rng.integers(0, 64)), replace=False)
        trace = PageTrace.from_pages(pages, 4096, small_image.image_id)
        data = build_working_set(small_image, trace).to_bytes()
        again = WorkingSetFile.from_bytes(data, trace)
        assert again.to_bytes() == data
        assert validate_working_set(small_image, trace, again).ok
    path = write_working_set(again, tmp_path / "ws.rpws")
    assert path.read_bytes() == data
    assert read_working_set(path, trace).to_bytes() == data


def test_any_flipped_byte_is_located(small_image):
    rng = np.random.default_rng(17)
    for _ in range(1000):
        pages = rng.choice(64, size=int(rng.integers(1, 64)), replace=False)
        trace = PageTrace.from_pages(pages, 4096)
        corrupted = build_working_set(small_image, trace).pages.copy()
        index = int(rng.integers(0, len(pages)))
        corrupted[index, int(rng.integers(0, 4096))] ^= int(rng.integers(1, 256))
        report = validate_working_set(small_image, trace, WorkingSetFile(trace, corrupted))
        assert not report.ok
        assert report.first_mismatch_index == index
        assert report.structural_error is None


def test_rewrite_replaces_file_in_place(small_image, tmp_path):
    target = tmp_path / "out" / "ws.rpws"
    first = build_working_set(small_image, PageTrace.from_pages([1, 2, 3], 4096))
    second = build_working_set(small_image, PageTrace.from_pages([7], 4096))
    write_working_set(first, target)
    write_working_set(second, target)
    assert target.read_bytes() == second.to_bytes()
    assert [p.name for p in target.parent.iterdir()] == ["ws.rpws"]


def test_flipped_byte_reports_first_mismatch(small_image):
    trace = PageTrace.from_pages([4, 5, 6], 4096)
    ws = build_working_set(small_image, trace)
    pages = ws.pages.copy()
    pages[1, 17] ^= 0x01
    pages[2, 0] ^= 0x01
    report = validate_working_set(small_image, trace, WorkingSetFile(trace, pages))
    assert not report.ok
    assert report.first_mismatch_index == 1
    assert report.structural_error is None


def test_truncated_ws_is_structural(small_image):
    trace = PageTrace.from_pages([4, 5, 6], 4096)
    ws = build_working_set(small_image, trace)
    report = validate_working_set(small_image, trace, WorkingSetFile(trace, ws.pages[:2]))
    assert not report.ok
    assert report.first_mismatch_index is None
    assert report.structural_error


def test_truncated_ws_file_rejected(small_image):
    trace = PageTrace.from_pages([4, 5], 4096)
    data = build_working_set(small_image, trace).to_bytes()
    with pytest.raises(TruncatedFileError):
        WorkingSetFile.from_bytes(data[:-4096], trace)


def test_ws_paired_with_wrong_trace(small_image):
    trace = PageTrace.from_pages([4, 5], 4096)
    data = build_working_set(small_image, trace).to_bytes()
    with pytest.raises(HeaderFieldError):
        WorkingSetFile.from_bytes(data, PageTrace.from_pages([4], 4096))


def test_ws_header_corruption_detected(small_image):
    trace = PageTrace.from_pages([4, 5], 4096)
    data = build_working_set(small_image, trace).to_bytes()
    for position in range(HEADER.size):
        corrupted = bytearray(data)
        corrupted[position] ^= 0x40
        with pytest.raises(SnapshotFormatError):
            WorkingSetFile.from_bytes(bytes(corrupted), trace)


def test_out_of_bounds_trace(small_image):
    with pytest.raises(OffsetOutOfBoundsError):
        build_working_set(small_image, PageTrace.from_pages([64], 4096))


def test_corrupted_image_rejected(small_image):
    data = bytearray(small_image.guest_mem_path.read_bytes())
    data[0] ^= 0xFF
    small_image.guest_mem_path.write_bytes(bytes(data))
    small_image._verified = False
    with pytest.raises(ImageError):
        build_working_set(small_image, PageTrace.from_pages([1], 4096))


def test_ws_size_equals_footprint(small_image):
    trace = PageTrace.from_pages(range(1, 33), 4096)
    assert build_working_set(small_image, trace).payload_bytes == trace.footprint_bytes == 32 * 4096
