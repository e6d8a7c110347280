import numpy as np
import pytest

from reapsnap.core.errors import ImageError, OffsetOutOfBoundsError
from reapsnap.snapshot.content import generate_pages, regenerate_page
from reapsnap.snapshot.image import checksum_file, create_synthetic_image, load_image


def test_minimal_image(tmp_path):
    image = create_synthetic_image(tmp_path / "one", num_pages=1, page_size=4096, content_seed=0)
    assert image.guest_mem_path.stat().st_size == 4096
    assert image.vmm_state_path.stat().st_size == 0
    assert image.checksum == checksum_file(image.guest_mem_path)


def test_page_content_is_regenerable(tmp_path):
    image = create_synthetic_image(tmp_path / "img", num_pages=16, page_size=4096, content_seed=42)
    assert image.page(5).tobytes() == regenerate_page(42, 5, 4096)
    # Chunked generation agrees with single-page generation.
    assert np.array_equal(generate_pages(42, 3, 4, 4096)[2], image.pages[5])


def test_pages_differ_by_seed_and_index():
    a = regenerate_page(1, 0, 4096)
    assert a != regenerate_page(1, 1, 4096)
    assert a != regenerate_page(2, 0, 4096)
    assert a == regenerate_page(1, 0, 4096)


def test_vmm_state_length(tmp_path):
    image = create_synthetic_image(tmp_path / "img", num_pages=4, vmm_state_len=5000)
    assert image.vmm_state_path.stat().st_size == 5000
    assert load_image(image.directory).vmm_state_len == 5000


def test_load_round_trip_and_verify(tmp_path):
    created = create_synthetic_image(tmp_path / "img", num_pages=8, page_size=1024, content_seed=9)
    loaded = load_image(created.directory)
    assert (loaded.page_size, loaded.num_pages, loaded.content_seed) == (1024, 8, 9)
    assert loaded.image_id == created.image_id
    loaded.verify()


def test_checksum_mismatch_detected(tmp_path):
    created = create_synthetic_image(tmp_path / "img", num_pages=8)
    data = bytearray(created.guest_mem_path.read_bytes())
    data[100] ^= 0xFF
    created.guest_mem_path.write_bytes(bytes(data))
    with pytest.raises(ImageError, match="checksum mismatch"):
        load_image(created.directory).verify()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"num_pages": 0},
        {"num_pages": 4, "page_size": 256},
        {"num_pages": 4, "page_size": 3000},
        {"num_pages": 4, "vmm_state_len": -1},
        {"num_pages": 1 << 40},
    ],
)
def test_invalid_geometry_rejected(tmp_path, kwargs):
    with pytest.raises(ImageError):
        create_synthetic_image(tmp_path / "bad", **kwargs)


def test_truncated_guest_memory_rejected(tmp_path):
    created = create_synthetic_image(tmp_path / "img", num_pages=4)
    with open(created.guest_mem_path, "r+b") as handle:
        handle.truncate(4096 * 3)
    with pytest.raises(ImageError):
        load_image(created.directory)


def test_page_index_bounds(small_image):
    with pytest.raises(OffsetOutOfBoundsError):
        small_image.page(64)
