from pathlib import Path

import numpy as np
import pytest

from reapsnap.analysis.metrics import contiguity_stats, reuse_stats
from reapsnap.core.errors import ConfigError, OffsetOutOfBoundsError, UnalignedOffsetError, WorkloadError
from reapsnap.snapshot.trace import HEADER, TRACE_MAGIC, PageTrace, write_trace
from reapsnap.workload.generator import FIRST_WORKLOAD_PAGE, derive_invocation, import_trace, synthesize_layout
from reapsnap.workload.profile import FunctionProfile, load_presets
from reapsnap.workload.sequence import (
    Access,
    AccessKind,
    AccessSequence,
    Phase,
    format_sequence,
    parse_sequence,
    read_sequence,
    write_sequence,
)

PRESETS_FILE = Path(__file__).resolve().parents[1] / "config" / "presets.jsonc"
NUM_PAGES = 65536


@pytest.fixture(scope="module")
def presets():
    return load_presets(PRESETS_FILE)


def _profile(**overrides):
    values = dict(
        name="synthetic",
        ws_pages=1000,
        infra_pages=200,
        mean_run_length=2.5,
        unique_fraction=0.05,
        compute_us=100.0,
        layout_seed=5,
    )
    values.update(overrides)
    return FunctionProfile(**values)


# -- presets ---------------------------------------------------------------


def test_shipped_presets(presets):
    assert len(presets) == 10
    hello = presets["helloworld"]
    assert hello.ws_pages == 2048
    assert hello.unique_pages == 61
    assert hello.stable_pages == 1987
    assert hello.infra_pages == 1434
    assert presets["cnn_serving"].ws_pages == 25344
    mean_mb = sum(p.ws_pages for p in presets.values()) * 4096 / (1 << 20) / len(presets)
    assert mean_mb == pytest.approx(24)
    assert "ws_mb" in hello.stated


def test_invalid_presets_are_rejected(tmp_path):
    path = tmp_path / "presets.jsonc"
    path.write_text('{"presets": {"bad": {"ws_pages": 10, "infra_pages": 20, "unique_fraction": 2}}}')
    with pytest.raises(ConfigError) as excinfo:
        load_presets(path)
    assert len(excinfo.value.problems) == 2
    path.write_text('{"presets": {}}')
    with pytest.raises(ConfigError):
        load_presets(path)


# -- layouts ---------------------------------------------------------------


def test_layout_is_deterministic_and_in_bounds(presets):
    first = synthesize_layout(presets["helloworld"], NUM_PAGES)
    second = synthesize_layout(presets["helloworld"], NUM_PAGES)
    assert np.array_equal(first.pages, second.pages)
    assert len(first) == 1987
    assert np.unique(first.pages).size == len(first)
    assert first.pages.min() >= FIRST_WORKLOAD_PAGE
    assert first.pages.max() < NUM_PAGES
    assert int(first.run_lengths.sum()) == len(first)


def test_layouts_differ_between_functions(presets):
    hello = synthesize_layout(presets["helloworld"], NUM_PAGES)
    chameleon = synthesize_layout(presets["chameleon"], NUM_PAGES)
    assert not np.array_equal(hello.pages[:100], chameleon.pages[:100])


def test_unit_run_length_gives_singletons():
    layout = synthesize_layout(_profile(mean_run_length=1.0), 8192)
    stats = contiguity_stats(layout.pages)
    assert stats.mean_run_length == 1.0
    assert stats.max_run_length == 1


@pytest.mark.parametrize("name, low, high", [("helloworld", 2.25, 2.75), ("lr_training", 4.5, 5.5)])
def test_layout_contiguity_tracks_profile(presets, name, low, high):
    layout = synthesize_layout(presets[name], NUM_PAGES)
    stats = contiguity_stats(layout.pages)
    assert low <= stats.mean_run_length <= high
    # Runs are placed apart, so every drawn run is a maximal run.
    assert stats.run_count == layout.run_lengths.size


def test_layout_that_cannot_fit():
    with pytest.raises(WorkloadError):
        synthesize_layout(_profile(ws_pages=5000, infra_pages=0), 1024)
    with pytest.raises(WorkloadError):
        synthesize_layout(_profile(mean_run_length=0.5), 8192)


def test_empty_working_set():
    layout = synthesize_layout(_profile(ws_pages=0, infra_pages=0), 1024)
    assert len(layout) == 0
    seq = derive_invocation(_profile(ws_pages=0, infra_pages=0), layout, 1)
    assert len(seq) == 0


# -- invocations -----------------------------------------------------------


def test_invocation_structure(presets):
    profile = presets["helloworld"]
    layout = synthesize_layout(profile, NUM_PAGES)
    seq = derive_invocation(profile, layout, 1)
    seq.validate(NUM_PAGES)
    assert len(seq) == 2048
    assert seq.conn_count == 1434
    assert seq.compute_us == profile.compute_us
    assert [a.page for a in seq.accesses[:1987]] == layout.pages.tolist()
    fresh = seq.accesses[1987:]
    assert all(a.kind is AccessKind.WRITE for a in fresh)
    assert not set(a.page for a in fresh) & set(layout.pages.tolist())
    assert 0 not in seq.page_set()


def test_reuse_between_invocations(presets):
    profile = presets["helloworld"]
    layout = synthesize_layout(profile, NUM_PAGES)
    first = derive_invocation(profile, layout, 1)
    second = derive_invocation(profile, layout, 2, exclude=first.page_array())
    stats = reuse_stats(first, second)
    assert stats.unique_b == profile.unique_pages
    assert stats.same == profile.stable_pages
    assert stats.reuse_fraction == pytest.approx(1987 / 2048)
    assert stats.reuse_fraction >= 0.97


def test_input_heavy_function_reuses_less(presets):
    profile = presets["image_rotate"]
    layout = synthesize_layout(profile, NUM_PAGES)
    first = derive_invocation(profile, layout, 1)
    second = derive_invocation(profile, layout, 2, exclude=first.page_array())
    fraction = reuse_stats(first, second).reuse_fraction
    assert 0.75 <= fraction < 0.8


def test_no_unique_pages_means_identical_invocations():
    profile = _profile(unique_fraction=0.0)
    layout = synthesize_layout(profile, 8192)
    assert derive_invocation(profile, layout, 1) == derive_invocation(profile, layout, 99)


def test_same_seed_same_invocation(presets):
    profile = presets["pyaes"]
    layout = synthesize_layout(profile, NUM_PAGES)
    assert derive_invocation(profile, layout, 4) == derive_invocation(profile, layout, 4)


def test_invocation_errors():
    profile = _profile(unique_fraction=0.5)
    layout = synthesize_layout(profile, 2048)
    with pytest.raises(WorkloadError):
        derive_invocation(profile, layout, -1)
    with pytest.raises(WorkloadError):
        derive_invocation(profile, layout, 1, exclude=np.arange(2048))


# -- sequence files and imports --------------------------------------------


def test_sequence_text_round_trip(tmp_path):
    seq = AccessSequence(
        [Access(Phase.CONN, 17, AccessKind.READ), Access(Phase.BODY, 42, AccessKind.WRITE)], 1000
    )
    assert format_sequence(seq) == "compute_us=1000\nconn,17,read\nbody,42,write\n"
    path = write_sequence(seq, tmp_path / "seq.txt")
    assert read_sequence(path) == seq


@pytest.mark.parametrize(
    "text",
    [
        "conn,1,read\n",
        "compute_us=1\ncompute_us=2\n",
        "compute_us=1\nbody,1\n",
        "compute_us=1\nbody,x,read\n",
        "compute_us=1\nside,1,read\n",
        "compute_us=1\nbody,1,read\nconn,2,read\n",
        "compute_us=-5\n",
    ],
)
def test_bad_sequence_text(text):
    with pytest.raises(WorkloadError):
        parse_sequence(text)


def test_sequence_bounds():
    with pytest.raises(OffsetOutOfBoundsError):
        AccessSequence.from_pages([3, 70]).validate(64)


def test_import_trace_file(tmp_path):
    path = write_trace(PageTrace(4096, np.array([0, 4096], dtype=np.uint64)), tmp_path / "t.rptr")
    seq = import_trace(path, 4096)
    assert seq.page_array().tolist() == [0, 1]
    assert all(a.phase is Phase.BODY for a in seq.accesses)


def test_import_rejects_unaligned_trace(tmp_path):
    path = tmp_path / "bad.rptr"
    header = HEADER.pack(TRACE_MAGIC, 1, 0, 4096, 1)
    path.write_bytes(header + np.array([100], dtype="<u8").tobytes())
    with pytest.raises(UnalignedOffsetError):
        import_trace(path, 4096)


def test_import_sequence_file(tmp_path):
    path = tmp_path / "seq.txt"
    path.write_text("# captured\ncompute_us=250.5\nconn,3,read\nbody,9,write\n")
    seq = import_trace(path, 4096)
    assert seq.compute_us == 250.5
    assert seq.conn_count == 1
    path.write_text("compute_us=1\nbody,9,read\nconn,3,read\n")
    with pytest.raises(WorkloadError):
        import_trace(path, 4096)
