import numpy as np
import pytest

from reapsnap.core.errors import OffsetOutOfBoundsError, SessionStateError
from reapsnap.engine.policy import WorkingSetPolicy, assess_working_set
from reapsnap.engine.report import FetchStrategy, RestoreMode
from reapsnap.engine.session import (
    CALIBRATION_PAGE,
    TRACE_FILE,
    WS_FILE,
    access_page,
    calibrate_base,
    cold_invocation,
    count_regions,
    finalize_record,
    run_invocation,
    start_session,
)
from reapsnap.snapshot.content import regenerate_page
from reapsnap.snapshot.image import create_synthetic_image
from reapsnap.snapshot.trace import PageTrace, read_trace
from reapsnap.snapshot.working_set import build_working_set, read_working_set
from reapsnap.storage.calibration import MIB
from reapsnap.workload.sequence import Access, AccessKind, AccessSequence, Phase

SERIAL_FAULT_US = 4096 / (43 * MIB) * 1e6
LOAD_VMM_US = 45_000 + 3 * MIB / (533 * MIB) * 1e6


@pytest.fixture(scope="module")
def image(tmp_path_factory):
    root = tmp_path_factory.mktemp("engine") / "img"
    return create_synthetic_image(root, num_pages=4096, page_size=4096, content_seed=7, vmm_state_len=3 * MIB)


def _seq(pages, conn=0, compute_us=0.0, write=()):
    accesses = [
        Access(Phase.CONN if i < conn else Phase.BODY, p, AccessKind.WRITE if p in write else AccessKind.READ)
        for i, p in enumerate(pages)
    ]
    return AccessSequence(accesses, compute_us)


def _recorded(image, storage, params, pages):
    session, _ = cold_invocation(image, RestoreMode.RECORD, storage, params, _seq(pages))
    return finalize_record(session)


def test_load_vmm_component(image, storage, params):
    session = start_session(image, RestoreMode.LAZY, storage, params)
    assert session.timers["load_vmm"] == pytest.approx(LOAD_VMM_US)
    assert 49_000 < session.clock_us < 52_000
    assert not session.residency.any()


def test_prefetch_8mb_working_set(image, storage, params):
    trace, ws = _recorded(image, storage, params, range(1, 2049))
    assert len(trace) == 2048
    assert ws.payload_bytes == 8 * MIB
    session = start_session(image, RestoreMode.PREFETCH, storage, params, trace, ws)
    assert session.timers["ws_fetch"] == pytest.approx(15_009.4, rel=1e-4)
    # One contiguous region: one install call plus the per-page cost.
    assert session.timers["ws_install"] == pytest.approx(5 + 2048)
    assert session.residency[1:2049].all()
    assert not session.residency[0]


def test_prefetch_with_empty_trace_behaves_like_lazy(image, storage, params):
    trace = PageTrace.from_pages([], 4096, image.image_id)
    ws = build_working_set(image, trace)
    session = start_session(image, RestoreMode.PREFETCH, storage, params, trace, ws)
    assert session.timers["ws_fetch"] == storage.min_latency_us
    assert session.timers["ws_install"] == 0
    assert not session.residency.any()
    calibrate_base(session)
    report = run_invocation(session, _seq([5, 6, 7]))
    assert report.faults_served == 3
    assert report.prefetched_pages == 0


def test_calibration_marks_page_zero_only(image, storage, params):
    for mode in (RestoreMode.RECORD, RestoreMode.LAZY):
        session = start_session(image, mode, storage, params)
        calibrate_base(session)
        assert session.base_offset_calibrated
        assert np.flatnonzero(session.residency).tolist() == [CALIBRATION_PAGE]
        assert session.fault_log == []
        assert session.faults_served == 0


def test_calibration_ordering_errors(image, storage, params):
    session = start_session(image, RestoreMode.LAZY, storage, params)
    with pytest.raises(SessionStateError):
        access_page(session, 3)
    calibrate_base(session)
    with pytest.raises(SessionStateError, match="already calibrated"):
        calibrate_base(session)
    access_page(session, 3)
    with pytest.raises(SessionStateError):
        calibrate_base(session)


def test_invocation_requires_calibration(image, storage, params):
    session = start_session(image, RestoreMode.LAZY, storage, params)
    with pytest.raises(SessionStateError):
        run_invocation(session, _seq([1]))


def test_fault_latencies(image, storage, params):
    lazy = start_session(image, RestoreMode.LAZY, storage, params)
    calibrate_base(lazy)
    assert access_page(lazy, 10) == pytest.approx(SERIAL_FAULT_US)
    assert access_page(lazy, 10) == params.resident_access_us == 0

    record = start_session(image, RestoreMode.RECORD, storage, params)
    calibrate_base(record)
    assert access_page(record, 10) == pytest.approx(25 + SERIAL_FAULT_US + 1)
    assert access_page(record, 10) == 0
    assert record.fault_log == [10 * 4096]


def test_prefetched_page_has_no_fault_cost(image, storage, params):
    trace, ws = _recorded(image, storage, params, [100, 101, 300])
    session = start_session(image, RestoreMode.PREFETCH, storage, params, trace, ws)
    calibrate_base(session)
    assert access_page(session, 101) == 0
    assert session.faults_served == 0


def test_out_of_bounds_access(image, storage, params):
    session = start_session(image, RestoreMode.LAZY, storage, params)
    calibrate_base(session)
    with pytest.raises(OffsetOutOfBoundsError):
        access_page(session, 4096)
    with pytest.raises(OffsetOutOfBoundsError):
        run_invocation(session, _seq([1, 4096]))


def test_write_faults_copy_into_private_memory(image, storage, params):
    before = image.page(20).tobytes()
    session, report = cold_invocation(
        image, RestoreMode.LAZY, storage, params, _seq([20, 21], write={20})
    )
    assert session.memory.is_private(20)
    assert not session.memory.is_private(21)
    assert session.page_bytes(20) == before
    assert image.page(20).tobytes() == before
    # Writes cost the same as reads.
    assert report.fault_service_us == pytest.approx(3 * SERIAL_FAULT_US)


def test_report_breakdown_and_accounting(image, storage, params):
    trace, ws = _recorded(image, storage, params, [1, 2, 3, 50, 51])
    seq = _seq([1, 2, 9, 3, 4, 9], conn=2, compute_us=1000)
    _, report = cold_invocation(image, RestoreMode.PREFETCH, storage, params, seq, trace, ws)
    assert report.total_us == pytest.approx(sum(report.breakdown().values()))
    assert report.faults_served == 2
    assert report.pages_touched == 5
    assert report.prefetched_pages == 5
    assert report.prefetched_unused == 2
    assert report.compute_us == 1000
    assert report.connection_restore_us == params.connection_rtt_us
    assert report.fetch is FetchStrategy.BULK_BYPASS


def test_lazy_faults_equal_pages_touched(image, storage, params):
    seq = _seq([5, 6, 5, 7, 0, 8], conn=1)
    _, report = cold_invocation(image, RestoreMode.LAZY, storage, params, seq)
    assert report.faults_served == report.pages_touched == 4
    assert report.connection_restore_us == pytest.approx(4000 + SERIAL_FAULT_US)
    assert report.fault_service_us == pytest.approx(4 * SERIAL_FAULT_US)
    assert report.effective_read_bandwidth_mbps == pytest.approx(43)


def test_full_reuse_means_no_residual_faults(image, storage, params):
    pages = list(range(200, 260)) + [7, 9]
    trace, ws = _recorded(image, storage, params, pages)
    _, report = cold_invocation(image, RestoreMode.PREFETCH, storage, params, _seq(pages), trace, ws)
    assert report.faults_served == 0
    assert report.prefetched_unused == 0


def test_finalize_record_persists_artifacts(image, storage, params, tmp_path):
    session, _ = cold_invocation(image, RestoreMode.RECORD, storage, params, _seq(range(1, 2049)))
    trace, ws = finalize_record(session, tmp_path / "rec")
    assert read_trace(tmp_path / "rec" / TRACE_FILE) == trace
    loaded = read_working_set(tmp_path / "rec" / WS_FILE, trace)
    assert (tmp_path / "rec" / WS_FILE).stat().st_size == 4096 + 8 * MIB
    assert np.array_equal(loaded.pages, ws.pages)
    assert trace.image_id == image.image_id


def test_finalize_record_of_calibration_only(image, storage, params):
    trace, ws = _recorded(image, storage, params, [0])
    assert len(trace) == 0
    assert ws.payload_bytes == 0


def test_finalize_record_errors(image, storage, params):
    session, _ = cold_invocation(image, RestoreMode.LAZY, storage, params, _seq([1]))
    with pytest.raises(SessionStateError):
        finalize_record(session)
    record = start_session(image, RestoreMode.RECORD, storage, params)
    with pytest.raises(SessionStateError):
        finalize_record(record)


def test_record_is_slower_than_lazy(image, storage, params):
    seq = _seq(range(1, 500), conn=100, compute_us=1000)
    _, lazy = cold_invocation(image, RestoreMode.LAZY, storage, params, seq)
    _, record = cold_invocation(image, RestoreMode.RECORD, storage, params, seq)
    assert record.total_us > lazy.total_us
    assert record.monitor_overhead_us == pytest.approx(500 * 26)


def test_session_pairing_errors(image, storage, params, tmp_path):
    trace, ws = _recorded(image, storage, params, [1, 2])
    with pytest.raises(SessionStateError):
        start_session(image, RestoreMode.PREFETCH, storage, params)
    with pytest.raises(SessionStateError):
        start_session(image, RestoreMode.PREFETCH, storage, params, trace, None)
    with pytest.raises(SessionStateError):
        start_session(image, RestoreMode.RECORD, storage, params, trace)
    other = create_synthetic_image(tmp_path / "other", num_pages=4096, content_seed=8)
    with pytest.raises(SessionStateError):
        start_session(other, RestoreMode.PREFETCH, storage, params, trace, ws)
    _, ws_other = _recorded(image, storage, params, [1, 3])
    with pytest.raises(SessionStateError):
        start_session(image, RestoreMode.PREFETCH, storage, params, trace, ws_other)


def test_content_correctness_and_mode_equivalence(image, storage, params):
    rng = np.random.default_rng(99)
    pages = rng.choice(np.arange(1, 4096), size=300, replace=False).tolist()
    seq = _seq(pages + pages[:20], conn=50, write=set(pages[::7]))
    trace, ws = _recorded(image, storage, params, pages[:150] + [4000])
    resident = []
    for mode, args in (
        (RestoreMode.LAZY, ()),
        (RestoreMode.RECORD, ()),
        (RestoreMode.PREFETCH, (trace, ws)),
    ):
        session, _ = cold_invocation(image, mode, storage, params, seq, *args)
        for page in pages:
            assert session.page_bytes(page) == regenerate_page(7, page, 4096)
        resident.append(set(np.flatnonzero(session.touched).tolist()))
    assert resident[0] == resident[1] == resident[2] == set(pages)


def test_reports_are_deterministic(image, storage, params):
    trace, ws = _recorded(image, storage, params, range(10, 90))
    seq = _seq(list(range(10, 60)) + [700, 701], conn=10, compute_us=123.5)
    first = cold_invocation(image, RestoreMode.PREFETCH, storage, params, seq, trace, ws)[1]
    second = cold_invocation(image, RestoreMode.PREFETCH, storage, params, seq, trace, ws)[1]
    assert first.to_json() == second.to_json()


@pytest.mark.parametrize(
    "fetch, fetch_us",
    [
        (FetchStrategy.BULK, 8 / 275 * 1e6),
        (FetchStrategy.BULK_BYPASS, 8 / 533 * 1e6),
        (FetchStrategy.PARALLEL, 8 / 360 * 1e6 + 2048 * 25),
    ],
)
def test_fetch_strategies(image, storage, params, fetch, fetch_us):
    trace, ws = _recorded(image, storage, params, range(1, 2049))
    session = start_session(image, RestoreMode.PREFETCH, storage, params, trace, ws, fetch=fetch)
    assert session.timers["ws_fetch"] == pytest.approx(fetch_us, rel=1e-6)


def test_count_regions():
    assert count_regions(PageTrace.from_pages([], 4096)) == 0
    assert count_regions(PageTrace.from_pages([1, 2, 3, 10, 11, 5], 4096)) == 3
    # Adjacent pages in different trace positions are separate install calls.
    assert count_regions(PageTrace.from_pages([2, 9, 3], 4096)) == 3


def test_policy_flags_stale_working_set(image, storage, params):
    trace, ws = _recorded(image, storage, params, range(1, 101))
    _, fresh = cold_invocation(image, RestoreMode.PREFETCH, storage, params, _seq(range(1, 101)), trace, ws)
    verdict = assess_working_set(fresh)
    assert not verdict.stale
    assert verdict.usage == 1.0

    drifted = _seq(list(range(1, 31)) + list(range(1000, 1080)))
    _, report = cold_invocation(image, RestoreMode.PREFETCH, storage, params, drifted, trace, ws)
    verdict = assess_working_set(report, WorkingSetPolicy(max_residual_ratio=0.5, min_usage=0.5))
    assert verdict.stale
    assert verdict.residual_ratio == pytest.approx(0.8)
    assert verdict.usage == pytest.approx(0.3)
    assert "residual" in verdict.reason


def test_policy_rejects_non_prefetch_reports(image, storage, params):
    _, report = cold_invocation(image, RestoreMode.LAZY, storage, params, _seq([1]))
    with pytest.raises(ValueError):
        assess_working_set(report)
