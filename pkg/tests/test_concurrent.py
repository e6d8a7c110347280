import pytest

from reapsnap.engine.concurrent import run_concurrent
from reapsnap.engine.params import EngineParams
from reapsnap.engine.report import RestoreMode
from reapsnap.engine.session import cold_invocation, finalize_record
from reapsnap.snapshot.image import create_synthetic_image
from reapsnap.storage.calibration import MIB
from reapsnap.storage.model import StorageModel
from reapsnap.workload.sequence import AccessSequence


@pytest.fixture(scope="module")
def image(tmp_path_factory):
    root = tmp_path_factory.mktemp("concurrent") / "img"
    return create_synthetic_image(root, num_pages=1024, content_seed=11, vmm_state_len=MIB)


def _sequences(count, pages=range(1, 300)):
    return [AccessSequence.from_pages([p for p in pages if (p + i) % 7], compute_us=500) for i in range(count)]


@pytest.fixture(scope="module")
def recorded(image):
    session, _ = cold_invocation(
        image, RestoreMode.RECORD, StorageModel(), EngineParams(), AccessSequence.from_pages(range(1, 300))
    )
    return finalize_record(session)


@pytest.mark.parametrize("mode", [RestoreMode.LAZY, RestoreMode.PREFETCH, RestoreMode.RECORD])
def test_single_instance_matches_cold_invocation(image, storage, params, recorded, mode):
    seq = _sequences(1)[0]
    extra = recorded if mode is RestoreMode.PREFETCH else ()
    _, expected = cold_invocation(image, mode, storage, params, seq, *extra)
    result = run_concurrent(image, storage, params, mode, [seq], *extra)
    (report,) = result.reports
    assert report.faults_served == expected.faults_served
    assert report.prefetched_unused == expected.prefetched_unused
    for name, value in expected.breakdown().items():
        assert report.breakdown()[name] == pytest.approx(value, rel=1e-6, abs=1e-6)
    assert result.makespan_us == pytest.approx(expected.total_us, rel=1e-6)


def test_latency_grows_with_instances(image, storage, params, recorded):
    means = []
    for count in (1, 4, 16):
        result = run_concurrent(image, storage, params, RestoreMode.LAZY, _sequences(count))
        assert result.count == count
        means.append(result.mean_latency_us)
    assert means[0] < means[1] < means[2]


def test_prefetch_beats_lazy_under_contention(image, storage, params, recorded):
    lazy = run_concurrent(image, storage, params, RestoreMode.LAZY, _sequences(8))
    prefetch = run_concurrent(image, storage, params, RestoreMode.PREFETCH, _sequences(8), *recorded)
    assert prefetch.mean_latency_us < lazy.mean_latency_us
    assert prefetch.aggregate_bandwidth_mbps > lazy.aggregate_bandwidth_mbps


def test_concurrent_runs_are_deterministic(image, storage, params, recorded):
    first = run_concurrent(image, storage, params, RestoreMode.PREFETCH, _sequences(6), *recorded)
    second = run_concurrent(image, storage, params, RestoreMode.PREFETCH, _sequences(6), *recorded)
    assert [r.to_json() for r in first.reports] == [r.to_json() for r in second.reports]
    assert first.completion_us == second.completion_us


def test_disk_serves_every_requested_byte(image, storage, params, recorded):
    result = run_concurrent(image, storage, params, RestoreMode.PREFETCH, _sequences(5), *recorded)
    vmm_bytes = 5 * image.vmm_state_len
    assert result.disk_bytes_served == pytest.approx(result.bytes_read + vmm_bytes, rel=1e-9)
    assert result.peak_rate_mbps <= storage.peak_mbps * (1 + 1e-9)


def test_empty_batch(image, storage, params):
    result = run_concurrent(image, storage, params, RestoreMode.LAZY, [])
    assert result.count == 0
    assert result.makespan_us == 0
    assert result.aggregate_bandwidth_mbps == 0
