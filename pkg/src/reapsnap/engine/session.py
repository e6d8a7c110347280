"""Restore sessions: one monitor's view of a single instance.

A session moves through created -> restored -> calibrated -> finished. Every
timed operation is a step generator (see ``reapsnap.engine.steps``) so the
same residency bookkeeping drives both the single-session path and the
shared-disk concurrent runner.
"""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path

import numpy as np

from reapsnap.core.errors import OffsetOutOfBoundsError, SessionStateError
from reapsnap.engine.params import EngineParams
from reapsnap.engine.report import COMPONENTS, FetchStrategy, RestoreMode, RestoreReport
from reapsnap.engine.steps import Cpu, Read, Steps, run_steps
from reapsnap.snapshot.image import SnapshotImage
from reapsnap.snapshot.trace import PageTrace, write_trace
from reapsnap.snapshot.working_set import WorkingSetFile, build_working_set, write_working_set
from reapsnap.storage.calibration import MIB
from reapsnap.storage.model import StorageModel
from reapsnap.workload.sequence import AccessKind, AccessSequence, Phase

logger = logging.getLogger(__name__)

CALIBRATION_PAGE = 0
TRACE_FILE = "trace.rptr"
WS_FILE = "ws.rpws"


class SessionState(str, Enum):
    CREATED = "created"
    RESTORED = "restored"
    CALIBRATED = "calibrated"
    RUNNING = "running"
    FINISHED = "finished"


def count_regions(trace: PageTrace) -> int:
    """Maximal runs of consecutive trace entries that are adjacent in guest memory."""
    if not len(trace):
        return 0
    pages = trace.pages
    return 1 + int(np.count_nonzero(np.diff(pages) != 1))


class GuestMemory:
    """Instance-private view of guest pages; writes copy, the image stays untouched."""

    def __init__(self, page_size: int) -> None:
        self.page_size = page_size
        self._pages: dict[int, np.ndarray | bytearray] = {}

    def install(self, index: int, source: np.ndarray) -> None:
        self._pages[index] = source

    def write(self, index: int) -> None:
        page = self._pages[index]
        if not isinstance(page, bytearray):
            self._pages[index] = bytearray(page.tobytes())

    def read(self, index: int) -> bytes:
        page = self._pages[index]
        return bytes(page) if isinstance(page, bytearray) else page.tobytes()

    def is_private(self, index: int) -> bool:
        return isinstance(self._pages.get(index), bytearray)

    def __contains__(self, index: int) -> bool:
        return index in self._pages

    def __len__(self) -> int:
        return len(self._pages)


class RestoreSession:
    def __init__(
        self,
        image: SnapshotImage,
        mode: RestoreMode,
        storage: StorageModel,
        params: EngineParams,
        trace: PageTrace | None = None,
        ws: WorkingSetFile | None = None,
        *,
        fetch: FetchStrategy = FetchStrategy.BULK_BYPASS,
        session_id: int = 0,
        function: str = "",
    ) -> None:
        mode = RestoreMode(mode)
        if mode is RestoreMode.RECORD and trace is not None:
            raise SessionStateError("record sessions must start without an existing trace")
        if mode is RestoreMode.PREFETCH:
            if trace is None or ws is None:
                raise SessionStateError("prefetch sessions need both a trace and a WS file")
            if trace.image_id and trace.image_id != image.image_id:
                raise SessionStateError(
                    f"trace belongs to image {trace.image_id}, not {image.image_id}"
                )
            if trace.page_size != image.page_size:
                raise SessionStateError("trace page size differs from the image page size")
            if ws.trace != trace or ws.count != len(trace):
                raise SessionStateError("WS file is not paired with the given trace")
            trace.validate(image.num_pages)

        self.image = image
        self.mode = mode
        self.storage = storage
        self.params = params
        self.trace = trace if mode is RestoreMode.PREFETCH else None
        self.ws = ws if mode is RestoreMode.PREFETCH else None
        self.fetch = FetchStrategy(fetch)
        self.session_id = session_id
        self.function = function

        self.residency = np.zeros(image.num_pages, dtype=bool)
        self.touched = np.zeros(image.num_pages, dtype=bool)
        self.memory = GuestMemory(image.page_size)
        self.fault_log: list[int] = []
        # page indices faulted in by lazy and prefetch sessions, in fault order
        self.residual_log: list[int] = []
        self.base_offset_calibrated = False
        self.clock_us = 0.0
        self.timers = dict.fromkeys(COMPONENTS, 0.0)
        self.faults_served = 0
        self.state = SessionState.CREATED

        self._forwarded = mode is not RestoreMode.LAZY
        self._fault_bytes = 0
        self._fault_read_us = 0.0
        self._fetch_bytes = 0
        self._vmm_bytes = 0
        self._monitor_us = 0.0
        self._prefetched: np.ndarray = np.empty(0, dtype=np.int64)

    # -- bookkeeping -----------------------------------------------------

    def _charge(self, component: str, us: float) -> None:
        self.timers[component] += us
        self.clock_us += us

    def _require(self, *states: SessionState) -> None:
        if self.state not in states:
            allowed = ", ".join(s.value for s in states)
            raise SessionStateError(f"session is {self.state.value}; expected {allowed}")

    def _check_page(self, page: int) -> None:
        if not 0 <= page < self.image.num_pages:
            raise OffsetOutOfBoundsError(
                f"page {page} outside image of {self.image.num_pages} pages"
            )

    def _make_resident(self, page: int, source: np.ndarray) -> None:
        self.residency[page] = True
        self.memory.install(page, source)

    @property
    def bytes_read(self) -> int:
        """Guest-memory bytes pulled from storage (faults plus working-set fetch)."""
        return self._fault_bytes + self._fetch_bytes

    def page_bytes(self, page: int) -> bytes:
        return self.memory.read(page)

    # -- step generators -------------------------------------------------

    def restore_steps(self) -> Steps[None]:
        self._require(SessionState.CREATED)
        params = self.params
        load = (yield Cpu(params.vmm_fixed_overhead_us))
        if self.image.vmm_state_len:
            load += (yield Read(self.image.vmm_state_len, self.storage.bulk_rate_mbps))
            self._vmm_bytes = self.image.vmm_state_len
        self._charge("load_vmm", load)

        if self.mode is RestoreMode.PREFETCH:
            yield from self._prefetch_steps()
        self.state = SessionState.RESTORED
        logger.debug(
            "Session %d restored in %s mode at %.1f us", self.session_id, self.mode.value, self.clock_us
        )

    def _prefetch_steps(self) -> Steps[None]:
        assert self.trace is not None and self.ws is not None
        trace, ws, params = self.trace, self.ws, self.params
        page_size = self.image.page_size
        count = len(trace)
        nbytes = count * page_size

        if self.fetch is FetchStrategy.PARALLEL:
            k = params.parallel_fetch_concurrency
            fetch_us = (yield Read(nbytes, self.storage.throughput(page_size, k, False)))
            if count:
                fetch_us += (yield Cpu(count * params.fault_forwarding_us))
            install_cost = count * (params.install_call_us + params.per_page_install_us)
        else:
            bypass = self.fetch is FetchStrategy.BULK_BYPASS
            rate = self.storage.throughput(max(nbytes, 1), 1, bypass)
            fetch_us = (yield Read(nbytes, rate))
            install_cost = (
                count_regions(trace) * params.install_call_us
                + count * params.per_page_install_us
            )
        self._fetch_bytes = nbytes
        self._charge("ws_fetch", fetch_us)

        install_us = (yield Cpu(install_cost)) if install_cost else 0.0
        self._charge("ws_install", install_us)
        self._monitor_us += install_us

        pages = trace.pages
        for slot, page in enumerate(pages.tolist()):
            self._make_resident(page, ws.pages[slot])
        self._prefetched = pages

    def _fault_steps(self, page: int) -> Steps[float]:
        """Serve one missing page; returns the fault latency."""
        params = self.params
        page_size = self.image.page_size
        latency = 0.0
        if self._forwarded and params.fault_forwarding_us:
            latency += (yield Cpu(params.fault_forwarding_us))
        read_us = (yield Read(page_size, self.storage.fault_rate_mbps, fault=True))
        latency += read_us
        if self._forwarded and params.per_page_install_us:
            latency += (yield Cpu(params.per_page_install_us))
        if self._forwarded:
            self._monitor_us += latency - read_us
        self._fault_bytes += page_size
        self._fault_read_us += read_us
        self._make_resident(page, self.image.pages[page])
        return latency

    def calibration_steps(self) -> Steps[None]:
        if self.base_offset_calibrated:
            raise SessionStateError("base offset already calibrated")
        self._require(SessionState.RESTORED)
        if self.residency[CALIBRATION_PAGE]:
            latency = self.params.resident_access_us
            if latency:
                latency = (yield Cpu(latency))
        else:
            latency = yield from self._fault_steps(CALIBRATION_PAGE)
        self._charge("fault_service", latency)
        self.base_offset_calibrated = True
        self.state = SessionState.CALIBRATED

    def access_steps(
        self, page: int, kind: AccessKind = AccessKind.READ, phase: Phase = Phase.BODY
    ) -> Steps[float]:
        self._require(SessionState.CALIBRATED, SessionState.RUNNING)
        self._check_page(page)
        if self.residency[page]:
            latency = self.params.resident_access_us
            if latency:
                latency = (yield Cpu(latency))
        else:
            latency = yield from self._fault_steps(page)
            if page != CALIBRATION_PAGE:
                self.faults_served += 1
                if self.mode is RestoreMode.RECORD:
                    self.fault_log.append(page * self.image.page_size)
                else:
                    self.residual_log.append(page)
        if kind is AccessKind.WRITE:
            self.memory.write(page)
        if page != CALIBRATION_PAGE:
            self.touched[page] = True
        self._charge("connection_restore" if phase is Phase.CONN else "fault_service", latency)
        self.state = SessionState.RUNNING
        return latency

    def invocation_steps(self, seq: AccessSequence) -> Steps[RestoreReport]:
        if self.state is SessionState.RESTORED:
            raise SessionStateError("calibrate the base offset before running an invocation")
        self._require(SessionState.CALIBRATED, SessionState.RUNNING)
        seq.validate(self.image.num_pages)
        self.state = SessionState.RUNNING
        if self.params.connection_rtt_us:
            rtt = (yield Cpu(self.params.connection_rtt_us))
            self._charge("connection_restore", rtt)
        for access in seq.accesses:
            yield from self.access_steps(access.page, access.kind, access.phase)
        if seq.compute_us:
            compute = (yield Cpu(seq.compute_us))
            self._charge("compute", compute)
        self.state = SessionState.FINISHED
        report = self.report()
        logger.debug(
            "Session %d finished %s invocation: %.1f us, %d faults",
            self.session_id,
            self.mode.value,
            report.total_us,
            report.faults_served,
        )
        return report

    # -- results ---------------------------------------------------------

    def report(self) -> RestoreReport:
        touched = self.touched
        prefetched = self._prefetched
        used = int(np.count_nonzero(touched[prefetched])) if prefetched.size else 0
        if self._fetch_bytes and self.timers["ws_fetch"] > 0:
            bandwidth = self._fetch_bytes / MIB / (self.timers["ws_fetch"] / 1e6)
        elif self._fault_read_us > 0:
            bandwidth = self._fault_bytes / MIB / (self._fault_read_us / 1e6)
        else:
            bandwidth = 0.0
        return RestoreReport(
            function=self.function,
            mode=self.mode,
            load_vmm_us=self.timers["load_vmm"],
            connection_restore_us=self.timers["connection_restore"],
            ws_fetch_us=self.timers["ws_fetch"],
            ws_install_us=self.timers["ws_install"],
            fault_service_us=self.timers["fault_service"],
            compute_us=self.timers["compute"],
            faults_served=self.faults_served,
            prefetched_pages=int(prefetched.size),
            prefetched_unused=int(prefetched.size) - used,
            pages_touched=int(np.count_nonzero(touched)),
            effective_read_bandwidth_mbps=bandwidth,
            monitor_overhead_us=self._monitor_us,
            bytes_read=self.bytes_read,
            fetch=self.fetch if self.mode is RestoreMode.PREFETCH else None,
        )

    def recorded_trace(self) -> PageTrace:
        if self.mode is not RestoreMode.RECORD:
            raise SessionStateError(f"cannot finalize a {self.mode.value} session")
        if self.state is not SessionState.FINISHED:
            raise SessionStateError("record invocation has not completed")
        return PageTrace(
            self.image.page_size,
            np.array(self.fault_log, dtype=np.uint64),
            self.image.image_id,
        )


def start_session(
    image: SnapshotImage,
    mode: RestoreMode | str,
    storage: StorageModel,
    params: EngineParams,
    trace: PageTrace | None = None,
    ws: WorkingSetFile | None = None,
    *,
    fetch: FetchStrategy | str = FetchStrategy.BULK_BYPASS,
    session_id: int = 0,
    function: str = "",
) -> RestoreSession:
    """Create a session with a cold residency map and run its restore phase."""
    session = RestoreSession(
        image,
        RestoreMode(mode),
        storage,
        params,
        trace,
        ws,
        fetch=FetchStrategy(fetch),
        session_id=session_id,
        function=function,
    )
    run_steps(session.restore_steps(), storage)
    return session


def calibrate_base(session: RestoreSession) -> None:
    run_steps(session.calibration_steps(), session.storage)


def access_page(
    session: RestoreSession,
    page_index: int,
    kind: AccessKind | str = AccessKind.READ,
    phase: Phase | str = Phase.BODY,
) -> float:
    return run_steps(
        session.access_steps(page_index, AccessKind(kind), Phase(phase)), session.storage
    )


def run_invocation(session: RestoreSession, seq: AccessSequence) -> RestoreReport:
    return run_steps(session.invocation_steps(seq), session.storage)


def finalize_record(
    session: RestoreSession, out_dir: str | Path | None = None
) -> tuple[PageTrace, WorkingSetFile]:
    """Turn a finished record session into its trace and WS file, persisting both."""
    trace = session.recorded_trace()
    ws = build_working_set(session.image, trace)
    if out_dir is not None:
        target = Path(out_dir)
        write_trace(trace, target / TRACE_FILE)
        write_working_set(ws, target / WS_FILE)
        logger.info("Recorded %d pages for %s into %s", len(trace), session.function or "?", target)
    return trace, ws


def cold_invocation(
    image: SnapshotImage,
    mode: RestoreMode | str,
    storage: StorageModel,
    params: EngineParams,
    seq: AccessSequence,
    trace: PageTrace | None = None,
    ws: WorkingSetFile | None = None,
    *,
    fetch: FetchStrategy | str = FetchStrategy.BULK_BYPASS,
    function: str = "",
) -> tuple[RestoreSession, RestoreReport]:
    """Restore, calibrate and run one invocation from a cold start."""
    session = start_session(
        image, mode, storage, params, trace, ws, fetch=fetch, function=function
    )
    calibrate_base(session)
    return session, run_invocation(session, seq)


__all__ = [
    "CALIBRATION_PAGE",
    "GuestMemory",
    "RestoreSession",
    "SessionState",
    "TRACE_FILE",
    "WS_FILE",
    "access_page",
    "calibrate_base",
    "cold_invocation",
    "count_regions",
    "finalize_record",
    "run_invocation",
    "start_session",
]
