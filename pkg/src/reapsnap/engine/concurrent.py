from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import simpy

from reapsnap.core.errors import SessionStateError
from reapsnap.engine.params import EngineParams
from reapsnap.engine.report import FetchStrategy, RestoreMode, RestoreReport
from reapsnap.engine.session import RestoreSession
from reapsnap.engine.steps import Cpu, Steps
from reapsnap.snapshot.image import SnapshotImage
from reapsnap.snapshot.trace import PageTrace
from reapsnap.snapshot.working_set import WorkingSetFile
from reapsnap.storage.calibration import MIB
from reapsnap.storage.model import StorageModel
from reapsnap.storage.shared import SharedDisk
from reapsnap.workload.sequence import AccessSequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConcurrentResult:
    reports: list[RestoreReport]
    completion_us: list[float]
    bytes_read: int
    disk_bytes_served: float
    peak_rate_mbps: float

    @property
    def count(self) -> int:
        return len(self.reports)

    @property
    def makespan_us(self) -> float:
        return max(self.completion_us, default=0.0)

    @property
    def mean_latency_us(self) -> float:
        if not self.reports:
            return 0.0
        return sum(r.total_us for r in self.reports) / len(self.reports)

    @property
    def aggregate_bandwidth_mbps(self) -> float:
        """Guest-memory bytes read by all instances over the time until the last one finished."""
        if self.makespan_us <= 0:
            return 0.0
        return self.bytes_read / MIB / (self.makespan_us / 1e6)


def _execute(env: simpy.Environment, disk: SharedDisk, owner: int, steps: Steps):
    try:
        step = next(steps)
        while True:
            started = env.now
            if isinstance(step, Cpu):
                if step.us > 0:
                    yield env.timeout(step.us)
            else:
                yield from disk.read(owner, step.nbytes, step.mbps, fault=step.fault)
            step = steps.send(env.now - started)
    except StopIteration as stop:
        return stop.value


def run_concurrent(
    image: SnapshotImage,
    storage: StorageModel,
    params: EngineParams,
    mode: RestoreMode | str,
    sequences: Sequence[AccessSequence],
    trace: PageTrace | None = None,
    ws: WorkingSetFile | None = None,
    *,
    fetch: FetchStrategy | str = FetchStrategy.BULK_BYPASS,
    function: str = "",
) -> ConcurrentResult:
    """Cold-start one instance per sequence at time zero, all sharing one disk.

    Sessions are created in index order, which fixes the order of simultaneous
    events and keeps the schedule deterministic.
    """
    env = simpy.Environment()
    disk = SharedDisk(env, storage)
    sessions = [
        RestoreSession(
            image,
            RestoreMode(mode),
            storage,
            params,
            trace,
            ws,
            fetch=FetchStrategy(fetch),
            session_id=index,
            function=function,
        )
        for index in range(len(sequences))
    ]
    reports: list[RestoreReport | None] = [None] * len(sessions)
    completion = [0.0] * len(sessions)

    def drive(session: RestoreSession, seq: AccessSequence):
        owner = session.session_id
        yield from _execute(env, disk, owner, session.restore_steps())
        yield from _execute(env, disk, owner, session.calibration_steps())
        report = yield from _execute(env, disk, owner, session.invocation_steps(seq))
        reports[owner] = report
        completion[owner] = env.now

    for session, seq in zip(sessions, sequences):
        env.process(drive(session, seq))
    env.run()

    finished = [r for r in reports if r is not None]
    if len(finished) != len(sessions):
        raise SessionStateError("concurrent run ended with unfinished sessions")
    result = ConcurrentResult(
        reports=finished,
        completion_us=completion,
        bytes_read=sum(s.bytes_read for s in sessions),
        disk_bytes_served=disk.bytes_served,
        peak_rate_mbps=disk.peak_observed * 1e6 / MIB,
    )
    logger.info(
        "Concurrent %s run: %d instances, mean %.1f ms, aggregate %.1f MB/s",
        RestoreMode(mode).value,
        result.count,
        result.mean_latency_us / 1000,
        result.aggregate_bandwidth_mbps,
    )
    return result


__all__ = ["ConcurrentResult", "run_concurrent"]
