"""Processor-sharing disk on a simpy virtual clock.

Active transfers progress simultaneously. Each is capped at its solo rate;
fault-class transfers split the fault-path cap and every transfer splits
the device peak, both by max-min fair share.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import simpy

from reapsnap.storage.model import StorageModel, mbps_to_bytes_per_us

logger = logging.getLogger(__name__)

_EPSILON_US = 1e-6


def max_min_share(demands: Sequence[float], capacity: float) -> list[float]:
    """Water-fill ``capacity`` over ``demands``; nobody gets more than asked."""
    shares = [0.0] * len(demands)
    remaining = capacity
    pending = sorted(range(len(demands)), key=lambda i: demands[i])
    while pending:
        fair = remaining / len(pending)
        index = pending[0]
        if demands[index] <= fair:
            shares[index] = demands[index]
            remaining -= demands[index]
            pending.pop(0)
            continue
        for index in pending:
            shares[index] = fair
        break
    return shares


@dataclass(eq=False)
class Transfer:
    owner: int
    nbytes: float
    solo_rate: float
    fault: bool
    submitted_at: float
    done: simpy.Event
    remaining: float = field(init=False)
    rate: float = 0.0

    def __post_init__(self) -> None:
        self.remaining = float(self.nbytes)


class SharedDisk:
    """One storage device shared by every session in a simpy environment."""

    def __init__(self, env: simpy.Environment, storage: StorageModel) -> None:
        self.env = env
        self.storage = storage
        self.peak_rate = mbps_to_bytes_per_us(storage.peak_mbps)
        self.fault_peak_rate = mbps_to_bytes_per_us(storage.fault_peak_mbps)
        self.bytes_submitted = 0.0
        self.bytes_served = 0.0
        self.peak_observed = 0.0
        self._active: list[Transfer] = []
        self._last_update = env.now
        self._wakeup = env.event()
        env.process(self._serve())

    @property
    def active(self) -> int:
        return len(self._active)

    def submit(self, owner: int, nbytes: int, solo_mbps: float, *, fault: bool = False) -> simpy.Event:
        """Queue a transfer; the returned event fires with its completion time."""
        self._advance()
        transfer = Transfer(
            owner=owner,
            nbytes=nbytes,
            solo_rate=mbps_to_bytes_per_us(solo_mbps),
            fault=fault,
            submitted_at=self.env.now,
            done=self.env.event(),
        )
        self.bytes_submitted += nbytes
        self._active.append(transfer)
        self._reallocate()
        if not self._wakeup.triggered:
            self._wakeup.succeed()
        return transfer.done

    def read(self, owner: int, nbytes: int, solo_mbps: float, *, fault: bool = False):
        """Process helper: transfer ``nbytes`` and honour the minimum request latency."""
        started = self.env.now
        yield self.submit(owner, nbytes, solo_mbps, fault=fault)
        floor = self.storage.min_latency_us - (self.env.now - started)
        if floor > 0:
            yield self.env.timeout(floor)
        return self.env.now - started

    def _reallocate(self) -> None:
        faults = [t for t in self._active if t.fault]
        fault_shares = max_min_share([t.solo_rate for t in faults], self.fault_peak_rate)
        for transfer, share in zip(faults, fault_shares):
            transfer.rate = share
        for transfer in self._active:
            if not transfer.fault:
                transfer.rate = transfer.solo_rate
        shares = max_min_share([t.rate for t in self._active], self.peak_rate)
        for transfer, share in zip(self._active, shares):
            transfer.rate = share
        aggregate = sum(shares)
        self.peak_observed = max(self.peak_observed, aggregate)

    def _advance(self) -> None:
        elapsed = self.env.now - self._last_update
        self._last_update = self.env.now
        if elapsed <= 0:
            return
        for transfer in self._active:
            moved = min(transfer.remaining, transfer.rate * elapsed)
            transfer.remaining -= moved
            self.bytes_served += moved

    def _serve(self):
        while True:
            if not self._active:
                self._wakeup = self.env.event()
                yield self._wakeup
                continue
            horizon = min(t.remaining / t.rate for t in self._active)
            self._wakeup = self.env.event()
            yield self._wakeup | self.env.timeout(horizon)
            self._advance()
            finished = [
                t for t in self._active if t.remaining <= t.rate * _EPSILON_US
            ]
            if not finished:
                continue
            for transfer in finished:
                self.bytes_served += transfer.remaining
                transfer.remaining = 0.0
                self._active.remove(transfer)
                transfer.done.succeed(self.env.now)
            self._reallocate()


@dataclass(frozen=True)
class SharedRequest:
    owner: int
    nbytes: int
    bypass: bool = False
    concurrency: int = 1
    submit_at_us: float = 0.0
    fault: bool = False


def shared_schedule(storage: StorageModel, requests: Sequence[SharedRequest]) -> list[float]:
    """Completion time (µs) of each request on one shared device, in input order."""
    env = simpy.Environment()
    disk = SharedDisk(env, storage)
    completions = [0.0] * len(requests)

    def issue(index: int, request: SharedRequest):
        if request.submit_at_us > 0:
            yield env.timeout(request.submit_at_us)
        if request.fault:
            rate = storage.fault_rate_mbps
        else:
            rate = storage.throughput(request.nbytes, request.concurrency, request.bypass)
        yield from disk.read(request.owner, request.nbytes, rate, fault=request.fault)
        completions[index] = env.now

    for index, request in enumerate(requests):
        env.process(issue(index, request))
    env.run()
    logger.debug(
        "Scheduled %d shared requests; %.0f bytes served", len(requests), disk.bytes_served
    )
    return completions


__all__ = ["SharedDisk", "SharedRequest", "Transfer", "max_min_share", "shared_schedule"]
