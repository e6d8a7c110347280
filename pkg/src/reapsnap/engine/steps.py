"""Timing steps yielded by session generators.

A session describes its work as a generator of ``Cpu`` and ``Read`` steps and
receives each step's duration back. ``run_steps`` prices steps against a
StorageModel directly; the concurrent runner prices them on a shared disk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Generator, TypeVar, Union

from reapsnap.storage.model import StorageModel

T = TypeVar("T")


@dataclass(frozen=True)
class Cpu:
    us: float


@dataclass(frozen=True)
class Read:
    nbytes: int
    mbps: float
    fault: bool = False


Step = Union[Cpu, Read]
Steps = Generator[Step, float, T]


def run_steps(steps: Steps[T], storage: StorageModel) -> T:
    try:
        step = next(steps)
        while True:
            if isinstance(step, Cpu):
                duration = step.us
            else:
                duration = storage.transfer_us(step.nbytes, step.mbps)
            step = steps.send(duration)
    except StopIteration as stop:
        return stop.value


__all__ = ["Cpu", "Read", "Step", "Steps", "run_steps"]
