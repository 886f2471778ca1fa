"""Pluggable monotonic clocks: wall time for real runs, virtual time for
deterministic semantics tests and benchmarks."""

from __future__ import annotations

import time


class Clock:
    def now(self) -> int:
        raise NotImplementedError


class WallClock(Clock):
    """Monotonic nanoseconds since construction."""

    def __init__(self):
        self._epoch = time.monotonic_ns()

    def now(self) -> int:
        return time.monotonic_ns() - self._epoch


class VirtualClock(Clock):
    """Simulated clock advanced explicitly by the event loop driving it."""

    def __init__(self, start: int = 0):
        self._now = start

    def now(self) -> int:
        return self._now

    def advance_to(self, t: int) -> None:
        if t < self._now:
            raise ValueError(f"virtual clock cannot go backwards: {self._now} -> {t}")
        self._now = t
