"""Execution engines shared by the task runtime and the pub/sub baseline.

Both runtimes are expressed as a *machine*: a serialized state object exposing
a priority ready-queue of activations plus begin/finish hooks. Two drivers run
a machine:

* VirtualDriver — single-threaded discrete-event loop over a virtual clock.
  Execution "takes" its declared duration by scheduling the finish as a timer,
  so identical inputs replay identical traces byte for byte.
* WallDriver — a real worker pool plus a timer thread; declared durations are
  busy-spun. Semantically equivalent, but subject to real dispatch overhead.

Activations are dispatched lowest priority value first; ties break on
readiness time, then registration order.
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Protocol

from .clock import Clock, VirtualClock, WallClock
from .model import DagError


class DeadlockError(DagError):
    """No runnable work, no pending timer, and the run is not complete."""

    def __init__(self, detail: str):
        super().__init__(f"deadlock: {detail}")
        self.detail = detail


@dataclass
class Activation:
    """One runnable unit: a loop instance for one trigger/job."""

    loop: Any
    job: int
    ready_time: int
    trigger: Any = None


class ReadyQueue:
    """Priority-ordered runnable set: pop returns the lowest priority value,
    ties broken by (ready_time, registration order, insertion)."""

    def __init__(self):
        self._heap: list[tuple[int, int, int, int, Activation]] = []
        self._seq = itertools.count()

    def push(self, act: Activation) -> None:
        key = (act.loop.priority, act.ready_time, act.loop.order, next(self._seq))
        heapq.heappush(self._heap, (*key, act))

    def pop(self) -> Activation:
        return heapq.heappop(self._heap)[-1]

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


class Scheduler(Protocol):
    def now(self) -> int: ...
    def call_at(self, t: int, fn: Callable[[], None]) -> None: ...
    def locked(self) -> Any: ...


class Machine(Protocol):
    """Serialized runtime state driven by an engine."""

    ready: ReadyQueue

    def bootstrap(self, sched: Scheduler) -> None: ...
    def begin(self, act: Activation, sched: Scheduler,
              mode: str) -> tuple[int, Callable[[], None] | None]: ...
    def finish(self, act: Activation, sched: Scheduler) -> None: ...
    def done(self) -> bool: ...
    def on_quiescent(self, sched: Scheduler) -> None: ...


class VirtualDriver:
    """Deterministic discrete-event loop. All state transitions happen on the
    caller thread; the virtual clock only moves when no work is dispatchable
    at the current instant."""

    def __init__(self, worker_count: int, max_time_ns: int | None = None):
        self.clock = VirtualClock()
        self.worker_count = worker_count
        self.max_time_ns = max_time_ns
        self._timers: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = itertools.count()

    def now(self) -> int:
        return self.clock.now()

    def call_at(self, t: int, fn: Callable[[], None]) -> None:
        if t < self.clock.now():
            raise ValueError("cannot schedule in the past")
        heapq.heappush(self._timers, (t, next(self._seq), fn))

    @contextmanager
    def locked(self) -> Iterator[None]:
        yield  # single-threaded: serialization is structural

    def run(self, machine: Machine) -> None:
        machine.bootstrap(self)
        idle = self.worker_count
        finishers: list[Activation] = []

        def make_finisher(act: Activation) -> Callable[[], None]:
            def fin() -> None:
                finishers.append(act)
            return fin

        while True:
            while machine.ready and idle > 0:
                act = machine.ready.pop()
                idle -= 1
                duration, _body = machine.begin(act, self, "virtual")
                self.call_at(self.clock.now() + duration, make_finisher(act))
            if machine.done():
                return
            if not self._timers:
                machine.on_quiescent(self)
                return
            t = self._timers[0][0]
            if self.max_time_ns is not None and t > self.max_time_ns:
                machine.on_quiescent(self)
                return
            self.clock.advance_to(t)
            while self._timers and self._timers[0][0] == t:
                _, _, fn = heapq.heappop(self._timers)
                fn()
            # completions free their worker after all same-instant timers fired
            for act in finishers:
                machine.finish(act, self)
                idle += 1
            finishers.clear()


def spin_until(clock: Clock, deadline_ns: int) -> None:
    while clock.now() < deadline_ns:
        pass


class WallDriver:
    """Worker pool over real time. The machine is guarded by one lock; user
    code and busy-spins run outside it."""

    def __init__(self, worker_count: int, timeout_s: float | None = None):
        self.clock = WallClock()
        self.worker_count = worker_count
        self.timeout_s = timeout_s
        self._lock = threading.RLock()
        self._work = threading.Condition(self._lock)
        self._timer_cv = threading.Condition(self._lock)
        self._timers: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = itertools.count()
        self._stop = False
        self._busy = 0
        self._error: BaseException | None = None

    def now(self) -> int:
        return self.clock.now()

    def call_at(self, t: int, fn: Callable[[], None]) -> None:
        with self._timer_cv:
            heapq.heappush(self._timers, (t, next(self._seq), fn))
            self._timer_cv.notify_all()

    @contextmanager
    def locked(self) -> Iterator[None]:
        with self._lock:
            try:
                yield
            finally:
                # live callbacks may have readied work for idle workers
                self._work.notify_all()

    def _timer_loop(self, machine: Machine) -> None:
        with self._timer_cv:
            while not self._stop:
                if not self._timers:
                    self._timer_cv.wait(timeout=0.05)
                    continue
                due = self._timers[0][0]
                now = self.clock.now()
                if due > now:
                    self._timer_cv.wait(timeout=min((due - now) / 1e9, 0.05))
                    continue
                _, _, fn = heapq.heappop(self._timers)
                try:
                    fn()
                except BaseException as exc:  # surfaced by run()
                    self._error = exc
                    self._stop = True
                self._work.notify_all()

    def _worker_loop(self, machine: Machine) -> None:
        while True:
            with self._work:
                while not self._stop and not machine.ready:
                    self._work.wait(timeout=0.05)
                if self._stop:
                    return
                act = machine.ready.pop()
                self._busy += 1
                start = self.clock.now()
                try:
                    duration, body = machine.begin(act, self, "wall")
                except BaseException as exc:
                    self._error = exc
                    self._stop = True
                    self._work.notify_all()
                    return
            try:
                if body is not None:
                    body()
                elif duration > 0:
                    spin_until(self.clock, start + duration)
                with self._work:
                    machine.finish(act, self)
                    self._busy -= 1
                    self._work.notify_all()
            except BaseException as exc:
                with self._work:
                    self._error = exc
                    self._stop = True
                    self._work.notify_all()
                return

    def run(self, machine: Machine) -> None:
        machine.bootstrap(self)
        threads = [threading.Thread(target=self._worker_loop, args=(machine,),
                                    name=f"worker-{i}", daemon=True)
                   for i in range(self.worker_count)]
        timer = threading.Thread(target=self._timer_loop, args=(machine,),
                                 name="timer", daemon=True)
        for th in threads:
            th.start()
        timer.start()
        deadline = None if self.timeout_s is None else time.monotonic() + self.timeout_s
        try:
            while True:
                with self._lock:
                    if self._error is not None:
                        break
                    if machine.done():
                        break
                    if (not self._timers and not machine.ready and self._busy == 0):
                        machine.on_quiescent(self)
                        break
                if deadline is not None and time.monotonic() > deadline:
                    raise DeadlockError("wall run exceeded its timeout")
                time.sleep(0.001)
        finally:
            with self._lock:
                self._stop = True
                self._work.notify_all()
                self._timer_cv.notify_all()
            for th in threads:
                th.join(timeout=2.0)
            timer.join(timeout=2.0)
        if self._error is not None:
            raise self._error
