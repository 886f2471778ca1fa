"""Runs committed graphs: periodic source release, one control loop per
subtask (gate -> call -> fan-out, looping), static-priority dispatch over a
worker pool, and full event tracing.

The enforced semantics are structural: a subtask's outputs are emitted only
when its function returns (there is no emit primitive to misuse), all outputs
of one completion are released atomically with one shared publish time, and a
multi-input subtask becomes ready only when every input holds a message for
the same job index.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from .builder import CommittedDag
from .channels import DEFAULT_CAPACITY, Fanout, JoinGate
from .engine import (
    Activation,
    DeadlockError,
    ReadyQueue,
    Scheduler,
    VirtualDriver,
    WallDriver,
)
from .model import ArityMismatchError, DagError, EventKind, SubtaskKind
from .report import RunReport

log = logging.getLogger("dagrt")


class AlreadyRunningError(DagError):
    pass


DurationProvider = Callable[[str, int], int]


def _as_duration_provider(durations) -> DurationProvider:
    if durations is None:
        return lambda _sid, _k: 0
    if callable(durations):
        return durations
    if isinstance(durations, Mapping):
        table = dict(durations)

        def lookup(sid: str, k: int) -> int:
            if (sid, k) in table:
                return table[(sid, k)]
            return table.get(sid, 0)

        return lookup
    raise TypeError("durations must be a callable, a mapping, or None")


@dataclass
class RuntimeConfig:
    """Execution parameters for one run.

    ``clock`` picks virtual (deterministic, simulated durations) or wall
    (real threads, busy-spun durations). Exactly one of ``jobs`` /
    ``max_time_ns`` bounds the run. ``seed`` is recorded for provenance; the
    runtime itself draws no randomness.
    """

    worker_count: int = field(default_factory=lambda: os.cpu_count() or 4)
    clock: str = "virtual"
    jobs: int | None = None
    max_time_ns: int | None = None
    seed: int = 0
    capacity: int = DEFAULT_CAPACITY
    verbose: bool = False
    wall_timeout_s: float | None = 60.0

    def validate(self) -> None:
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.clock not in ("virtual", "wall"):
            raise ValueError(f"unknown clock mode {self.clock!r}")
        if self.jobs is None and self.max_time_ns is None:
            raise ValueError("set a run limit: jobs or max_time_ns")
        if self.jobs is not None and self.jobs < 0:
            raise ValueError("jobs must be >= 0")


_WAITING = "waiting"
_QUEUED = "queued"
_RUNNING = "running"
_BLOCKED = "blocked_send"
_IDLE = "idle"


class _Loop:
    """Control-loop state for one subtask."""

    def __init__(self, dag: CommittedDag, spec, order: int, capacity: int):
        self.dag = dag
        self.spec = spec
        self.id = spec.id
        self.priority = spec.priority
        self.order = order
        self.gate = JoinGate(spec.in_topics, capacity) if spec.in_topics else None
        self.fanout: Fanout | None = None  # wired after all gates exist
        self.state = _IDLE if spec.kind is SubtaskKind.SOURCE else _WAITING
        self.outputs: tuple[Any, ...] = ()
        self.blocked_job: int | None = None
        self.pending_release: int | None = None
        self.next_release: int = 0

    @property
    def is_source(self) -> bool:
        return self.spec.kind is SubtaskKind.SOURCE

    @property
    def is_sink(self) -> bool:
        return self.spec.kind is SubtaskKind.SINK


class _DagMachine:
    """Engine-facing state machine for a batch of committed graphs."""

    def __init__(self, dags: Sequence[CommittedDag], cfg: RuntimeConfig,
                 durations: DurationProvider):
        self.cfg = cfg
        self.dags = list(dags)
        self.durations = durations
        self.ready = ReadyQueue()
        self.report = RunReport(mode="dag")
        self.loops: dict[str, _Loop] = {}
        self._blocked: list[_Loop] = []
        self._sink_done: dict[tuple[str, int], set[str]] = {}
        self.jobs_target = 0

        order = 0
        for dag in self.dags:
            for sid in dag.topo_order:
                spec = dag.subtasks[sid]
                if sid in self.loops:
                    raise DagError(f"subtask id {sid!r} exists in two committed dags")
                self.loops[sid] = _Loop(dag, spec, order, cfg.capacity)
                order += 1
        for dag in self.dags:
            for sid in dag.topo_order:
                loop = self.loops[sid]
                targets: dict[str, list] = {}
                for topic in loop.spec.out_topics:
                    targets[topic] = [self.loops[sub].gate.queues[topic]
                                      for sub in dag.subscribers(topic)]
                loop.fanout = Fanout(loop.spec.out_topics, targets)

        single = len(self.dags) == 1
        if single:
            dag = self.dags[0]
            self.report.sink_ids = dag.sink_ids
            self.report.period_ns = dag.period_ns
            self.report.relative_deadline_ns = dag.relative_deadline_ns
        else:
            self.report.sink_ids = tuple(s for d in self.dags for s in d.sink_ids)
        self.report.joins = {
            loop.id: loop.spec.in_topics
            for loop in self.loops.values() if loop.gate is not None}
        if cfg.jobs is not None:
            self.jobs_target = cfg.jobs * sum(
                1 for lp in self.loops.values() if lp.is_source)
        self._single_dag = single

    # -- helpers -------------------------------------------------------------

    def _event(self, kind: EventKind, sid: str, job: int, t: int,
               topic: str | None = None) -> None:
        self.report.add_event(kind, sid, job, t, topic)
        if self.cfg.verbose:
            log.info("%s %s job=%d t=%dns%s", kind.value, sid, job, t,
                     f" topic={topic}" if topic else "")

    def _release_key(self, dag: CommittedDag, k: int):
        return k if self._single_dag else f"{dag.dag_id}:{k}"

    def _activate(self, loop: _Loop, job: int, ready_time: int) -> None:
        loop.state = _QUEUED
        self.ready.push(Activation(loop, job, ready_time))

    def _maybe_activate_from_gate(self, loop: _Loop) -> None:
        if loop.state != _WAITING or loop.gate is None:
            return
        info = loop.gate.ready_info(loop.gate.expected)
        if info is not None:
            self._activate(loop, loop.gate.expected, info[0])

    # -- source release ------------------------------------------------------

    def bootstrap(self, sched: Scheduler) -> None:
        for loop in self.loops.values():
            if loop.is_source and self._more_releases(loop):
                sched.call_at(0, self._release_timer(loop, sched))

    def _more_releases(self, loop: _Loop) -> bool:
        if self.cfg.jobs is not None:
            return loop.next_release < self.cfg.jobs
        assert self.cfg.max_time_ns is not None
        period = loop.spec.period_ns or 0
        return loop.next_release * period <= self.cfg.max_time_ns

    def _release_timer(self, loop: _Loop, sched: Scheduler) -> Callable[[], None]:
        def fire() -> None:
            k = loop.next_release
            if loop.state == _IDLE:
                self._release(loop, k, sched)
            else:
                # previous source job still in flight: defer, keep accounting
                loop.pending_release = k
                self.report.overruns += 1
                log.warning("overrun: source %s not finished before release %d",
                            loop.id, k)
        return fire

    def _release(self, loop: _Loop, k: int, sched: Scheduler) -> None:
        now = sched.now()
        self._event(EventKind.RELEASE, loop.id, k, now)
        self.report.releases[self._release_key(loop.dag, k)] = now
        self.report.jobs_released += 1
        self._activate(loop, k, now)
        loop.next_release = k + 1
        if self._more_releases(loop):
            nominal = loop.next_release * (loop.spec.period_ns or 0)
            sched.call_at(max(now, nominal), self._release_timer(loop, sched))

    # -- engine hooks ----------------------------------------------------------

    def begin(self, act: Activation, sched: Scheduler,
              mode: str) -> tuple[int, Callable[[], None] | None]:
        loop: _Loop = act.loop
        now = sched.now()
        if loop.gate is not None:
            payloads, k, _ready = loop.gate.pop_tuple()
            assert k == act.job, f"gate advanced past job {act.job}"
            self._retry_blocked(sched)  # pops freed queue space
        else:
            payloads = ()
        loop.state = _RUNNING
        self._event(EventKind.START, loop.id, act.job, now)
        result = loop.spec.fn(*payloads)
        loop.outputs = self._normalize_outputs(loop, result)
        return self.durations(loop.id, act.job), None

    def _normalize_outputs(self, loop: _Loop, result: Any) -> tuple[Any, ...]:
        arity = len(loop.spec.out_topics)
        if arity == 0:
            return ()
        if not isinstance(result, tuple):
            result = (result,)
        if len(result) != arity:
            raise ArityMismatchError(f"{loop.id} returned", arity, len(result))
        return result

    def finish(self, act: Activation, sched: Scheduler) -> None:
        loop: _Loop = act.loop
        now = sched.now()
        self._event(EventKind.FINISH, loop.id, act.job, now)
        if loop.is_sink:
            self._record_sink_finish(loop, act.job)
            self._to_next_iteration(loop, sched)
            return
        if loop.fanout.try_send_all(loop.outputs, act.job, now):
            self._post_send(loop, act.job, now)
            self._to_next_iteration(loop, sched)
        else:
            loop.state = _BLOCKED
            loop.blocked_job = act.job
            self._blocked.append(loop)

    def _post_send(self, loop: _Loop, job: int, t: int) -> None:
        for topic in loop.spec.out_topics:
            self._event(EventKind.PUBLISH, loop.id, job, t, topic)
        for topic in loop.spec.out_topics:
            for sub in loop.dag.subscribers(topic):
                sub_loop = self.loops[sub]
                for (k, ready, _maxpub) in sub_loop.gate.take_completions():
                    self._event(EventKind.JOIN_READY, sub_loop.id, k, ready)
                self._maybe_activate_from_gate(sub_loop)

    def _to_next_iteration(self, loop: _Loop, sched: Scheduler) -> None:
        loop.outputs = ()
        if loop.is_source:
            loop.state = _IDLE
            if loop.pending_release is not None:
                k, loop.pending_release = loop.pending_release, None
                self._release(loop, k, sched)
        else:
            loop.state = _WAITING
            self._maybe_activate_from_gate(loop)

    def _retry_blocked(self, sched: Scheduler) -> None:
        if not self._blocked:
            return
        still: list[_Loop] = []
        for loop in self._blocked:
            job = loop.blocked_job
            assert job is not None
            if loop.fanout.try_send_all(loop.outputs, job, sched.now()):
                loop.blocked_job = None
                self._post_send(loop, job, sched.now())
                self._to_next_iteration(loop, sched)
            else:
                still.append(loop)
        self._blocked = still

    def _record_sink_finish(self, loop: _Loop, job: int) -> None:
        dag = loop.dag
        done = self._sink_done.setdefault((dag.dag_id, job), set())
        done.add(loop.id)
        if len(done) == len(dag.sink_ids):
            self.report.jobs_completed += 1

    # -- termination -----------------------------------------------------------

    def done(self) -> bool:
        if self.cfg.jobs is None:
            return False  # time-limited runs end via quiescence
        return self.report.jobs_completed >= self.jobs_target

    def on_quiescent(self, sched: Scheduler) -> None:
        if self.cfg.jobs is not None and self.report.jobs_completed < self.jobs_target:
            raise DeadlockError(self.diagnostics())

    def diagnostics(self) -> str:
        parts = []
        for loop in self.loops.values():
            if loop.state == _WAITING and loop.gate is not None:
                parts.append(f"{loop.id}: waiting, {loop.gate.diagnostics()}")
            elif loop.state == _BLOCKED:
                parts.append(f"{loop.id}: send blocked on job {loop.blocked_job}")
        return "; ".join(parts) or "no blocked gates"


class RunHandle:
    """A started run; ``run_to_completion`` drives it to its limit."""

    def __init__(self, machine: _DagMachine, driver):
        self._machine = machine
        self._driver = driver
        self._consumed = False

    def run(self) -> RunReport:
        if self._consumed:
            raise AlreadyRunningError("this handle was already run")
        self._consumed = True
        self._driver.run(self._machine)
        return self._machine.report


class DagRuntime:
    """One-shot runtime: start committed graphs, run them to the limit."""

    def __init__(self, cfg: RuntimeConfig):
        cfg.validate()
        self.cfg = cfg
        self._handle: RunHandle | None = None

    def start(self, dags: Iterable[CommittedDag],
              durations: DurationProvider | Mapping | None = None) -> RunHandle:
        if self._handle is not None:
            raise AlreadyRunningError("runtime already started")
        machine = _DagMachine(list(dags), self.cfg, _as_duration_provider(durations))
        if self.cfg.clock == "virtual":
            driver = VirtualDriver(self.cfg.worker_count, self.cfg.max_time_ns)
        else:
            driver = WallDriver(self.cfg.worker_count, self.cfg.wall_timeout_s)
        machine.report.meta.update({
            "clock": self.cfg.clock,
            "worker_count": self.cfg.worker_count,
            "jobs": self.cfg.jobs,
            "seed": self.cfg.seed,
        })
        self._handle = RunHandle(machine, driver)
        return self._handle


def run_to_completion(handle: RunHandle) -> RunReport:
    return handle.run()


def run_dags(dags: Iterable[CommittedDag], cfg: RuntimeConfig,
             durations: DurationProvider | Mapping | None = None) -> RunReport:
    """Start + run in one call."""
    return DagRuntime(cfg).start(dags, durations).run()
