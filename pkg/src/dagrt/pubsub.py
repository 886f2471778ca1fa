"""Deliberately convention-dependent publish/subscribe runtime.

This is the comparison baseline: callbacks receive a context whose
``publish()`` may be invoked anywhere in the body (including mid-execution),
messages carry an application-managed timestamp, and multi-input callbacks
must pick a timestamp-matching policy. Joining therefore depends on developer
convention, which is exactly the failure surface the task runtime closes off.

Matching policies:

* exact: a set triggers only when every topic buffers a message with the
  incoming stamp; older-stamped messages are purged on emission.
* approximate: on each arrival, the feasible candidate set (one message per
  topic) minimizing (stamp spread, newest stamp) is emitted if its spread is
  within ``max_interval_ns``. Within the winning stamp window the
  earliest-arrived message per topic is chosen; everything older than the
  window start is purged. This is a greedy minimal-spread matcher, not a port
  of any middleware's pivot-based algorithm.

Buffers are bounded (default 10); overflow evicts the oldest message and is
counted as a drop.
"""

from __future__ import annotations

import enum
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .engine import (
    Activation,
    ReadyQueue,
    Scheduler,
    VirtualDriver,
    WallDriver,
    spin_until,
)
from .executor import RuntimeConfig
from .model import DagError, EventKind, UnknownTopicError
from .report import RunReport

log = logging.getLogger("dagrt.pubsub")


@dataclass(frozen=True)
class StampedMessage:
    """A published message. ``stamp`` is the application-set matching key;
    ``publish_time`` and ``job`` are trace truth recorded by the runtime."""

    topic: str
    stamp: int
    payload: Any
    publish_time: int
    job: int


class MatchKind(enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"


@dataclass(frozen=True)
class SyncPolicy:
    kind: MatchKind
    max_interval_ns: int = 0
    queue_size: int = 10

    def __post_init__(self):
        if self.kind is MatchKind.APPROXIMATE and self.max_interval_ns <= 0:
            raise ValueError("approximate matching needs max_interval_ns > 0")
        if self.queue_size < 1:
            raise ValueError("queue_size must be >= 1")


class Synchronizer:
    """Per-topic bounded buffers plus one of the matching policies above.

    A message participates in at most one emitted set, and every emitted set
    holds exactly one message per topic, in topic order.
    """

    def __init__(self, topics: Sequence[str], policy: SyncPolicy):
        if len(topics) < 1:
            raise ValueError("synchronizer needs at least one topic")
        self.topics = tuple(topics)
        self.policy = policy
        self._buf: dict[str, deque[tuple[int, StampedMessage]]] = {
            t: deque() for t in self.topics}
        self._seq = itertools.count()
        self.drops = 0
        self.purged = 0
        self.emissions = 0

    def offer(self, msg: StampedMessage) -> tuple[StampedMessage, ...] | None:
        """Buffer one incoming message; return the matched set if it
        completed one."""
        if msg.topic not in self._buf:
            raise UnknownTopicError("synchronizer", msg.topic)
        buf = self._buf[msg.topic]
        buf.append((next(self._seq), msg))
        if len(buf) > self.policy.queue_size:
            buf.popleft()
            self.drops += 1
        if self.policy.kind is MatchKind.EXACT:
            matched = self._match_exact(msg.stamp)
        else:
            matched = self._match_approx()
        if matched is not None:
            self.emissions += 1
        return matched

    def _match_exact(self, stamp: int) -> tuple[StampedMessage, ...] | None:
        chosen: list[tuple[int, StampedMessage]] = []
        for t in self.topics:
            hit = next(((s, m) for (s, m) in self._buf[t] if m.stamp == stamp), None)
            if hit is None:
                return None
            chosen.append(hit)
        for t, entry in zip(self.topics, chosen):
            self._buf[t].remove(entry)
        self._purge_below(stamp)
        return tuple(m for _s, m in chosen)

    def _match_approx(self) -> tuple[StampedMessage, ...] | None:
        window = self._best_window()
        if window is None:
            return None
        span, hi = window
        if span > self.policy.max_interval_ns:
            return None
        lo = hi - span
        chosen: list[tuple[int, StampedMessage]] = []
        for t in self.topics:
            hit = min((e for e in self._buf[t] if lo <= e[1].stamp <= hi),
                      key=lambda e: e[0])
            chosen.append(hit)
        for t, entry in zip(self.topics, chosen):
            self._buf[t].remove(entry)
        self._purge_below(lo)
        return tuple(m for _s, m in chosen)

    def _best_window(self) -> tuple[int, int] | None:
        """Minimal (stamp spread, newest stamp) over all one-per-topic
        candidate sets, via a coverage sweep over stamp order."""
        if any(not self._buf[t] for t in self.topics):
            return None
        items: list[tuple[int, int]] = []  # (stamp, topic index)
        for idx, t in enumerate(self.topics):
            items.extend((m.stamp, idx) for (_s, m) in self._buf[t])
        items.sort()
        counts = [0] * len(self.topics)
        covered = 0
        best: tuple[int, int] | None = None
        left = 0
        for right, (stamp_r, idx_r) in enumerate(items):
            counts[idx_r] += 1
            if counts[idx_r] == 1:
                covered += 1
            while covered == len(self.topics):
                cand = (stamp_r - items[left][0], stamp_r)
                if best is None or cand < best:
                    best = cand
                counts[items[left][1]] -= 1
                if counts[items[left][1]] == 0:
                    covered -= 1
                left += 1
        return best

    def _purge_below(self, threshold: int) -> None:
        for t in self.topics:
            kept = deque(e for e in self._buf[t] if e[1].stamp >= threshold)
            self.purged += len(self._buf[t]) - len(kept)
            self._buf[t] = kept

    def depths(self) -> dict[str, int]:
        return {t: len(self._buf[t]) for t in self.topics}


def exact_time_match(sync: Synchronizer,
                     incoming: StampedMessage) -> tuple[StampedMessage, ...] | None:
    assert sync.policy.kind is MatchKind.EXACT
    return sync.offer(incoming)


def approx_time_match(sync: Synchronizer,
                      incoming: StampedMessage) -> tuple[StampedMessage, ...] | None:
    assert sync.policy.kind is MatchKind.APPROXIMATE
    return sync.offer(incoming)


# -- graph description ---------------------------------------------------------


@dataclass
class TimerCallback:
    """Periodic callback: ``fn(ctx)`` fired every ``period_ns``; fires on
    schedule even if the previous execution is still queued or running."""

    id: str
    period_ns: int
    fn: Callable[..., None]
    priority: int = 0


@dataclass
class SubscriptionCallback:
    """``fn(msg, ctx)`` per message; executions of one callback serialize."""

    id: str
    topic: str
    fn: Callable[..., None]
    priority: int = 0


@dataclass
class SynchronizedCallback:
    """``fn(msgs, ctx)`` per matched set emitted by the policy."""

    id: str
    topics: tuple[str, ...]
    policy: SyncPolicy
    fn: Callable[..., None]
    priority: int = 0


@dataclass
class PubSubGraph:
    timers: list[TimerCallback] = field(default_factory=list)
    subscriptions: list[SubscriptionCallback] = field(default_factory=list)
    synchronized: list[SynchronizedCallback] = field(default_factory=list)
    topics: list[str] = field(default_factory=list)  # extra declared topics

    def declared_topics(self) -> set[str]:
        declared = set(self.topics)
        declared.update(s.topic for s in self.subscriptions)
        for sc in self.synchronized:
            declared.update(sc.topics)
        return declared

    def validate(self) -> None:
        ids = [c.id for c in (*self.timers, *self.subscriptions, *self.synchronized)]
        if len(ids) != len(set(ids)):
            raise DagError("callback ids must be unique")
        for t in self.timers:
            if t.period_ns <= 0:
                raise ValueError(f"timer {t.id!r}: period must be > 0")


class CallbackContext:
    """Handle passed to every callback: the current trace job label, elapsed
    execution control, and the unconstrained publish primitive."""

    def __init__(self, machine: "_PubSubMachine", publisher_id: str, job: int,
                 start_ns: int, sched: Scheduler, live: bool):
        self._machine = machine
        self._publisher = publisher_id
        self.job = job
        self._start = start_ns
        self._cursor = 0
        self._sched = sched
        self._live = live
        self._publishes: list[tuple[int, str, Any, int | None, int]] = []

    def now(self) -> int:
        if self._live:
            return self._sched.now()
        return self._start + self._cursor

    def advance(self, duration_ns: int) -> None:
        """Consume execution time at this point of the body."""
        if duration_ns < 0:
            raise ValueError("duration must be >= 0")
        if self._live:
            spin_until(self._sched.clock, self._sched.now() + duration_ns)
        else:
            self._cursor += duration_ns

    def publish(self, topic: str, payload: Any, stamp: int | None = None,
                job: int | None = None) -> None:
        """Deliver to all subscribers of ``topic``. May be called anywhere in
        the body; placement is deliberately unconstrained."""
        self._machine.check_topic(topic)
        j = self.job if job is None else job
        if self._live:
            with self._sched.locked():
                self._machine.deliver(self._publisher, topic, payload, stamp, j,
                                      self._sched.now())
        else:
            self._publishes.append((self._cursor, topic, payload, stamp, j))

    def _replayed(self) -> tuple[int, list[tuple[int, str, Any, int | None, int]]]:
        return self._cursor, self._publishes


_IDLE = "idle"
_QUEUED = "queued"
_RUNNING = "running"


class _CbLoop:
    def __init__(self, spec, order: int):
        self.spec = spec
        self.id = spec.id
        self.priority = spec.priority
        self.order = order
        self.state = _IDLE
        self.pending: deque[tuple[Any, int, int]] = deque()  # (trigger, job, arrival)


class _PubSubMachine:
    def __init__(self, graph: PubSubGraph, cfg: RuntimeConfig):
        graph.validate()
        self.graph = graph
        self.cfg = cfg
        self.ready = ReadyQueue()
        self.report = RunReport(mode="pubsub")
        self._declared = graph.declared_topics()
        self.loops: dict[str, _CbLoop] = {}
        order = 0
        for spec in (*graph.timers, *graph.subscriptions, *graph.synchronized):
            self.loops[spec.id] = _CbLoop(spec, order)
            order += 1
        self._subs_by_topic: dict[str, list[_CbLoop]] = {}
        for sub in graph.subscriptions:
            self._subs_by_topic.setdefault(sub.topic, []).append(self.loops[sub.id])
        self.syncs: dict[str, Synchronizer] = {
            sc.id: Synchronizer(sc.topics, sc.policy) for sc in graph.synchronized}
        self._syncs_by_topic: dict[str, list[str]] = {}
        for sc in graph.synchronized:
            for t in sc.topics:
                self._syncs_by_topic.setdefault(t, []).append(sc.id)
        if graph.timers:
            self.report.period_ns = min(t.period_ns for t in graph.timers)
        self.report.joins = {sc.id: tuple(sc.topics) for sc in graph.synchronized}
        self.report.sink_ids = tuple(sc.id for sc in graph.synchronized)

    # -- plumbing ------------------------------------------------------------

    def check_topic(self, topic: str) -> None:
        if topic not in self._declared:
            raise UnknownTopicError("publish", topic)

    def _event(self, kind: EventKind, sid: str, job: int, t: int,
               topic: str | None = None) -> None:
        self.report.add_event(kind, sid, job, t, topic)
        if self.cfg.verbose:
            log.info("%s %s job=%d t=%dns%s", kind.value, sid, job, t,
                     f" topic={topic}" if topic else "")

    def _enqueue(self, loop: _CbLoop, trigger: Any, job: int, arrival: int) -> None:
        if loop.state == _IDLE:
            loop.state = _QUEUED
            self.ready.push(Activation(loop, job, arrival, trigger))
        else:
            loop.pending.append((trigger, job, arrival))

    def deliver(self, publisher: str, topic: str, payload: Any,
                stamp: int | None, job: int, t: int) -> None:
        """Record the publish and fan the message out to plain subscriptions
        and synchronizers. Must run under engine serialization."""
        self.check_topic(topic)
        msg = StampedMessage(topic, t if stamp is None else stamp, payload, t, job)
        self._event(EventKind.PUBLISH, publisher, job, t, topic)
        for loop in self._subs_by_topic.get(topic, ()):
            self._enqueue(loop, msg, job, t)
        for sync_id in self._syncs_by_topic.get(topic, ()):
            sync = self.syncs[sync_id]
            matched = sync.offer(msg)
            if matched is not None:
                ordinal = sync.emissions - 1
                self._event(EventKind.TRIGGER, sync_id, ordinal, t)
                self.report.triggers += 1
                self._enqueue(self.loops[sync_id], matched, ordinal, t)

    # -- engine hooks ----------------------------------------------------------

    def bootstrap(self, sched: Scheduler) -> None:
        for timer in self.graph.timers:
            if self._more_releases(0):
                sched.call_at(0, self._timer_fire(self.loops[timer.id], 0, sched))

    def _more_releases(self, k: int) -> bool:
        if self.cfg.jobs is not None:
            return k < self.cfg.jobs
        assert self.cfg.max_time_ns is not None
        return True  # bounded by the driver's max_time_ns

    def _timer_fire(self, loop: _CbLoop, k: int, sched: Scheduler) -> Callable[[], None]:
        def fire() -> None:
            now = sched.now()
            self._event(EventKind.RELEASE, loop.id, k, now)
            self.report.releases[k] = now
            self.report.jobs_released += 1
            self._enqueue(loop, None, k, now)
            if self._more_releases(k + 1):
                sched.call_at((k + 1) * loop.spec.period_ns,
                              self._timer_fire(loop, k + 1, sched))
        return fire

    def begin(self, act: Activation, sched: Scheduler,
              mode: str) -> tuple[int, Callable[[], None] | None]:
        loop: _CbLoop = act.loop
        loop.state = _RUNNING
        now = sched.now()
        self._event(EventKind.START, loop.id, act.job, now)
        args = self._args_for(loop, act.trigger)
        if mode == "virtual":
            ctx = CallbackContext(self, loop.id, act.job, now, sched, live=False)
            loop.spec.fn(*args, ctx)
            duration, publishes = ctx._replayed()
            for (offset, topic, payload, stamp, job) in publishes:
                sched.call_at(now + offset,
                              self._delivery(loop.id, topic, payload, stamp, job,
                                             now + offset))
            return duration, None

        def body() -> None:
            ctx = CallbackContext(self, loop.id, act.job, now, sched, live=True)
            loop.spec.fn(*args, ctx)

        return 0, body

    def _delivery(self, publisher: str, topic: str, payload: Any,
                  stamp: int | None, job: int, t: int) -> Callable[[], None]:
        return lambda: self.deliver(publisher, topic, payload, stamp, job, t)

    def _args_for(self, loop: _CbLoop, trigger: Any) -> tuple:
        if trigger is None:
            return ()
        return (trigger,)

    def finish(self, act: Activation, sched: Scheduler) -> None:
        loop: _CbLoop = act.loop
        self._event(EventKind.FINISH, loop.id, act.job, sched.now())
        if loop.pending:
            trigger, job, arrival = loop.pending.popleft()
            loop.state = _QUEUED
            self.ready.push(Activation(loop, job, arrival, trigger))
        else:
            loop.state = _IDLE

    def done(self) -> bool:
        return False  # a pub/sub run ends when it goes quiescent

    def on_quiescent(self, sched: Scheduler) -> None:
        self.report.drops = sum(s.drops for s in self.syncs.values())
        self.report.meta["purged"] = sum(s.purged for s in self.syncs.values())


def run_pubsub(graph: PubSubGraph, cfg: RuntimeConfig) -> RunReport:
    """Run the callback graph to quiescence under the configured clock."""
    cfg.validate()
    machine = _PubSubMachine(graph, cfg)
    machine.report.meta.update({
        "clock": cfg.clock,
        "worker_count": cfg.worker_count,
        "jobs": cfg.jobs,
        "seed": cfg.seed,
    })
    if cfg.clock == "virtual":
        driver = VirtualDriver(cfg.worker_count, cfg.max_time_ns)
    else:
        driver = WallDriver(cfg.worker_count, cfg.wall_timeout_s)
    driver.run(machine)
    machine.on_quiescent(driver)  # refresh counters even if done() ended the run
    return machine.report
