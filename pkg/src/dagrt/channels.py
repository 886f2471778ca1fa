"""Per-subtask message plumbing: bounded topic queues, the AND-join gate that
assembles one input tuple per job index, and the fan-out bundle that releases
all outputs of a completion atomically.

Queues are bounded and block the producer when full; dropping is never an
option because the task model has no lossy semantics. A topic consumed by
several subscribers becomes one queue per subscriber, duplicated at send time,
so every subscriber keeps its own FIFO and index monotonicity.
"""

from __future__ import annotations

import threading
from collections import deque
from contextlib import contextmanager
from typing import Any, Callable, Iterator

from .model import ArityMismatchError, DagError, Message

DEFAULT_CAPACITY = 64


class ChannelError(DagError):
    pass


class IndexGapError(ChannelError):
    """A queue head carries a higher job index than the gate expects. That
    means a message was lost upstream, which the runtime treats as fatal."""


class ShutdownError(ChannelError):
    pass


class TopicQueue:
    """Bounded FIFO of messages for one (topic, subscriber) pair.

    Job indices of enqueued messages must be strictly increasing; violations
    raise immediately instead of corrupting join state downstream. Push and
    pop listeners fire outside the queue lock so observers (gates, fanouts)
    can take their own locks without ordering hazards.
    """

    def __init__(self, topic: str, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.topic = topic
        self.capacity = capacity
        self._items: deque[tuple[Message, int]] = deque()
        self._last_job: int | None = None
        self._lock = threading.Lock()
        self._not_full = threading.Condition(self._lock)
        self._push_listeners: list[Callable[[Message, int], None]] = []
        self._pop_listeners: list[Callable[[], None]] = []

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)

    def add_push_listener(self, fn: Callable[[Message, int], None]) -> None:
        self._push_listeners.append(fn)

    def add_pop_listener(self, fn: Callable[[], None]) -> None:
        self._pop_listeners.append(fn)

    def has_space(self) -> bool:
        with self._lock:
            return len(self._items) < self.capacity

    def push_nowait(self, msg: Message, arrival_ns: int) -> bool:
        with self._lock:
            if len(self._items) >= self.capacity:
                return False
            self._push_locked(msg, arrival_ns)
        self._after_push(msg, arrival_ns)
        return True

    def push(self, msg: Message, arrival_ns: int, timeout: float | None = None) -> None:
        """Blocking push: waits for space (back-pressure), never drops."""
        with self._not_full:
            if not self._not_full.wait_for(
                    lambda: len(self._items) < self.capacity, timeout=timeout):
                raise TimeoutError(f"queue for topic {self.topic!r} stayed full")
            self._push_locked(msg, arrival_ns)
        self._after_push(msg, arrival_ns)

    def _push_locked(self, msg: Message, arrival_ns: int) -> None:
        if msg.topic != self.topic:
            raise ChannelError(f"message for {msg.topic!r} pushed into {self.topic!r}")
        if self._last_job is not None and msg.job <= self._last_job:
            raise ChannelError(
                f"job index must be strictly increasing on {self.topic!r}: "
                f"{self._last_job} then {msg.job}")
        self._last_job = msg.job
        self._items.append((msg, arrival_ns))

    def _after_push(self, msg: Message, arrival_ns: int) -> None:
        for fn in self._push_listeners:
            fn(msg, arrival_ns)

    def head(self) -> tuple[Message, int] | None:
        with self._lock:
            return self._items[0] if self._items else None

    def pop(self) -> tuple[Message, int]:
        with self._lock:
            if not self._items:
                raise ChannelError(f"pop from empty queue {self.topic!r}")
            item = self._items.popleft()
            self._not_full.notify_all()
        for fn in self._pop_listeners:
            fn()
        return item


class JoinGate:
    """Blocks a consumer until one message per input topic for the current job
    index is present, then hands over the aligned tuple.

    Readiness of index k is the arrival of the last message completing k's
    tuple; that instant is recorded regardless of whether the consumer is
    still busy with an earlier job, because readiness belongs to the job, not
    to the consumer's dispatch. The gate is owned by exactly one consumer.
    """

    def __init__(self, in_topics: list[str] | tuple[str, ...],
                 capacity: int = DEFAULT_CAPACITY):
        if not in_topics:
            raise ValueError("a join gate needs at least one input topic")
        self.in_topics = tuple(in_topics)
        self.queues: dict[str, TopicQueue] = {}
        for t in self.in_topics:
            q = TopicQueue(t, capacity)
            q.add_push_listener(self._on_arrival)
            self.queues[t] = q
        self._lock = threading.Lock()
        self._wakeup = threading.Condition(self._lock)
        self._pending: dict[int, list[int]] = {}  # k -> [count, ready, max_publish]
        self._complete: dict[int, tuple[int, int]] = {}  # k -> (ready, max_publish)
        self._fresh: list[tuple[int, int, int]] = []  # completions not yet drained
        self.expected = 0
        self._closed = False

    @property
    def arity(self) -> int:
        return len(self.in_topics)

    def _on_arrival(self, msg: Message, arrival_ns: int) -> None:
        with self._lock:
            entry = self._pending.setdefault(msg.job, [0, 0, 0])
            entry[0] += 1
            entry[1] = max(entry[1], arrival_ns)
            entry[2] = max(entry[2], msg.publish_time)
            if entry[0] == self.arity:
                del self._pending[msg.job]
                self._complete[msg.job] = (entry[1], entry[2])
                self._fresh.append((msg.job, entry[1], entry[2]))
            self._wakeup.notify_all()

    def push(self, topic: str, msg: Message, arrival_ns: int,
             blocking: bool = False) -> list[tuple[int, int, int]]:
        """Deliver a message; returns newly completed (job, ready, max_publish)
        tuples (drains the same buffer as take_completions)."""
        q = self.queues[topic]
        if blocking:
            q.push(msg, arrival_ns)
        elif not q.push_nowait(msg, arrival_ns):
            raise ChannelError(f"gate queue {topic!r} full")
        return self.take_completions()

    def take_completions(self) -> list[tuple[int, int, int]]:
        with self._lock:
            fresh, self._fresh = self._fresh, []
            return fresh

    def ready(self) -> bool:
        with self._lock:
            return self.expected in self._complete

    def ready_info(self, k: int) -> tuple[int, int] | None:
        """(ready_time, max_publish_time) for a completed index, if any."""
        with self._lock:
            return self._complete.get(k)

    def _gap_pending(self) -> bool:
        heads = [self.queues[t].head() for t in self.in_topics]
        return (all(h is not None for h in heads)
                and min(h[0].job for h in heads) > self.expected)  # type: ignore[index]

    def pop_tuple(self) -> tuple[tuple[Any, ...], int, int]:
        """Dequeue the aligned tuple for the expected index.

        Returns (payloads in input-topic order, job index, ready_time) and
        advances the expected index. All payloads carry the same job index.
        """
        with self._lock:
            if self._closed:
                raise ShutdownError("gate closed")
            if self.expected not in self._complete:
                if self._gap_pending():
                    raise IndexGapError(
                        f"expected job {self.expected} but all queue heads are newer")
                raise ChannelError(f"tuple for job {self.expected} not complete")
            k = self.expected
            ready, _ = self._complete.pop(k)
            self.expected += 1
        payloads = []
        for t in self.in_topics:
            msg, _arrival = self.queues[t].pop()
            if msg.job != k:
                raise IndexGapError(f"queue {t!r} head is job {msg.job}, expected {k}")
            payloads.append(msg.payload)
        return tuple(payloads), k, ready

    def recv_all(self, timeout: float | None = None) -> tuple[tuple[Any, ...], int, int]:
        """Blocking receive: suspends (no busy-wait) until the expected index
        is complete, then dequeues it."""
        with self._wakeup:
            ok = self._wakeup.wait_for(
                lambda: self._closed or self.expected in self._complete
                or self._gap_pending(),
                timeout=timeout)
            if not ok:
                raise TimeoutError("recv_all timed out")
            if self._closed:
                raise ShutdownError("gate closed")
            if self.expected not in self._complete and self._gap_pending():
                raise IndexGapError(
                    f"expected job {self.expected} but all queue heads are newer")
        return self.pop_tuple()

    def close(self) -> None:
        with self._lock:
            self._closed = True
            self._wakeup.notify_all()

    def diagnostics(self) -> str:
        depths = {t: len(self.queues[t]) for t in self.in_topics}
        with self._lock:
            return f"expected job {self.expected}, queue depths {depths}"


class Fanout:
    """Atomic multi-topic emission for one producer.

    One send releases exactly one message per output topic, all sharing the
    same publish time and job index; no observer holding the fanout's atomic
    section can see a proper subset of the outputs.
    """

    def __init__(self, out_topics: list[str] | tuple[str, ...],
                 targets: dict[str, list[TopicQueue]]):
        self.out_topics = tuple(out_topics)
        self.targets = {t: list(targets.get(t, [])) for t in self.out_topics}
        self._lock = threading.RLock()
        self._space = threading.Condition(self._lock)
        for queues in self.targets.values():
            for q in queues:
                q.add_pop_listener(self._notify_space)

    def _notify_space(self) -> None:
        with self._space:
            self._space.notify_all()

    @contextmanager
    def atomic(self) -> Iterator[None]:
        """Observers snapshot target queues inside this section to see either
        none or all outputs of any concurrent send."""
        with self._lock:
            yield

    def _all_have_space(self) -> bool:
        return all(q.has_space() for qs in self.targets.values() for q in qs)

    def _build_messages(self, payloads: tuple[Any, ...], job: int,
                        publish_time: int) -> list[Message]:
        if len(payloads) != len(self.out_topics):
            raise ArityMismatchError("send", len(self.out_topics), len(payloads))
        return [Message(t, job, publish_time, p, publish_time)
                for t, p in zip(self.out_topics, payloads)]

    def try_send_all(self, payloads: tuple[Any, ...], job: int,
                     publish_time: int) -> bool:
        """All-or-nothing non-blocking send; False means back-pressure."""
        msgs = self._build_messages(payloads, job, publish_time)
        with self._lock:
            if not self._all_have_space():
                return False
            for msg in msgs:
                for q in self.targets[msg.topic]:
                    q.push_nowait(msg, publish_time)
            return True

    def send_all(self, payloads: tuple[Any, ...], job: int, publish_time: int,
                 timeout: float | None = None) -> None:
        """Blocking send: waits until every target queue has space, then
        enqueues every output inside one atomic section."""
        msgs = self._build_messages(payloads, job, publish_time)
        if not msgs:
            return
        with self._space:
            if not self._space.wait_for(self._all_have_space, timeout=timeout):
                raise TimeoutError("fanout targets stayed full")
            for msg in msgs:
                for q in self.targets[msg.topic]:
                    q.push_nowait(msg, publish_time)
