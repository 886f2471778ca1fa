"""Shared vocabulary: time units, topics, subtask specs, graphs, messages, events.

All times are monotonic integer nanoseconds since the run epoch. Job indices
count per-graph job instances starting at 0 and are carried explicitly inside
every message so that joins can never mix instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable

MS = 1_000_000


def ms(value: float) -> int:
    """Milliseconds -> integer nanoseconds."""
    return round(value * MS)


# Wildcard payload type tag: matches any other tag.
ANY = object()


def type_tags_compatible(a: object, b: object) -> bool:
    return a is ANY or b is ANY or a == b


class DagError(Exception):
    """Base class for all runtime and construction errors."""


class UnknownTopicError(DagError):
    def __init__(self, subtask: str, topic: str):
        super().__init__(f"subtask {subtask!r} references unknown topic {topic!r}")
        self.subtask = subtask
        self.topic = topic


class IncompleteJobError(DagError):
    def __init__(self, job: int, missing: list[str]):
        super().__init__(f"job {job} incomplete: no finish for sinks {missing}")
        self.job = job
        self.missing = missing


class ArityMismatchError(DagError):
    def __init__(self, what: str, expected: int, got: int):
        super().__init__(f"{what}: expected arity {expected}, got {got}")
        self.expected = expected
        self.got = got


class SubtaskKind(enum.Enum):
    SOURCE = "source"
    INTERMEDIATE = "intermediate"
    SINK = "sink"


@dataclass(frozen=True)
class TopicId:
    """Named, typed in-process data channel. The payload type is fixed by the
    first publisher and is compared only as an opaque tag."""

    name: str
    payload_type: object = ANY


@dataclass
class SubtaskSpec:
    """One vertex of the task graph: a registered function plus its topic wiring
    and scheduler attributes (lower priority value = more urgent)."""

    id: str
    kind: SubtaskKind
    fn: Callable[..., Any]
    in_topics: tuple[str, ...]
    out_topics: tuple[str, ...]
    in_types: tuple[object, ...]
    out_types: tuple[object, ...]
    priority: int = 0
    period_ns: int | None = None  # sources only
    relative_deadline_ns: int | None = None
    order: int = 0  # registration order, used as a deterministic tie-break
    attrs: dict[str, Any] = field(default_factory=dict)


@dataclass
class DagSpec:
    """Mutable registration state: ordered subtasks plus the topic table.

    The topic table holds one entry per *published* topic; subscribing to a
    topic that nobody publishes surfaces at commit time.
    """

    dag_id: str
    subtasks: list[SubtaskSpec] = field(default_factory=list)
    topics: dict[str, TopicId] = field(default_factory=dict)

    def subtask(self, subtask_id: str) -> SubtaskSpec:
        for spec in self.subtasks:
            if spec.id == subtask_id:
                return spec
        raise KeyError(subtask_id)


Edge = tuple[str, str, str]  # (publisher id, subscriber id, topic name)


def derive_edges(dag: DagSpec) -> list[Edge]:
    """Materialize the edge set implied by the topic wiring.

    One edge per (publisher of t, subscriber of t) pair, ordered by subscriber
    registration order then declared input order. Raises UnknownTopicError if a
    subtask consumes a topic that no subtask publishes.
    """
    publishers: dict[str, list[str]] = {}
    for spec in dag.subtasks:
        for topic in spec.out_topics:
            publishers.setdefault(topic, []).append(spec.id)
    edges: list[Edge] = []
    for spec in dag.subtasks:
        for topic in spec.in_topics:
            if topic not in publishers:
                raise UnknownTopicError(spec.id, topic)
            for pub in publishers[topic]:
                edges.append((pub, spec.id, topic))
    return edges


def dangling_topics(dag: DagSpec) -> list[str]:
    """Topics that are published but never consumed (a note, not an error)."""
    consumed = {t for spec in dag.subtasks for t in spec.in_topics}
    return [t for t in dag.topics if t not in consumed]


@dataclass(frozen=True)
class Message:
    """Unit of data flowing over a topic.

    ``publish_time`` is trace truth set exactly once by the emitting runtime;
    ``stamp`` carries whatever the stamping policy dictates and is only used
    for matching in the pub/sub baseline.
    """

    topic: str
    job: int
    stamp: int
    payload: Any
    publish_time: int


class EventKind(enum.Enum):
    RELEASE = "release"
    START = "start"
    FINISH = "finish"
    PUBLISH = "publish"
    JOIN_READY = "join_ready"
    TRIGGER = "trigger"


@dataclass(frozen=True)
class EventRecord:
    """One timestamped trace entry. ``topic`` is set on publish events so that
    join latency can be recomputed from the trace alone."""

    kind: EventKind
    subtask: str
    job: int
    time_ns: int
    topic: str | None = None

    def as_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "kind": self.kind.value,
            "subtask": self.subtask,
            "job": self.job,
            "time_ns": self.time_ns,
        }
        if self.topic is not None:
            d["topic"] = self.topic
        return d
